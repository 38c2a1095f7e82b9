#pragma once

// Stochastic reward net definition: places, timed transitions with
// (optionally marking-dependent) exponential rates, weighted immediate
// transitions with priorities, guards, and first-match-wins reward functions.

#include <patchsec/errors.hpp>
#include <patchsec/srn/guard.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace patchsec::srn {

using Marking = std::vector<int>;

/// constant, or constant * #place.
struct RateExpr {
    double constant = 1.0;
    std::optional<std::string> place;
    std::size_t place_index = unbound;

    static RateExpr fixed(double c) {
        RateExpr r;
        r.constant = c;
        return r;
    }
    static RateExpr per_token(double c, std::string p) {
        RateExpr r;
        r.constant = c;
        r.place = std::move(p);
        return r;
    }

    double evaluate(std::span<const int> m) const {
        return place ? constant * m[place_index] : constant;
    }
};

struct Arc {
    std::size_t place = 0;
    int multiplicity = 1;
};

/// Arc given by place name, used while building a net.
struct ArcRef {
    std::string place;
    int multiplicity = 1;
};

struct Timed {
    RateExpr rate;
};

struct Immediate {
    double weight = 1.0;
    int priority = 0;
};

struct Transition {
    std::string id;
    std::variant<Timed, Immediate> kind;
    GuardExpr guard;
    std::vector<Arc> inputs;
    std::vector<Arc> outputs;

    bool is_timed() const { return std::holds_alternative<Timed>(kind); }
    const Timed& timed() const { return std::get<Timed>(kind); }
    const Immediate& immediate() const { return std::get<Immediate>(kind); }
};

struct Place {
    std::string id;
    int initial_tokens = 0;
};

struct RewardClause {
    GuardExpr guard;
    double value = 0.0;
};

/// Ordered clauses; the first clause whose guard holds gives the reward rate,
/// 0 when none does.
struct RewardFunction {
    std::string name;
    std::vector<RewardClause> clauses;

    double operator()(std::span<const int> m) const {
        for (const auto& c : clauses)
            if (c.guard.evaluate(m)) return c.value;
        return 0.0;
    }
};

class Net {
public:
    std::size_t add_place(std::string id, int tokens = 0) {
        if (id.empty()) throw ModelError("place", "empty place id");
        if (tokens < 0) throw ModelError("place " + id, "negative token count");
        if (place_lookup_.contains(id)) throw ModelError("place " + id, "duplicate place");
        place_lookup_.emplace(id, places_.size());
        places_.push_back({std::move(id), tokens});
        return places_.size() - 1;
    }

    std::size_t add_timed(std::string id, RateExpr rate, const std::vector<ArcRef>& in,
                          const std::vector<ArcRef>& out, GuardExpr guard = {}) {
        if (!(rate.constant > 0.0))
            throw ModelError("transition " + id, "timed rate must be > 0");
        if (rate.place) rate.place_index = require_place(*rate.place, id);
        return add(std::move(id), Timed{std::move(rate)}, in, out, std::move(guard));
    }

    std::size_t add_immediate(std::string id, const std::vector<ArcRef>& in,
                              const std::vector<ArcRef>& out, GuardExpr guard = {},
                              double weight = 1.0, int priority = 0) {
        if (!(weight > 0.0)) throw ModelError("transition " + id, "immediate weight must be > 0");
        if (priority < 0) throw ModelError("transition " + id, "priority must be >= 0");
        return add(std::move(id), Immediate{weight, priority}, in, out, std::move(guard));
    }

    void add_reward(RewardFunction r) {
        for (auto& c : r.clauses) bind_guard(c.guard, "reward " + r.name);
        for (auto& existing : rewards_) {
            if (existing.name == r.name) {
                for (auto& c : r.clauses) existing.clauses.push_back(std::move(c));
                return;
            }
        }
        rewards_.push_back(std::move(r));
    }

    const std::vector<Place>& places() const { return places_; }
    const std::vector<Transition>& transitions() const { return transitions_; }
    const std::vector<RewardFunction>& rewards() const { return rewards_; }

    std::optional<std::size_t> place_index(std::string_view id) const {
        auto it = place_lookup_.find(std::string(id));
        if (it == place_lookup_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t place(std::string_view id) const {
        auto idx = place_index(id);
        if (!idx) throw ModelError("net", "unknown place '" + std::string(id) + "'");
        return *idx;
    }

    std::size_t transition(std::string_view id) const {
        for (std::size_t i = 0; i < transitions_.size(); ++i)
            if (transitions_[i].id == id) return i;
        throw ModelError("net", "unknown transition '" + std::string(id) + "'");
    }

    const RewardFunction& reward(std::string_view name) const {
        for (const auto& r : rewards_)
            if (r.name == name) return r;
        throw ModelError("net", "unknown reward '" + std::string(name) + "'");
    }

    Marking initial_marking() const {
        Marking m;
        m.reserve(places_.size());
        for (const auto& p : places_) m.push_back(p.initial_tokens);
        return m;
    }

    int total_initial_tokens() const {
        int n = 0;
        for (const auto& p : places_) n += p.initial_tokens;
        return n;
    }

    /// Guard holds and every input place holds enough tokens.
    bool enabled(std::size_t t, std::span<const int> m) const {
        const auto& tr = transitions_[t];
        for (const auto& a : tr.inputs)
            if (m[a.place] < a.multiplicity) return false;
        return tr.guard.evaluate(m);
    }

    Marking fire(std::size_t t, std::span<const int> m) const {
        Marking next(m.begin(), m.end());
        const auto& tr = transitions_[t];
        for (const auto& a : tr.inputs) next[a.place] -= a.multiplicity;
        for (const auto& a : tr.outputs) next[a.place] += a.multiplicity;
        return next;
    }

    bool any_immediate_enabled(std::span<const int> m) const {
        for (std::size_t t = 0; t < transitions_.size(); ++t)
            if (!transitions_[t].is_timed() && enabled(t, m)) return true;
        return false;
    }

    /// Enabled immediates of the highest enabled priority.
    std::vector<std::size_t> enabled_immediates(std::span<const int> m) const {
        std::vector<std::size_t> out;
        int best = -1;
        for (std::size_t t = 0; t < transitions_.size(); ++t) {
            const auto& tr = transitions_[t];
            if (tr.is_timed() || !enabled(t, m)) continue;
            const int p = tr.immediate().priority;
            if (p > best) {
                best = p;
                out.clear();
            }
            if (p == best) out.push_back(t);
        }
        return out;
    }

    std::string describe(std::span<const int> m) const {
        std::string s = "{";
        bool first = true;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i] == 0) continue;
            if (!first) s += ", ";
            first = false;
            s += places_[i].id + "=" + std::to_string(m[i]);
        }
        return s + "}";
    }

private:
    std::vector<Place> places_;
    std::map<std::string, std::size_t> place_lookup_;
    std::vector<Transition> transitions_;
    std::vector<RewardFunction> rewards_;

    std::size_t require_place(const std::string& name, const std::string& owner) const {
        auto idx = place_index(name);
        if (!idx) throw ModelError("transition " + owner, "unknown place '" + name + "'");
        return *idx;
    }

    void bind_guard(GuardExpr& g, const std::string& owner) const {
        try {
            bind(g, [this](std::string_view p) { return place_index(p); });
        } catch (const ModelError& e) {
            throw ModelError(owner, e.what());
        }
    }

    std::vector<Arc> resolve(const std::vector<ArcRef>& arcs, const std::string& owner) const {
        std::vector<Arc> out;
        for (const auto& a : arcs) {
            if (a.multiplicity < 1) throw ModelError("transition " + owner, "arc multiplicity must be >= 1");
            out.push_back({require_place(a.place, owner), a.multiplicity});
        }
        return out;
    }

    std::size_t add(std::string id, std::variant<Timed, Immediate> kind, const std::vector<ArcRef>& in,
                    const std::vector<ArcRef>& out, GuardExpr guard) {
        if (id.empty()) throw ModelError("transition", "empty transition id");
        for (const auto& t : transitions_)
            if (t.id == id) throw ModelError("transition " + id, "duplicate transition");
        bind_guard(guard, "transition " + id);
        Transition t{id, std::move(kind), std::move(guard), resolve(in, id), resolve(out, id)};
        transitions_.push_back(std::move(t));
        return transitions_.size() - 1;
    }
};

/// Resolves the place names of a standalone reward against a net.
inline void bind(RewardFunction& r, const Net& net) {
    for (auto& c : r.clauses) bind(c.guard, [&net](std::string_view p) { return net.place_index(p); });
}

} // namespace patchsec::srn

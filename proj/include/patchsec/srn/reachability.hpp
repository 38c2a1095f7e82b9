#pragma once

#include <patchsec/errors.hpp>
#include <patchsec/srn/net.hpp>

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patchsec::srn {

struct StateRef {
    bool vanishing = false;
    std::size_t index = 0;

    auto operator<=>(const StateRef&) const = default;
};

/// From a tangible state `value` is a firing rate; from a vanishing state it is
/// the branch probability of the immediate transition.
struct ReachabilityEdge {
    StateRef from;
    StateRef to;
    std::size_t transition = 0;
    double value = 0.0;
};

struct ReachabilityGraph {
    std::vector<Marking> tangible;
    std::vector<Marking> vanishing;
    std::vector<ReachabilityEdge> edges;
    StateRef initial;
};

struct ReachabilityOptions {
    std::size_t state_cap = 1'000'000;
    /// Per-place token bound; defaults to the net's total initial tokens.
    std::optional<int> token_cap;
};

/// Breadth-first exploration from m0. A marking is vanishing iff an immediate
/// transition is enabled in it; only immediates of the top enabled priority
/// fire there, with weight-proportional probabilities. Timed transitions fire
/// from tangible markings only.
inline ReachabilityGraph reachability(const Net& net, const Marking& m0,
                                      const ReachabilityOptions& opts = {}) {
    if (m0.size() != net.places().size())
        throw ModelError("marking", "initial marking size does not match the place count");
    int cap = 0;
    for (int n : m0) {
        if (n < 0) throw ModelError("marking", "negative token count");
        cap += n;
    }
    if (opts.token_cap) cap = *opts.token_cap;
    cap = std::max(cap, 1);

    ReachabilityGraph g;
    std::map<Marking, StateRef> seen;
    std::deque<Marking> queue;

    auto visit = [&](const Marking& m) -> StateRef {
        if (auto it = seen.find(m); it != seen.end()) return it->second;
        for (std::size_t p = 0; p < m.size(); ++p) {
            if (m[p] > cap)
                throw SolverError("unbounded net: place '" + net.places()[p].id + "' exceeds " +
                                  std::to_string(cap) + " tokens");
        }
        if (seen.size() >= opts.state_cap)
            throw SolverError("state cap of " + std::to_string(opts.state_cap) + " markings exceeded");
        StateRef ref;
        if (net.any_immediate_enabled(m)) {
            ref = {true, g.vanishing.size()};
            g.vanishing.push_back(m);
        } else {
            ref = {false, g.tangible.size()};
            g.tangible.push_back(m);
        }
        seen.emplace(m, ref);
        queue.push_back(m);
        return ref;
    };

    g.initial = visit(m0);
    while (!queue.empty()) {
        Marking m = std::move(queue.front());
        queue.pop_front();
        const StateRef from = seen.at(m);
        if (from.vanishing) {
            const auto imm = net.enabled_immediates(m);
            double total = 0.0;
            for (auto t : imm) total += net.transitions()[t].immediate().weight;
            for (auto t : imm) {
                const auto to = visit(net.fire(t, m));
                g.edges.push_back({from, to, t, net.transitions()[t].immediate().weight / total});
            }
        } else {
            for (std::size_t t = 0; t < net.transitions().size(); ++t) {
                const auto& tr = net.transitions()[t];
                if (!tr.is_timed() || !net.enabled(t, m)) continue;
                const double rate = tr.timed().rate.evaluate(m);
                if (!(rate > 0.0))
                    throw SolverError("transition '" + tr.id + "' is enabled with rate " +
                                      std::to_string(rate) + " in " + net.describe(m));
                const auto to = visit(net.fire(t, m));
                g.edges.push_back({from, to, t, rate});
            }
        }
    }
    return g;
}

} // namespace patchsec::srn

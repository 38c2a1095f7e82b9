#pragma once

// Independent reference computations. None of these call the routines they
// check; they use exhaustive enumeration and dense elimination instead.

#include <patchsec/harm.hpp>
#include <patchsec/model.hpp>
#include <patchsec/srn/net.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline std::string data_file(const std::string& name) { return std::string(PATCHSEC_DATA_DIR) + "/" + name; }

/// Every ordering of every instance subset, kept when it forms a valid path:
/// starts at an entry, follows edges, visits only exploitable instances, and
/// meets a target exactly at its last step.
inline std::vector<std::vector<std::size_t>> brute_force_paths(const patchsec::Harm& h) {
    const std::size_t n = h.instances.size();
    std::set<std::size_t> entries(h.entries.begin(), h.entries.end());
    std::set<std::size_t> targets(h.targets.begin(), h.targets.end());
    auto edge = [&](std::size_t a, std::size_t b) {
        return std::find(h.successors[a].begin(), h.successors[a].end(), b) != h.successors[a].end();
    };
    std::vector<std::vector<std::size_t>> out;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> seq;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) seq.push_back(i);
        do {
            bool ok = entries.contains(seq.front()) && targets.contains(seq.back());
            for (std::size_t k = 0; ok && k < seq.size(); ++k) {
                ok = h.instances[seq[k]].exploitable();
                if (ok && k + 1 < seq.size()) ok = edge(seq[k], seq[k + 1]) && !targets.contains(seq[k]);
            }
            if (ok) out.push_back(seq);
        } while (std::next_permutation(seq.begin(), seq.end()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Per-server availability mu/(lambda+mu).
inline double availability(double lambda, double mu) { return mu / (lambda + mu); }

/// COA by summing over all 2^N up/down configurations of individual servers.
inline double coa_by_configurations(const std::vector<int>& counts, const std::vector<double>& avail) {
    std::vector<std::size_t> tier_of;
    for (std::size_t t = 0; t < counts.size(); ++t)
        for (int r = 0; r < counts[t]; ++r) tier_of.push_back(t);
    const std::size_t n = tier_of.size();
    double acc = 0.0;
    for (unsigned long cfg = 0; cfg < (1ul << n); ++cfg) {
        double p = 1.0;
        std::vector<int> up(counts.size(), 0);
        int total = 0;
        for (std::size_t s = 0; s < n; ++s) {
            const bool is_up = cfg & (1ul << s);
            p *= is_up ? avail[tier_of[s]] : 1.0 - avail[tier_of[s]];
            if (is_up) {
                ++up[tier_of[s]];
                ++total;
            }
        }
        if (std::all_of(up.begin(), up.end(), [](int u) { return u > 0; }))
            acc += p * total / static_cast<double>(n);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Nets

struct ExplicitChain {
    std::vector<patchsec::srn::Marking> tangible;         // sorted
    std::vector<patchsec::srn::Marking> vanishing;        // sorted
    std::vector<std::vector<double>> q;                   // dense generator over tangible
};

/// All markings of `places` places with each count in [0, cap].
inline std::vector<patchsec::srn::Marking> marking_box(std::size_t places, int cap) {
    std::vector<patchsec::srn::Marking> out;
    patchsec::srn::Marking m(places, 0);
    for (;;) {
        out.push_back(m);
        std::size_t i = 0;
        while (i < places && m[i] == cap) m[i++] = 0;
        if (i == places) break;
        ++m[i];
    }
    return out;
}

/// Reachable set by fixpoint over the whole marking box: repeatedly scan
/// every box marking and add successors of already-reached ones.
inline std::set<patchsec::srn::Marking> reachable_by_fixpoint(const patchsec::srn::Net& net, int cap) {
    const auto box = marking_box(net.places().size(), cap);
    std::set<patchsec::srn::Marking> reached{net.initial_marking()};
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& m : box) {
            if (!reached.contains(m)) continue;
            const bool vanishing = net.any_immediate_enabled(m);
            int best = -1;
            if (vanishing)
                for (std::size_t t = 0; t < net.transitions().size(); ++t)
                    if (!net.transitions()[t].is_timed() && net.enabled(t, m))
                        best = std::max(best, net.transitions()[t].immediate().priority);
            for (std::size_t t = 0; t < net.transitions().size(); ++t) {
                const auto& tr = net.transitions()[t];
                if (!net.enabled(t, m)) continue;
                if (vanishing && (tr.is_timed() || tr.immediate().priority != best)) continue;
                if (reached.insert(net.fire(t, m)).second) grew = true;
            }
        }
    }
    return reached;
}

/// Tangible/vanishing split and dense generator. Vanishing markings are
/// resolved by memoized recursion (requires acyclic immediate chains).
inline ExplicitChain explicit_chain(const patchsec::srn::Net& net, int cap) {
    using patchsec::srn::Marking;
    ExplicitChain c;
    for (const auto& m : reachable_by_fixpoint(net, cap))
        (net.any_immediate_enabled(m) ? c.vanishing : c.tangible).push_back(m);
    std::map<Marking, std::size_t> index;
    for (std::size_t i = 0; i < c.tangible.size(); ++i) index[c.tangible[i]] = i;

    std::map<Marking, std::vector<double>> memo;
    std::function<std::vector<double>(const Marking&)> absorb = [&](const Marking& m) {
        if (auto it = memo.find(m); it != memo.end()) return it->second;
        std::vector<double> dist(c.tangible.size(), 0.0);
        if (!net.any_immediate_enabled(m)) {
            dist[index.at(m)] = 1.0;
        } else {
            int best = -1;
            double total = 0.0;
            for (std::size_t t = 0; t < net.transitions().size(); ++t)
                if (!net.transitions()[t].is_timed() && net.enabled(t, m))
                    best = std::max(best, net.transitions()[t].immediate().priority);
            for (std::size_t t = 0; t < net.transitions().size(); ++t) {
                const auto& tr = net.transitions()[t];
                if (!tr.is_timed() && net.enabled(t, m) && tr.immediate().priority == best)
                    total += tr.immediate().weight;
            }
            for (std::size_t t = 0; t < net.transitions().size(); ++t) {
                const auto& tr = net.transitions()[t];
                if (tr.is_timed() || !net.enabled(t, m) || tr.immediate().priority != best) continue;
                const auto sub = absorb(net.fire(t, m));
                for (std::size_t j = 0; j < dist.size(); ++j) dist[j] += tr.immediate().weight / total * sub[j];
            }
        }
        memo[m] = dist;
        return dist;
    };

    const std::size_t n = c.tangible.size();
    c.q.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = c.tangible[i];
        for (std::size_t t = 0; t < net.transitions().size(); ++t) {
            const auto& tr = net.transitions()[t];
            if (!tr.is_timed() || !net.enabled(t, m)) continue;
            const double rate = tr.timed().rate.evaluate(m);
            const auto dist = absorb(net.fire(t, m));
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c.q[i][j] += rate * dist[j];
            }
        }
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row += c.q[i][j];
        c.q[i][i] = -row;
    }
    return c;
}

/// pi Q = 0, sum pi = 1 by dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_stationary(const std::vector<std::vector<double>>& q) {
    const std::size_t n = q.size();
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = q[j][i];  // transpose
    for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
    a[n - 1][n] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0.0) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k <= n; ++k) a[r][k] -= f * a[col][k];
        }
    }
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
    return pi;
}

// ---------------------------------------------------------------------------
// Generators for property tests

/// Conservative random net: every transition moves tokens between places
/// with equal input and output totals. Immediates only move tokens towards
/// higher place indices, so vanishing chains are acyclic.
inline patchsec::srn::Net random_net(std::mt19937& rng, std::size_t max_places = 6) {
    using namespace patchsec::srn;
    std::uniform_int_distribution<std::size_t> place_count(2, max_places);
    const std::size_t np = place_count(rng);
    Net net;
    std::uniform_int_distribution<int> tokens(0, 2);
    int total = 0;
    for (std::size_t i = 0; i < np; ++i) {
        int t = tokens(rng);
        if (i == 0 && t == 0) t = 1;
        total += t;
        net.add_place("p" + std::to_string(i), t);
    }
    std::uniform_int_distribution<std::size_t> pick(0, np - 1);
    std::uniform_real_distribution<double> rate(0.5, 3.0);
    std::uniform_int_distribution<int> coin(0, 3);
    std::uniform_int_distribution<int> small(0, 2);
    const auto name = [](std::size_t i) { return "p" + std::to_string(i); };

    // A timed cycle through all places keeps most chains irreducible.
    for (std::size_t i = 0; i < np; ++i)
        net.add_timed("c" + std::to_string(i), RateExpr::fixed(rate(rng)), {{name(i)}}, {{name((i + 1) % np)}});
    std::uniform_int_distribution<int> extra(0, 4);
    const int n_extra = extra(rng);
    for (int k = 0; k < n_extra; ++k) {
        const auto a = pick(rng), b = pick(rng);
        if (a == b) continue;
        GuardExpr g;
        if (coin(rng) == 0) g = GuardExpr::atom(name(pick(rng)), coin(rng) ? Cmp::ge : Cmp::eq, small(rng));
        const bool immediate = coin(rng) == 0 && a < b;
        const std::string id = "x" + std::to_string(k);
        if (immediate) {
            std::uniform_real_distribution<double> w(0.5, 4.0);
            net.add_immediate(id, {{name(a)}}, {{name(b)}}, g, w(rng), small(rng));
        } else {
            RateExpr r = coin(rng) == 0 ? RateExpr::per_token(rate(rng), name(a)) : RateExpr::fixed(rate(rng));
            net.add_timed(id, r, {{name(a)}}, {{name(b)}}, g);
        }
    }
    (void)total;
    return net;
}

/// Random layered reachability template with <= max_instances instances.
inline patchsec::Model random_model(std::mt19937& rng, std::size_t max_instances = 8) {
    using namespace patchsec;
    Model m;
    std::uniform_int_distribution<int> tier_count(2, 4);
    const int nt = tier_count(rng);
    std::uniform_real_distribution<double> impact(0.0, 10.0), prob(0.05, 1.0);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int t = 0; t < nt; ++t) {
        const std::string tier = "t" + std::to_string(t);
        m.reachability.tiers.push_back(tier);
        ServerTemplate s;
        s.tier = tier;
        const int nv = 1 + coin(rng) + coin(rng);
        std::vector<AttackTreeNode> leaves;
        for (int v = 0; v < nv; ++v) {
            Vulnerability x{tier + "-v" + std::to_string(v), impact(rng), prob(rng), coin(rng) == 1,
                            Component::application};
            s.vulnerabilities.push_back(x);
            leaves.push_back(AttackTreeNode::leaf(x));
        }
        if (leaves.size() >= 2 && coin(rng)) {
            auto last = leaves.back();
            leaves.pop_back();
            auto prev = leaves.back();
            leaves.pop_back();
            leaves.push_back(AttackTreeNode::all_of({prev, last}));
        }
        s.attack_tree = AttackTreeNode::any_of(leaves);
        m.templates.push_back(s);
    }
    for (int t = 0; t + 1 < nt; ++t) m.reachability.edges.emplace_back(m.reachability.tiers[t], m.reachability.tiers[t + 1]);
    // Occasional skip edge and extra entry tier.
    if (nt >= 3 && coin(rng)) m.reachability.edges.emplace_back(m.reachability.tiers[0], m.reachability.tiers[2]);
    m.reachability.entry_tiers.push_back(m.reachability.tiers[0]);
    if (coin(rng)) m.reachability.entry_tiers.push_back(m.reachability.tiers[1]);
    m.reachability.target_tier = m.reachability.tiers.back();

    DesignSpec d;
    d.label = "random";
    std::size_t used = 0;
    std::uniform_int_distribution<int> reps(1, 3);
    for (int t = 0; t < nt; ++t) {
        const std::size_t left = max_instances - used - static_cast<std::size_t>(nt - t - 1);
        const int c = std::min<int>(reps(rng), static_cast<int>(left));
        d.counts[m.reachability.tiers[t]] = c;
        used += static_cast<std::size_t>(c);
    }
    m.designs.push_back(d);
    return m;
}

} // namespace oracle

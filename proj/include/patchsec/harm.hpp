#pragma once

// Two-layer attack representation: an upper reachability graph over server
// instances and one attack tree per instance, plus the security metrics
// aggregated vulnerability -> node -> path -> network.

#include <patchsec/model.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace patchsec {

struct ServerInstance {
    std::string id;        // "web2"
    std::size_t tier = 0;  // index into the reachability tier list
    int replica = 0;       // 0-based
    AttackTree tree;

    bool exploitable() const { return tree.has_value(); }
};

struct Harm {
    std::vector<ServerInstance> instances;
    std::vector<std::vector<std::size_t>> successors;  // upper-layer edges, sorted
    std::vector<std::size_t> entries;                  // attacker -> instance edges
    std::vector<std::size_t> targets;

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& s : successors) n += s.size();
        return n;
    }
};

struct AttackPath {
    std::vector<std::size_t> instances;

    auto operator<=>(const AttackPath&) const = default;
};

struct PathMetrics {
    double impact = 0.0;
    double probability = 0.0;
};

struct SecurityMetrics {
    double aim = 0.0;
    double asp = 0.0;
    long noev = 0;
    long noap = 0;
    long noep = 0;
};

/// Expands the tier template over the design's replica counts. Tier-to-tier
/// edges become complete bipartite edges between the replicas. When patched,
/// every tree is pruned by the model's patch policy first; instances left with
/// an empty tree are kept but never act as entry points or path members.
inline Harm build_harm(const Model& model, const DesignSpec& design, bool patched) {
    const auto& reach = model.reachability;
    Harm h;
    std::vector<std::vector<std::size_t>> by_tier(reach.tiers.size());
    for (std::size_t t = 0; t < reach.tiers.size(); ++t) {
        const auto& name = reach.tiers[t];
        auto tmpl = model.server(name);
        if (patched) tmpl = apply_patch_policy(tmpl, model.policy);
        for (int r = 0; r < design.count(name); ++r) {
            by_tier[t].push_back(h.instances.size());
            h.instances.push_back({name + std::to_string(r + 1), t, r, tmpl.attack_tree});
        }
    }
    h.successors.resize(h.instances.size());
    for (const auto& [from, to] : reach.edges) {
        const auto a = *reach.tier_index(from);
        const auto b = *reach.tier_index(to);
        for (auto i : by_tier[a])
            for (auto j : by_tier[b])
                if (i != j) h.successors[i].push_back(j);
    }
    for (auto& s : h.successors) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    for (std::size_t i = 0; i < h.instances.size(); ++i) {
        const auto& inst = h.instances[i];
        if (!inst.exploitable()) continue;
        if (reach.is_entry(reach.tiers[inst.tier])) h.entries.push_back(i);
        if (reach.tiers[inst.tier] == reach.target_tier) h.targets.push_back(i);
    }
    return h;
}

/// All simple paths entry -> target through exploitable instances. A path ends
/// at the first target it reaches. Paths are returned in lexicographic order of
/// their instance sequences.
inline std::vector<AttackPath> enumerate_attack_paths(const Harm& h) {
    std::vector<AttackPath> paths;
    std::vector<bool> is_target(h.instances.size(), false);
    for (auto t : h.targets) is_target[t] = true;

    std::vector<bool> on_path(h.instances.size(), false);
    std::vector<std::size_t> stack;
    auto dfs = [&](auto&& self, std::size_t v) -> void {
        stack.push_back(v);
        on_path[v] = true;
        if (is_target[v]) {
            paths.push_back({stack});
        } else {
            for (auto w : h.successors[v])
                if (!on_path[w] && h.instances[w].exploitable()) self(self, w);
        }
        on_path[v] = false;
        stack.pop_back();
    };
    for (auto e : h.entries) dfs(dfs, e);
    std::sort(paths.begin(), paths.end());
    return paths;
}

/// OR takes the maximum, AND the sum of its children. nullopt for an empty tree.
inline std::optional<double> tree_impact(const AttackTree& tree) {
    if (!tree) return std::nullopt;
    auto rec = [](auto&& self, const AttackTreeNode& n) -> double {
        switch (n.kind) {
        case AttackTreeNode::Kind::leaf: return n.vuln.attack_impact;
        case AttackTreeNode::Kind::all_of: {
            double s = 0.0;
            for (const auto& c : n.children) s += self(self, c);
            return s;
        }
        case AttackTreeNode::Kind::any_of: {
            double m = 0.0;
            for (const auto& c : n.children) m = std::max(m, self(self, c));
            return m;
        }
        }
        return 0.0;
    };
    return rec(rec, *tree);
}

/// OR takes the maximum, AND the product of its children. nullopt for an empty tree.
inline std::optional<double> tree_probability(const AttackTree& tree) {
    if (!tree) return std::nullopt;
    auto rec = [](auto&& self, const AttackTreeNode& n) -> double {
        switch (n.kind) {
        case AttackTreeNode::Kind::leaf: return n.vuln.attack_success_prob;
        case AttackTreeNode::Kind::all_of: {
            double p = 1.0;
            for (const auto& c : n.children) p *= self(self, c);
            return p;
        }
        case AttackTreeNode::Kind::any_of: {
            double m = 0.0;
            for (const auto& c : n.children) m = std::max(m, self(self, c));
            return m;
        }
        }
        return 0.0;
    };
    return rec(rec, *tree);
}

/// Sum of node impacts, product of node probabilities.
inline PathMetrics path_metrics(const Harm& h, const AttackPath& path) {
    PathMetrics m{0.0, 1.0};
    for (auto i : path.instances) {
        const auto& tree = h.instances[i].tree;
        m.impact += tree_impact(tree).value_or(0.0);
        m.probability *= tree_probability(tree).value_or(0.0);
    }
    return m;
}

/// Network metrics. ASP combines the paths as independent alternatives
/// (1 - prod(1 - p_path)); NoEV counts vulnerabilities per replica.
inline SecurityMetrics network_metrics(const Harm& h) {
    SecurityMetrics m;
    const auto paths = enumerate_attack_paths(h);
    double miss = 1.0;
    for (const auto& p : paths) {
        const auto pm = path_metrics(h, p);
        m.aim = std::max(m.aim, pm.impact);
        miss *= 1.0 - pm.probability;
    }
    m.asp = paths.empty() ? 0.0 : 1.0 - miss;
    for (const auto& inst : h.instances)
        if (inst.exploitable()) m.noev += static_cast<long>(leaf_ids(inst.tree).size());
    m.noap = static_cast<long>(paths.size());
    m.noep = static_cast<long>(h.entries.size());
    return m;
}

} // namespace patchsec

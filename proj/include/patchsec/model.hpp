#pragma once

// Domain types for a tiered server network: vulnerability catalog, per-server
// attack trees, failure/recovery/patch durations, reachability between tiers,
// redundancy designs, patch policy and administrator bounds.

#include <patchsec/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace patchsec {

/// A duration in hours. Minute-valued inputs are converted on construction.
/// An infinite duration (a component that never fails) has rate 0.
struct Hours {
    double value = 0.0;

    static constexpr Hours from_minutes(double minutes) { return Hours{minutes / 60.0}; }
    constexpr double minutes() const { return value * 60.0; }
    constexpr double rate() const { return 1.0 / value; }

    auto operator<=>(const Hours&) const = default;
};

enum class Component { os, application };

inline std::string_view to_string(Component c) {
    return c == Component::os ? "os" : "application";
}

struct Vulnerability {
    std::string id;
    double attack_impact = 0.0;        // [0, 10]
    double attack_success_prob = 0.0;  // [0, 1]
    bool critical = false;
    Component component = Component::application;

    bool operator==(const Vulnerability&) const = default;
};

/// AND/OR attack tree over the vulnerabilities of one server. Leaves carry a
/// copy of the vulnerability they stand for.
struct AttackTreeNode {
    enum class Kind { leaf, all_of, any_of };

    Kind kind = Kind::leaf;
    Vulnerability vuln;                   // leaf only
    std::vector<AttackTreeNode> children; // all_of / any_of only

    static AttackTreeNode leaf(Vulnerability v) {
        AttackTreeNode n;
        n.kind = Kind::leaf;
        n.vuln = std::move(v);
        return n;
    }
    static AttackTreeNode all_of(std::vector<AttackTreeNode> c) {
        AttackTreeNode n;
        n.kind = Kind::all_of;
        n.children = std::move(c);
        return n;
    }
    static AttackTreeNode any_of(std::vector<AttackTreeNode> c) {
        AttackTreeNode n;
        n.kind = Kind::any_of;
        n.children = std::move(c);
        return n;
    }

    bool operator==(const AttackTreeNode&) const = default;
};

/// Empty optional: the server has no exploitable vulnerability.
using AttackTree = std::optional<AttackTreeNode>;

/// Ids of the leaves of a tree, sorted and deduplicated.
inline std::vector<std::string> leaf_ids(const AttackTree& tree) {
    std::set<std::string> ids;
    std::function<void(const AttackTreeNode&)> walk = [&](const AttackTreeNode& n) {
        if (n.kind == AttackTreeNode::Kind::leaf) {
            ids.insert(n.vuln.id);
            return;
        }
        for (const auto& c : n.children) walk(c);
    };
    if (tree) walk(*tree);
    return {ids.begin(), ids.end()};
}

/// One server type (tier). All means are stored in hours.
struct ServerTemplate {
    std::string tier;
    std::vector<Vulnerability> vulnerabilities;
    AttackTree attack_tree;

    Hours hw_mttf{87600};
    Hours hw_mttr{1};
    Hours os_mttf{1440};
    Hours os_mttr{1};
    Hours os_patch_mean = Hours::from_minutes(20);
    Hours os_reboot_after_patch = Hours::from_minutes(10);
    Hours os_reboot_after_failure = Hours::from_minutes(10);
    Hours svc_mttf{336};
    Hours svc_mttr = Hours::from_minutes(30);
    Hours svc_patch_mean = Hours::from_minutes(5);
    Hours svc_reboot_after_patch = Hours::from_minutes(5);
    Hours svc_reboot_after_failure = Hours::from_minutes(5);

    bool operator==(const ServerTemplate&) const = default;
};

enum class TimeUnit { hours, minutes };

struct DurationField {
    std::string_view name;
    TimeUnit unit;
    Hours ServerTemplate::*member;
};

/// Duration fields of ServerTemplate with the unit used in model files.
inline constexpr std::array<DurationField, 12> duration_fields{{
    {"hw_mttf", TimeUnit::hours, &ServerTemplate::hw_mttf},
    {"hw_mttr", TimeUnit::hours, &ServerTemplate::hw_mttr},
    {"os_mttf", TimeUnit::hours, &ServerTemplate::os_mttf},
    {"os_mttr", TimeUnit::hours, &ServerTemplate::os_mttr},
    {"os_patch_mean", TimeUnit::minutes, &ServerTemplate::os_patch_mean},
    {"os_reboot_after_patch", TimeUnit::minutes, &ServerTemplate::os_reboot_after_patch},
    {"os_reboot_after_failure", TimeUnit::minutes, &ServerTemplate::os_reboot_after_failure},
    {"svc_mttf", TimeUnit::hours, &ServerTemplate::svc_mttf},
    {"svc_mttr", TimeUnit::minutes, &ServerTemplate::svc_mttr},
    {"svc_patch_mean", TimeUnit::minutes, &ServerTemplate::svc_patch_mean},
    {"svc_reboot_after_patch", TimeUnit::minutes, &ServerTemplate::svc_reboot_after_patch},
    {"svc_reboot_after_failure", TimeUnit::minutes, &ServerTemplate::svc_reboot_after_failure},
}};

inline const DurationField* find_duration_field(std::string_view name) {
    for (const auto& f : duration_fields)
        if (f.name == name) return &f;
    return nullptr;
}

inline Hours to_hours(double value, TimeUnit unit) {
    return unit == TimeUnit::hours ? Hours{value} : Hours::from_minutes(value);
}

inline double from_hours(Hours h, TimeUnit unit) {
    return unit == TimeUnit::hours ? h.value : h.minutes();
}

struct ReachabilityTemplate {
    std::vector<std::string> tiers;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::string> entry_tiers;
    std::string target_tier;

    std::optional<std::size_t> tier_index(std::string_view tier) const {
        auto it = std::find(tiers.begin(), tiers.end(), tier);
        if (it == tiers.end()) return std::nullopt;
        return static_cast<std::size_t>(it - tiers.begin());
    }

    bool is_entry(std::string_view tier) const {
        return std::find(entry_tiers.begin(), entry_tiers.end(), tier) != entry_tiers.end();
    }

    bool operator==(const ReachabilityTemplate&) const = default;
};

/// Replica count per tier.
struct DesignSpec {
    std::string label;
    std::map<std::string, int> counts;

    int count(const std::string& tier) const {
        auto it = counts.find(tier);
        return it == counts.end() ? 0 : it->second;
    }

    bool operator==(const DesignSpec&) const = default;
};

/// "1/2/2/1" in tier order.
inline std::string counts_label(const DesignSpec& d, const std::vector<std::string>& tiers) {
    std::string out;
    for (const auto& t : tiers) {
        if (!out.empty()) out += '/';
        out += std::to_string(d.count(t));
    }
    return out;
}

struct PatchPolicy {
    Hours interval{720};
    std::function<bool(const Vulnerability&)> selector = [](const Vulnerability& v) {
        return v.critical;
    };
};

/// Administrator bounds. asp_upper/coa_lower default to vacuous values; the
/// count bounds are only used by the five-metric filter.
struct Bounds {
    double asp_upper = 1.0;
    double coa_lower = 0.0;
    std::optional<long> noev_upper;
    std::optional<long> noap_upper;
    std::optional<long> noep_upper;

    bool has_count_bounds() const { return noev_upper || noap_upper || noep_upper; }
    bool has_all_count_bounds() const { return noev_upper && noap_upper && noep_upper; }

    bool operator==(const Bounds&) const = default;
};

struct Model {
    ReachabilityTemplate reachability;
    std::vector<ServerTemplate> templates;  // one per tier, in tier order
    std::vector<DesignSpec> designs;
    PatchPolicy policy;
    std::vector<Bounds> bounds;

    const ServerTemplate& server(std::string_view tier) const {
        for (const auto& t : templates)
            if (t.tier == tier) return t;
        throw ModelError(std::string("servers.") + std::string(tier), "no such tier");
    }

    ServerTemplate& server(std::string_view tier) {
        return const_cast<ServerTemplate&>(std::as_const(*this).server(tier));
    }

    const DesignSpec& design(std::string_view label) const {
        for (const auto& d : designs)
            if (d.label == label) return d;
        throw ModelError("designs", "no design labelled '" + std::string(label) + "'");
    }
};

// ---------------------------------------------------------------------------
// Patch policy

namespace detail {

inline AttackTree prune(const AttackTreeNode& node,
                        const std::function<bool(const Vulnerability&)>& patched) {
    switch (node.kind) {
    case AttackTreeNode::Kind::leaf:
        if (patched(node.vuln)) return std::nullopt;
        return node;
    case AttackTreeNode::Kind::all_of: {
        std::vector<AttackTreeNode> kept;
        for (const auto& c : node.children) {
            auto p = prune(c, patched);
            if (!p) return std::nullopt;
            kept.push_back(std::move(*p));
        }
        return AttackTreeNode::all_of(std::move(kept));
    }
    case AttackTreeNode::Kind::any_of: {
        std::vector<AttackTreeNode> kept;
        for (const auto& c : node.children) {
            if (auto p = prune(c, patched)) kept.push_back(std::move(*p));
        }
        if (kept.empty()) return std::nullopt;
        return AttackTreeNode::any_of(std::move(kept));
    }
    }
    return std::nullopt;
}

} // namespace detail

/// Removes every vulnerability matched by the policy selector. An AND node
/// loses its whole subtree when any conjunct is patched; an OR node disappears
/// once all of its alternatives are gone.
inline ServerTemplate apply_patch_policy(const ServerTemplate& tmpl, const PatchPolicy& policy) {
    ServerTemplate out = tmpl;
    out.attack_tree = tmpl.attack_tree ? detail::prune(*tmpl.attack_tree, policy.selector)
                                       : std::nullopt;
    std::erase_if(out.vulnerabilities, [&](const Vulnerability& v) { return policy.selector(v); });
    return out;
}

// ---------------------------------------------------------------------------
// Model file (JSON)

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) throw ModelError(path, "expected an object");
    auto it = obj.find(std::string(key));
    if (it == obj.end()) throw ModelError(path, "missing key '" + std::string(key) + "'");
    return *it;
}

inline std::string join_path(const std::string& base, std::string_view key) {
    return base.empty() ? std::string(key) : base + "." + std::string(key);
}

inline std::string index_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

inline std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ModelError(path, "expected a string");
    return v.get<std::string>();
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ModelError(path, "expected a number");
    return v.get<double>();
}

inline long get_count(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ModelError(path, "expected an integer");
    return v.get<long>();
}

inline std::vector<std::string> get_string_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ModelError(path, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_string(v[i], index_path(path, i)));
    return out;
}

inline AttackTreeNode parse_tree(const json& v, const std::string& path,
                                 const std::vector<Vulnerability>& catalog) {
    if (!v.is_object() || v.size() != 1)
        throw ModelError(path, "attack tree node must be an object with one of 'or', 'and', 'vuln'");
    if (auto it = v.find("vuln"); it != v.end()) {
        auto id = get_string(*it, join_path(path, "vuln"));
        for (const auto& vuln : catalog)
            if (vuln.id == id) return AttackTreeNode::leaf(vuln);
        throw ModelError(join_path(path, "vuln"), "unknown vulnerability '" + id + "' on this server");
    }
    const bool is_or = v.contains("or");
    if (!is_or && !v.contains("and"))
        throw ModelError(path, "attack tree node must be an object with one of 'or', 'and', 'vuln'");
    const std::string key = is_or ? "or" : "and";
    const auto& arr = v.at(key);
    const auto cpath = join_path(path, key);
    if (!arr.is_array() || arr.empty()) throw ModelError(cpath, "expected a nonempty array");
    std::vector<AttackTreeNode> children;
    for (std::size_t i = 0; i < arr.size(); ++i)
        children.push_back(parse_tree(arr[i], index_path(cpath, i), catalog));
    return is_or ? AttackTreeNode::any_of(std::move(children))
                 : AttackTreeNode::all_of(std::move(children));
}

inline json tree_to_json(const AttackTreeNode& n) {
    if (n.kind == AttackTreeNode::Kind::leaf) return json{{"vuln", n.vuln.id}};
    json arr = json::array();
    for (const auto& c : n.children) arr.push_back(tree_to_json(c));
    return json{{n.kind == AttackTreeNode::Kind::any_of ? "or" : "and", arr}};
}

inline void check_tier_path(const ReachabilityTemplate& r) {
    std::set<std::string> seen(r.entry_tiers.begin(), r.entry_tiers.end());
    std::vector<std::string> frontier(r.entry_tiers.begin(), r.entry_tiers.end());
    while (!frontier.empty()) {
        auto t = frontier.back();
        frontier.pop_back();
        for (const auto& [from, to] : r.edges)
            if (from == t && seen.insert(to).second) frontier.push_back(to);
    }
    if (!seen.contains(r.target_tier))
        throw ModelError("reachability", "target tier '" + r.target_tier +
                                             "' is not reachable from any entry tier");
}

inline Bounds parse_bounds(const json& v, const std::string& path) {
    if (!v.is_object()) throw ModelError(path, "expected an object");
    Bounds b;
    for (const auto& [key, val] : v.items()) {
        const auto p = join_path(path, key);
        if (key == "phi" || key == "psi") {
            double x = get_number(val, p);
            if (!(x >= 0.0 && x <= 1.0)) throw ModelError(p, "probability outside [0,1]");
            (key == "phi" ? b.asp_upper : b.coa_lower) = x;
        } else if (key == "xi" || key == "omega" || key == "kappa") {
            long x = get_count(val, p);
            if (x < 0) throw ModelError(p, "count bound must be >= 0");
            (key == "xi" ? b.noev_upper : key == "omega" ? b.noap_upper : b.noep_upper) = x;
        } else {
            throw ModelError(p, "unknown bound (expected phi, psi, xi, omega, kappa)");
        }
    }
    return b;
}

} // namespace detail

inline void validate_duration(Hours h, const std::string& path) {
    if (!(h.value > 0.0)) throw ModelError(path, "duration must be > 0");
}

/// Parses and validates a model document. Every error names the offending field.
inline Model load_model(const nlohmann::json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ModelError("", "model document must be a JSON object");

    Model m;
    auto& r = m.reachability;
    r.tiers = get_string_list(require(doc, "tiers", ""), "tiers");
    if (r.tiers.empty()) throw ModelError("tiers", "no tiers");
    {
        std::set<std::string> uniq;
        for (std::size_t i = 0; i < r.tiers.size(); ++i) {
            if (r.tiers[i].empty()) throw ModelError(index_path("tiers", i), "empty tier id");
            if (!uniq.insert(r.tiers[i]).second)
                throw ModelError(index_path("tiers", i), "duplicate tier '" + r.tiers[i] + "'");
        }
    }
    auto known_tier = [&](const std::string& t, const std::string& path) {
        if (!r.tier_index(t)) throw ModelError(path, "unknown tier '" + t + "'");
    };

    const auto& reach = require(doc, "reachability", "");
    const auto& edges = require(reach, "edges", "reachability");
    if (!edges.is_array()) throw ModelError("reachability.edges", "expected an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto p = index_path("reachability.edges", i);
        auto pair = get_string_list(edges[i], p);
        if (pair.size() != 2) throw ModelError(p, "edge must be a [from, to] pair");
        known_tier(pair[0], p);
        known_tier(pair[1], p);
        r.edges.emplace_back(pair[0], pair[1]);
    }
    r.entry_tiers = get_string_list(require(reach, "entry_tiers", "reachability"),
                                    "reachability.entry_tiers");
    if (r.entry_tiers.empty()) throw ModelError("reachability.entry_tiers", "no entry tiers");
    for (std::size_t i = 0; i < r.entry_tiers.size(); ++i)
        known_tier(r.entry_tiers[i], index_path("reachability.entry_tiers", i));
    r.target_tier = get_string(require(reach, "target_tier", "reachability"),
                               "reachability.target_tier");
    known_tier(r.target_tier, "reachability.target_tier");
    check_tier_path(r);

    // Vulnerability catalog, grouped by owning tier.
    std::map<std::string, std::vector<Vulnerability>> catalog;
    const auto& vulns = require(doc, "vulnerabilities", "");
    if (!vulns.is_array()) throw ModelError("vulnerabilities", "expected an array");
    for (std::size_t i = 0; i < vulns.size(); ++i) {
        const auto p = index_path("vulnerabilities", i);
        const auto& row = vulns[i];
        Vulnerability v;
        v.id = get_string(require(row, "id", p), join_path(p, "id"));
        if (v.id.empty()) throw ModelError(join_path(p, "id"), "empty vulnerability id");
        auto tier = get_string(require(row, "tier", p), join_path(p, "tier"));
        known_tier(tier, join_path(p, "tier"));
        v.attack_impact = get_number(require(row, "impact", p), join_path(p, "impact"));
        if (!(v.attack_impact >= 0.0 && v.attack_impact <= 10.0))
            throw ModelError(join_path(p, "impact"), v.id + ": attack impact outside [0,10]");
        v.attack_success_prob =
            get_number(require(row, "probability", p), join_path(p, "probability"));
        if (!(v.attack_success_prob >= 0.0 && v.attack_success_prob <= 1.0))
            throw ModelError(join_path(p, "probability"),
                             v.id + ": attack success probability outside [0,1]");
        const auto& crit = require(row, "critical", p);
        if (!crit.is_boolean()) throw ModelError(join_path(p, "critical"), "expected a boolean");
        v.critical = crit.get<bool>();
        auto comp = get_string(require(row, "component", p), join_path(p, "component"));
        if (comp == "os") v.component = Component::os;
        else if (comp == "application") v.component = Component::application;
        else throw ModelError(join_path(p, "component"), "expected 'os' or 'application'");
        auto& list = catalog[tier];
        for (const auto& other : list)
            if (other.id == v.id)
                throw ModelError(p, "duplicate vulnerability '" + v.id + "' on tier '" + tier + "'");
        list.push_back(std::move(v));
    }

    const auto& servers = require(doc, "servers", "");
    if (!servers.is_object()) throw ModelError("servers", "expected an object");
    for (const auto& [key, _] : servers.items()) known_tier(key, join_path("servers", key));
    for (const auto& tier : r.tiers) {
        const auto sp = join_path("servers", tier);
        const auto& s = require(servers, tier, "servers");
        ServerTemplate t;
        t.tier = tier;
        t.vulnerabilities = catalog[tier];
        for (const auto& f : duration_fields) {
            const auto fp = join_path(sp, f.name);
            Hours h = to_hours(get_number(require(s, f.name, sp), fp), f.unit);
            validate_duration(h, fp);
            t.*(f.member) = h;
        }
        if (auto it = s.find("attack_tree"); it != s.end() && !it->is_null())
            t.attack_tree = parse_tree(*it, join_path(sp, "attack_tree"), t.vulnerabilities);
        m.templates.push_back(std::move(t));
    }

    const auto& designs = require(doc, "designs", "");
    if (!designs.is_object()) throw ModelError("designs", "expected an object");
    for (const auto& [label, counts] : designs.items()) {
        const auto dp = join_path("designs", label);
        if (!counts.is_object()) throw ModelError(dp, "expected an object of tier counts");
        DesignSpec d;
        d.label = label;
        for (const auto& [tier, n] : counts.items()) {
            known_tier(tier, join_path(dp, tier));
            long c = get_count(n, join_path(dp, tier));
            if (c < 1) throw ModelError(join_path(dp, tier), "replica count must be >= 1");
            d.counts[tier] = static_cast<int>(c);
        }
        for (const auto& tier : r.tiers)
            if (!d.counts.contains(tier)) throw ModelError(dp, "missing count for tier '" + tier + "'");
        m.designs.push_back(std::move(d));
    }

    const auto& policy = require(doc, "patch_policy", "");
    double interval = get_number(require(policy, "interval_hours", "patch_policy"),
                                 "patch_policy.interval_hours");
    m.policy.interval = Hours{interval};
    validate_duration(m.policy.interval, "patch_policy.interval_hours");

    if (auto it = doc.find("bounds"); it != doc.end()) {
        if (!it->is_array()) throw ModelError("bounds", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i)
            m.bounds.push_back(parse_bounds((*it)[i], index_path("bounds", i)));
    }
    return m;
}

inline Model load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("", "cannot open model file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError("", path.string() + ": " + e.what());
    }
    return load_model(doc);
}

inline nlohmann::json bounds_to_json(const Bounds& b) {
    nlohmann::json j{{"phi", b.asp_upper}, {"psi", b.coa_lower}};
    if (b.noev_upper) j["xi"] = *b.noev_upper;
    if (b.noap_upper) j["omega"] = *b.noap_upper;
    if (b.noep_upper) j["kappa"] = *b.noep_upper;
    return j;
}

/// Inverse of load_model (the patch selector is not serialized).
inline nlohmann::json to_json(const Model& m) {
    using nlohmann::json;
    json doc;
    const auto& r = m.reachability;
    doc["tiers"] = r.tiers;
    json edges = json::array();
    for (const auto& [a, b] : r.edges) edges.push_back(json::array({a, b}));
    doc["reachability"] = {{"edges", edges}, {"entry_tiers", r.entry_tiers}, {"target_tier", r.target_tier}};

    json vulns = json::array();
    json servers = json::object();
    for (const auto& t : m.templates) {
        for (const auto& v : t.vulnerabilities) {
            vulns.push_back({{"id", v.id},
                             {"tier", t.tier},
                             {"impact", v.attack_impact},
                             {"probability", v.attack_success_prob},
                             {"critical", v.critical},
                             {"component", to_string(v.component)}});
        }
        json s;
        for (const auto& f : duration_fields) s[std::string(f.name)] = from_hours(t.*(f.member), f.unit);
        s["attack_tree"] = t.attack_tree ? detail::tree_to_json(*t.attack_tree) : json(nullptr);
        servers[t.tier] = s;
    }
    doc["vulnerabilities"] = vulns;
    doc["servers"] = servers;

    json designs = json::object();
    for (const auto& d : m.designs) designs[d.label] = d.counts;
    doc["designs"] = designs;
    doc["patch_policy"] = {{"interval_hours", m.policy.interval.value}};
    if (!m.bounds.empty()) {
        json b = json::array();
        for (const auto& x : m.bounds) b.push_back(bounds_to_json(x));
        doc["bounds"] = b;
    }
    return doc;
}

} // namespace patchsec

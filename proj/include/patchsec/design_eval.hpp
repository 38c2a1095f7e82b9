#pragma once

// Per-design security + availability evaluation, bound filters, and the
// scatter / radar / region artifacts of a design sweep.

#include <patchsec/availability.hpp>
#include <patchsec/harm.hpp>
#include <patchsec/model.hpp>

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace patchsec {

struct DesignEvaluation {
    std::string label;
    bool patched = false;
    SecurityMetrics metrics;
    double coa = 0.0;
};

inline DesignEvaluation evaluate_design(const Model& model, const DesignSpec& design, bool patched,
                                        const TierRates& rates) {
    DesignEvaluation e;
    e.label = design.label;
    e.patched = patched;
    e.metrics = network_metrics(build_harm(model, design, patched));
    e.coa = compute_coa(design, model.reachability.tiers, rates);
    return e;
}

inline DesignEvaluation evaluate_design(const Model& model, const DesignSpec& design, bool patched) {
    return evaluate_design(model, design, patched, tier_rates(model));
}

/// 1 iff ASP <= phi and COA >= psi.
inline bool filter_two(const DesignEvaluation& e, const Bounds& b) {
    return e.metrics.asp <= b.asp_upper && e.coa >= b.coa_lower;
}

/// 1 iff ASP <= phi, NoEV <= xi, NoAP <= omega, NoEP <= kappa and COA >= psi.
inline bool filter_five(const DesignEvaluation& e, const Bounds& b) {
    if (!b.has_all_count_bounds())
        throw std::invalid_argument("five-metric filter needs xi, omega and kappa");
    return filter_two(e, b) && e.metrics.noev <= *b.noev_upper && e.metrics.noap <= *b.noap_upper &&
           e.metrics.noep <= *b.noep_upper;
}

/// Five-metric filter when count bounds are given, two-metric filter otherwise.
inline bool accepts(const DesignEvaluation& e, const Bounds& b) {
    return b.has_count_bounds() ? filter_five(e, b) : filter_two(e, b);
}

struct Region {
    Bounds bounds;
    bool patched = true;
    std::vector<std::string> accepted;
};

struct SweepResult {
    std::vector<DesignEvaluation> rows;  // by label, unpatched before patched
    std::vector<Region> regions;
};

/// Evaluates every design before and after patching. Region membership is
/// decided on the rows with the requested patch state.
inline SweepResult sweep(const Model& model, std::vector<DesignSpec> designs, const std::vector<Bounds>& bounds,
                         bool patched, const TierRates& rates) {
    std::sort(designs.begin(), designs.end(),
              [](const DesignSpec& a, const DesignSpec& b) { return a.label < b.label; });
    SweepResult out;
    for (const auto& d : designs) {
        const double coa = compute_coa(d, model.reachability.tiers, rates);
        for (bool p : {false, true}) {
            out.rows.push_back({d.label, p, network_metrics(build_harm(model, d, p)), coa});
        }
    }
    for (const auto& b : bounds) {
        Region r{b, patched, {}};
        for (const auto& row : out.rows)
            if (row.patched == patched && accepts(row, b)) r.accepted.push_back(row.label);
        out.regions.push_back(std::move(r));
    }
    return out;
}

inline SweepResult sweep(const Model& model, std::vector<DesignSpec> designs, const std::vector<Bounds>& bounds,
                         bool patched) {
    return sweep(model, std::move(designs), bounds, patched, tier_rates(model));
}

/// %.6g
inline std::string sig6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string scatter_csv(const SweepResult& s) {
    std::string out = "design,patched,asp,coa\n";
    for (const auto& r : s.rows)
        out += r.label + "," + (r.patched ? "true" : "false") + "," + sig6(r.metrics.asp) + "," + sig6(r.coa) + "\n";
    return out;
}

inline std::string radar_csv(const SweepResult& s) {
    std::string out = "design,patched,aim,asp,noev,noap,noep,coa\n";
    for (const auto& r : s.rows) {
        const auto& m = r.metrics;
        out += r.label + "," + (r.patched ? "true" : "false") + "," + sig6(m.aim) + "," + sig6(m.asp) + "," +
               std::to_string(m.noev) + "," + std::to_string(m.noap) + "," + std::to_string(m.noep) + "," +
               sig6(r.coa) + "\n";
    }
    return out;
}

inline nlohmann::json regions_json(const SweepResult& s) {
    using nlohmann::json;
    json regions = json::array();
    for (const auto& r : s.regions) {
        json bounds{{"phi", std::stod(sig6(r.bounds.asp_upper))}, {"psi", std::stod(sig6(r.bounds.coa_lower))}};
        if (r.bounds.noev_upper) bounds["xi"] = *r.bounds.noev_upper;
        if (r.bounds.noap_upper) bounds["omega"] = *r.bounds.noap_upper;
        if (r.bounds.noep_upper) bounds["kappa"] = *r.bounds.noep_upper;
        regions.push_back({{"bounds", bounds},
                           {"filter", r.bounds.has_count_bounds() ? "five" : "two"},
                           {"patched", r.patched},
                           {"accepted", r.accepted}});
    }
    return json{{"regions", regions}};
}

} // namespace patchsec

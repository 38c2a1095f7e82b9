#pragma once

// Capacity-oriented availability under a patch schedule.
//
// Each server type gets a four-part SRN (hardware, OS, service, patch clock).
// Its steady state is folded into one patch rate and one recovery rate per
// tier, which drive a two-state-per-server network SRN whose expected reward
// is the capacity-oriented availability (COA).

#include <patchsec/model.hpp>
#include <patchsec/srn/ctmc.hpp>
#include <patchsec/srn/guard.hpp>
#include <patchsec/srn/net.hpp>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace patchsec {

struct ServerSrn {
    std::string tier;
    srn::Net net;
    double patch_interval_rate = 0.0;  // tau_p, per hour
    double svc_reboot_rate = 0.0;      // beta_svc, per hour
};

struct AggregatedRates {
    double lambda_eq = 0.0;  // patch rate, per hour
    double mu_eq = 0.0;      // recovery rate, per hour

    // Steady-state probabilities of the server SRN the rates came from.
    double p_service_up = 0.0;
    double p_patch_down = 0.0;      // service ready-to-patch, patched, or awaiting reboot
    double p_reboot_enabled = 0.0;  // service reboot after patch is in progress
    std::size_t states = 0;

    double mttp() const { return 1.0 / lambda_eq; }
    double mttr() const { return 1.0 / mu_eq; }
};

using TierRates = std::map<std::string, AggregatedRates>;

/// Server sub-models. Guards follow the server guard table; a failure or
/// recovery whose mean is infinite is left out of the net.
inline ServerSrn build_server_srn(const ServerTemplate& t, const PatchPolicy& policy) {
    using srn::parse_guard;
    ServerSrn s;
    s.tier = t.tier;
    s.patch_interval_rate = policy.interval.rate();
    s.svc_reboot_rate = t.svc_reboot_after_patch.rate();
    auto& n = s.net;

    for (auto [id, tokens] : std::initializer_list<std::pair<const char*, int>>{{"P_hwup", 1}, {"P_hwd", 0},
                              {"P_osup", 1}, {"P_osd", 0}, {"P_osfd", 0}, {"P_osrtp", 0}, {"P_osp", 0},
                              {"P_svcup", 1}, {"P_svcd", 0}, {"P_svcfd", 0}, {"P_svcrtp", 0},
                              {"P_svcp", 0}, {"P_svcrrb", 0},
                              {"P_clock", 1}, {"P_trigger", 0}, {"P_wait", 0}})
        n.add_place(id, tokens);

    const auto hw_up = parse_guard("#P_hwup==1");
    const auto hw_down = parse_guard("#P_hwd==1");
    const auto host_up = parse_guard("#P_hwup==1 && #P_osup==1");
    const auto host_down = parse_guard("#P_hwd==1 || #P_osfd==1");

    auto timed = [&](const char* id, Hours mean, const char* from, const char* to,
                     srn::GuardExpr guard = {}) {
        const double rate = mean.rate();
        if (rate > 0.0) n.add_timed(id, srn::RateExpr::fixed(rate), {{from}}, {{to}}, std::move(guard));
    };
    auto immediate = [&](const char* id, const char* from, const char* to, srn::GuardExpr guard) {
        n.add_immediate(id, {{from}}, {{to}}, std::move(guard));
    };

    // Hardware
    timed("T_hwd", t.hw_mttf, "P_hwup", "P_hwd");
    timed("T_hwup", t.hw_mttr, "P_hwd", "P_hwup");

    // OS
    immediate("T_osd", "P_osup", "P_osd", hw_down);
    timed("T_osdrb", t.os_reboot_after_failure, "P_osd", "P_osup", hw_up);
    timed("T_osfd", t.os_mttf, "P_osup", "P_osfd");
    timed("T_osfup", t.os_mttr, "P_osfd", "P_osup", hw_up);
    immediate("T_osptrig", "P_osup", "P_osrtp", parse_guard("#P_svcp==1"));
    timed("T_osp", t.os_patch_mean, "P_osrtp", "P_osp", hw_up);
    immediate("T_osrpd", "P_osrtp", "P_osd", hw_down);
    immediate("T_ospd", "P_osp", "P_osd", hw_down);
    timed("T_osprb", t.os_reboot_after_patch, "P_osp", "P_osup", hw_up);

    // Service
    immediate("T_svcd", "P_svcup", "P_svcd", host_down);
    timed("T_svcdrb", t.svc_reboot_after_failure, "P_svcd", "P_svcup", host_up);
    timed("T_svcfd", t.svc_mttf, "P_svcup", "P_svcfd");
    timed("T_svcfup", t.svc_mttr, "P_svcfd", "P_svcup", host_up);
    immediate("T_svcptrig", "P_svcup", "P_svcrtp", parse_guard("#P_trigger==1"));
    timed("T_svcp", t.svc_patch_mean, "P_svcrtp", "P_svcp", host_up);
    immediate("T_svcrpd", "P_svcrtp", "P_svcd", host_down);
    immediate("T_svcrrb", "P_svcp", "P_svcrrb", parse_guard("#P_osp==1"));
    immediate("T_svcrrbd", "P_svcrrb", "P_svcd", host_down);
    timed("T_svcprb", t.svc_reboot_after_patch, "P_svcrrb", "P_svcup", host_up);

    // Patch clock. The interval only runs while the service is in normal
    // operation (up, down or failed); the token waits in P_wait from the end
    // of the application patch until the OS patch completes.
    timed("T_interval", policy.interval, "P_clock", "P_trigger",
          parse_guard("#P_svcup==1 || #P_svcd==1 || #P_svcfd==1"));
    immediate("T_policy", "P_trigger", "P_wait", parse_guard("#P_svcp==1"));
    immediate("T_reset", "P_wait", "P_clock", parse_guard("#P_osp==1"));
    return s;
}

/// Patch rate lambda_eq = tau_p (the service-up probability cancels).
/// Recovery rate mu_eq = beta_svc * P(service reboot in progress) / P(service
/// down due to patch).
inline AggregatedRates aggregate_rates(const ServerSrn& s) {
    const auto& net = s.net;
    const auto sol = srn::solve(net);
    const auto up = net.place("P_svcup");
    const auto rtp = net.place("P_svcrtp");
    const auto patched = net.place("P_svcp");
    const auto rrb = net.place("P_svcrrb");
    const auto reboot = net.transition("T_svcprb");

    AggregatedRates r;
    r.states = sol.states.size();
    r.p_service_up = srn::expected_reward(sol, [&](std::span<const int> m) { return m[up] == 1 ? 1.0 : 0.0; });
    r.p_patch_down = srn::expected_reward(sol, [&](std::span<const int> m) {
        return m[rtp] + m[patched] + m[rrb] > 0 ? 1.0 : 0.0;
    });
    r.p_reboot_enabled = srn::expected_reward(
        sol, [&](std::span<const int> m) { return net.enabled(reboot, m) ? 1.0 : 0.0; });
    if (!(r.p_patch_down > 0.0)) throw SolverError("server '" + s.tier + "' is never down for patching");
    r.lambda_eq = s.patch_interval_rate * r.p_service_up / r.p_service_up;
    r.mu_eq = s.svc_reboot_rate * r.p_reboot_enabled / r.p_patch_down;
    return r;
}

/// Aggregated rates for every tier of a model.
inline TierRates tier_rates(const Model& m) {
    TierRates out;
    for (const auto& t : m.templates) out[t.tier] = aggregate_rates(build_server_srn(t, m.policy));
    return out;
}

struct NetworkSrn {
    DesignSpec design;
    std::vector<std::string> tiers;
    srn::Net net;
};

inline std::string up_place(const std::string& tier) { return "P_" + tier + "up"; }
inline std::string down_place(const std::string& tier) { return "P_" + tier + "down"; }

/// COA reward as first-match-wins clauses over the per-tier up counts: one
/// clause per combination with every tier at least partially up, valued
/// (servers up) / (servers total). Clauses run from all-up downwards with the
/// first tier varying fastest. Place names are unbound.
inline srn::RewardFunction coa_reward(const DesignSpec& design, const std::vector<std::string>& tiers) {
    srn::RewardFunction r;
    r.name = "COA";
    std::vector<int> total(tiers.size());
    int servers = 0;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        total[i] = design.count(tiers[i]);
        servers += total[i];
    }
    if (servers == 0) return r;
    std::vector<int> up = total;
    for (;;) {
        srn::GuardExpr g;
        g.kind = srn::GuardExpr::Kind::conjunction;
        int running = 0;
        for (std::size_t i = 0; i < tiers.size(); ++i) {
            g.terms.push_back(srn::GuardExpr::atom(up_place(tiers[i]), srn::Cmp::eq, up[i]));
            running += up[i];
        }
        if (g.terms.size() == 1) g = g.terms.front();
        r.clauses.push_back({std::move(g), static_cast<double>(running) / servers});
        std::size_t i = 0;
        while (i < tiers.size() && up[i] == 1) {
            up[i] = total[i];
            ++i;
        }
        if (i == tiers.size()) break;
        --up[i];
    }
    return r;
}

/// Per tier: N_t tokens in P_<t>up, patch transition at lambda_eq * #P_<t>up,
/// recovery at mu_eq * #P_<t>down. Carries the "COA" reward.
inline NetworkSrn build_network_srn(const DesignSpec& design, const std::vector<std::string>& tiers,
                                    const TierRates& rates) {
    NetworkSrn s{design, tiers, {}};
    for (const auto& t : tiers) {
        auto it = rates.find(t);
        if (it == rates.end()) throw ModelError("rates", "no aggregated rates for tier '" + t + "'");
        const auto up = up_place(t), down = down_place(t);
        s.net.add_place(up, design.count(t));
        s.net.add_place(down, 0);
        s.net.add_timed("T_" + t + "d", srn::RateExpr::per_token(it->second.lambda_eq, up), {{up}}, {{down}});
        s.net.add_timed("T_" + t + "up", srn::RateExpr::per_token(it->second.mu_eq, down), {{down}}, {{up}});
    }
    s.net.add_reward(coa_reward(design, tiers));
    return s;
}

/// Expected steady-state COA reward of the network SRN.
inline double compute_coa(const DesignSpec& design, const std::vector<std::string>& tiers, const TierRates& rates) {
    const auto s = build_network_srn(design, tiers, rates);
    return srn::expected_reward(srn::solve(s.net), s.net.reward("COA"));
}

/// Independent-server evaluation of the same measure: each server alternates
/// up/down with availability mu/(lambda+mu), so the up count of a tier is
/// binomial. Sums the reward over all up-count combinations exactly.
inline double closed_form_coa(const DesignSpec& design, const std::vector<std::string>& tiers,
                              const TierRates& rates) {
    const std::size_t k = tiers.size();
    std::vector<std::vector<double>> dist(k);  // dist[i][j] = P(j servers of tier i up)
    int servers = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& r = rates.at(tiers[i]);
        const int n = design.count(tiers[i]);
        servers += n;
        const double a = r.mu_eq / (r.lambda_eq + r.mu_eq);
        dist[i].assign(static_cast<std::size_t>(n) + 1, 0.0);
        double binom = 1.0;
        for (int j = 0; j <= n; ++j) {
            dist[i][static_cast<std::size_t>(j)] = binom * std::pow(a, j) * std::pow(1.0 - a, n - j);
            binom = binom * (n - j) / (j + 1);
        }
    }
    if (servers == 0) return 0.0;
    double acc = 0.0;
    std::vector<int> up(k, 1);
    for (std::size_t i = 0; i < k; ++i)
        if (design.count(tiers[i]) < 1) return 0.0;
    for (;;) {
        double p = 1.0;
        int running = 0;
        for (std::size_t i = 0; i < k; ++i) {
            p *= dist[i][static_cast<std::size_t>(up[i])];
            running += up[i];
        }
        acc += p * running / servers;
        std::size_t i = 0;
        while (i < k && up[i] == design.count(tiers[i])) {
            up[i] = 1;
            ++i;
        }
        if (i == k) break;
        ++up[i];
    }
    return acc;
}

} // namespace patchsec

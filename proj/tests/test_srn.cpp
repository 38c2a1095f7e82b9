#include "oracles.hpp"

#include <patchsec/srn/ctmc.hpp>
#include <patchsec/srn/reachability.hpp>
#include <patchsec/srn/simulate.hpp>
#include <patchsec/srn/text_format.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace patchsec;
using namespace patchsec::srn;

namespace {

Net two_state(double lambda, double mu) {
    Net n;
    n.add_place("P_up", 1);
    n.add_place("P_down", 0);
    n.add_timed("T_fail", RateExpr::fixed(lambda), {{"P_up"}}, {{"P_down"}});
    n.add_timed("T_repair", RateExpr::fixed(mu), {{"P_down"}}, {{"P_up"}});
    return n;
}

double up_reward(std::span<const int> m) { return m[0] == 1 ? 1.0 : 0.0; }

std::string read(const std::string& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void expect_proper_solution(const SteadyStateSolution& sol) {
    double sum = 0.0;
    for (double p : sol.pi) {
        EXPECT_GE(p, 0.0);
        sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LE(sol.residual, 1e-10);
}

} // namespace

TEST(Reachability, HardwareSubnet) {
    Net n;
    n.add_place("P_hwup", 1);
    n.add_place("P_hwd", 0);
    n.add_timed("T_hwd", RateExpr::fixed(1.0 / 87600), {{"P_hwup"}}, {{"P_hwd"}});
    n.add_timed("T_hwup", RateExpr::fixed(1.0), {{"P_hwd"}}, {{"P_hwup"}});
    const auto g = reachability(n, n.initial_marking());
    EXPECT_EQ(g.tangible.size(), 2u);
    EXPECT_EQ(g.vanishing.size(), 0u);
    EXPECT_EQ(g.edges.size(), 2u);
}

TEST(Reachability, FixedPoint) {
    Net n;
    n.add_place("P", 1);
    const auto g = reachability(n, n.initial_marking());
    EXPECT_EQ(g.tangible.size(), 1u);
    const auto sol = solve(n);
    ASSERT_EQ(sol.pi.size(), 1u);
    EXPECT_EQ(sol.pi[0], 1.0);
}

TEST(Reachability, NetworkNetFromFile) {
    const auto n = parse_net(read(oracle::data_file("network-1221.srn")));
    EXPECT_EQ(reachability(n, n.initial_marking()).tangible.size(), 2u * 3u * 3u * 2u);
}

TEST(Reachability, UnboundedNetDetected) {
    Net n;
    n.add_place("P", 1);
    n.add_timed("T_grow", RateExpr::fixed(1.0), {{"P"}}, {{"P", 2}});
    EXPECT_THROW(reachability(n, n.initial_marking()), SolverError);
}

TEST(Reachability, StateCapExceeded) {
    const auto n = parse_net(read(oracle::data_file("network-1221.srn")));
    ReachabilityOptions opts;
    opts.state_cap = 10;
    EXPECT_THROW(reachability(n, n.initial_marking(), opts), SolverError);
}

TEST(Reachability, TimedNotFiredFromVanishing) {
    Net n;
    n.add_place("A", 1);
    n.add_place("B", 0);
    n.add_place("C", 0);
    n.add_immediate("I", {{"A"}}, {{"B"}});
    n.add_timed("T", RateExpr::fixed(1.0), {{"A"}}, {{"C"}});
    n.add_timed("R", RateExpr::fixed(1.0), {{"B"}}, {{"A"}});
    const auto g = reachability(n, n.initial_marking());
    EXPECT_EQ(g.vanishing.size(), 1u);
    for (const auto& m : g.tangible) EXPECT_EQ(m[2], 0);
}

TEST(EliminateVanishing, WeightedBranching) {
    Net n;
    n.add_place("S", 1);
    n.add_place("V", 0);
    n.add_place("A", 0);
    n.add_place("B", 0);
    n.add_timed("T_go", RateExpr::fixed(2.0), {{"S"}}, {{"V"}});
    n.add_immediate("I_a", {{"V"}}, {{"A"}}, {}, 1.0);
    n.add_immediate("I_b", {{"V"}}, {{"B"}}, {}, 3.0);
    n.add_timed("T_a", RateExpr::fixed(1.0), {{"A"}}, {{"S"}});
    n.add_timed("T_b", RateExpr::fixed(1.0), {{"B"}}, {{"S"}});
    const auto gen = eliminate_vanishing(reachability(n, n.initial_marking()));
    ASSERT_EQ(gen.states.size(), 3u);
    // State 0 is S; locate A and B.
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < gen.states.size(); ++i) {
        if (gen.states[i][2] == 1) ia = i;
        if (gen.states[i][3] == 1) ib = i;
    }
    EXPECT_NEAR(gen.q.coeff(0, static_cast<Eigen::Index>(ia)), 2.0 * 0.25, 1e-15);
    EXPECT_NEAR(gen.q.coeff(0, static_cast<Eigen::Index>(ib)), 2.0 * 0.75, 1e-15);
    for (Eigen::Index r = 0; r < gen.q.rows(); ++r) EXPECT_NEAR(gen.q.row(r).sum(), 0.0, 1e-15);
}

TEST(EliminateVanishing, PriorityBeatsWeight) {
    Net n;
    n.add_place("S", 1);
    n.add_place("V", 0);
    n.add_place("A", 0);
    n.add_place("B", 0);
    n.add_timed("T_go", RateExpr::fixed(1.0), {{"S"}}, {{"V"}});
    n.add_immediate("I_a", {{"V"}}, {{"A"}}, {}, 100.0, 0);
    n.add_immediate("I_b", {{"V"}}, {{"B"}}, {}, 1.0, 1);
    n.add_timed("T_b", RateExpr::fixed(1.0), {{"B"}}, {{"S"}});
    const auto gen = eliminate_vanishing(reachability(n, n.initial_marking()));
    for (const auto& m : gen.states) EXPECT_EQ(m[2], 0);
}

TEST(EliminateVanishing, TimelessTrap) {
    Net n;
    n.add_place("S", 1);
    n.add_place("X", 0);
    n.add_place("Y", 0);
    n.add_timed("T", RateExpr::fixed(1.0), {{"S"}}, {{"X"}});
    n.add_immediate("I_xy", {{"X"}}, {{"Y"}});
    n.add_immediate("I_yx", {{"Y"}}, {{"X"}});
    try {
        eliminate_vanishing(reachability(n, n.initial_marking()));
        FAIL() << "expected a timeless trap";
    } catch (const SolverError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("timeless trap"), std::string::npos);
        EXPECT_NE(msg.find("(0,1,0)"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(0,0,1)"), std::string::npos) << msg;
    }
}

TEST(EliminateVanishing, VanishingLoopWithExit) {
    // X <-> Y immediates with an exit from Y; absorption must still be 1.
    Net n;
    n.add_place("S", 1);
    n.add_place("X", 0);
    n.add_place("Y", 0);
    n.add_place("Z", 0);
    n.add_timed("T", RateExpr::fixed(1.0), {{"S"}}, {{"X"}});
    n.add_immediate("I_xy", {{"X"}}, {{"Y"}});
    n.add_immediate("I_yx", {{"Y"}}, {{"X"}});
    n.add_immediate("I_yz", {{"Y"}}, {{"Z"}});
    n.add_timed("T_z", RateExpr::fixed(1.0), {{"Z"}}, {{"S"}});
    const auto gen = eliminate_vanishing(reachability(n, n.initial_marking()));
    ASSERT_EQ(gen.states.size(), 2u);
    EXPECT_NEAR(gen.q.coeff(0, 1), 1.0, 1e-12);
}

TEST(SteadyState, TwoStateChain) {
    const double lambda = 0.00139, mu = 1.49992;
    const auto sol = solve(two_state(lambda, mu));
    expect_proper_solution(sol);
    EXPECT_NEAR(sol.pi[0], mu / (lambda + mu), 1e-12);
    EXPECT_NEAR(sol.pi[0], 0.999074, 5e-7);
    EXPECT_NEAR(expected_reward(sol, up_reward), sol.pi[0], 1e-15);
    EXPECT_NEAR(expected_reward(sol, [](std::span<const int>) { return 1.0; }), 1.0, 1e-12);
}

TEST(SteadyState, SymmetricChain) {
    const auto sol = solve(two_state(3.0, 3.0));
    EXPECT_NEAR(sol.pi[0], 0.5, 1e-14);
    EXPECT_NEAR(sol.pi[1], 0.5, 1e-14);
}

TEST(SteadyState, ReducibleChainRejected) {
    Net n;
    n.add_place("A", 1);
    n.add_place("B", 0);
    n.add_timed("T", RateExpr::fixed(1.0), {{"A"}}, {{"B"}});
    try {
        solve(n);
        FAIL() << "expected a reducible-chain error";
    } catch (const SolverError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("reducible"), std::string::npos);
        EXPECT_NE(msg.find("closed class"), std::string::npos);
    }
}

TEST(SteadyState, MarkingDependentRates) {
    // Three independent components: P(k up) is binomial.
    Net n;
    n.add_place("U", 3);
    n.add_place("D", 0);
    n.add_timed("F", RateExpr::per_token(0.5, "U"), {{"U"}}, {{"D"}});
    n.add_timed("R", RateExpr::per_token(2.0, "D"), {{"D"}}, {{"U"}});
    const auto sol = solve(n);
    expect_proper_solution(sol);
    const double a = 0.8;
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
        const int k = sol.states[i][0];
        const double binom = k == 0 || k == 3 ? 1.0 : 3.0;
        EXPECT_NEAR(sol.pi[i], binom * std::pow(a, k) * std::pow(1 - a, 3 - k), 1e-12);
    }
}

TEST(RewardFunction, FirstMatchWins) {
    Net n = two_state(1.0, 1.0);
    RewardFunction r;
    r.name = "r";
    r.clauses.push_back({parse_guard("#P_up==1"), 5.0});
    r.clauses.push_back({parse_guard("#P_up>=0"), 2.0});
    bind(r, n);
    const std::array<int, 2> up{1, 0}, down{0, 1};
    EXPECT_EQ(r(up), 5.0);
    EXPECT_EQ(r(down), 2.0);
    RewardFunction none;
    EXPECT_EQ(none(up), 0.0);
}

TEST(NetBuilding, Validation) {
    Net n;
    n.add_place("A", 1);
    EXPECT_THROW(n.add_place("A", 0), ModelError);
    EXPECT_THROW(n.add_place("B", -1), ModelError);
    EXPECT_THROW(n.add_timed("T", RateExpr::fixed(0.0), {{"A"}}, {}), ModelError);
    EXPECT_THROW(n.add_timed("T", RateExpr::fixed(1.0), {{"Q"}}, {}), ModelError);
    EXPECT_THROW(n.add_immediate("I", {{"A"}}, {}, {}, 0.0), ModelError);
    EXPECT_THROW(n.add_immediate("I", {{"A"}}, {}, parse_guard("#Q==1")), ModelError);
    n.add_timed("T", RateExpr::fixed(1.0), {{"A"}}, {{"A"}});
    EXPECT_THROW(n.add_timed("T", RateExpr::fixed(1.0), {{"A"}}, {{"A"}}), ModelError);
}

TEST(TextFormat, ParsesAndSolvesNetworkNet) {
    const auto n = parse_net(read(oracle::data_file("network-1221.srn")));
    const auto sol = solve(n);
    expect_proper_solution(sol);
    EXPECT_NEAR(expected_reward(sol, n.reward("COA")), 0.99707, 1e-4);
    EXPECT_EQ(n.reward("COA").clauses.size(), 4u);
}

TEST(TextFormat, RoundTrip) {
    for (const char* file : {"network-1221.srn", "hardware.srn"}) {
        const auto a = parse_net(read(oracle::data_file(file)));
        const auto text = to_text(a);
        const auto b = parse_net(text);
        EXPECT_EQ(to_text(b), text);
        const auto sa = solve(a), sb = solve(b);
        ASSERT_EQ(sa.pi.size(), sb.pi.size());
        for (std::size_t i = 0; i < sa.pi.size(); ++i) EXPECT_EQ(sa.pi[i], sb.pi[i]);
    }
}

TEST(TextFormat, PlacesMayFollowTransitions) {
    const auto n = parse_net("timed T rate=1 in=A out=B\ntimed U rate=2 in=B out=A\nplace A 1\nplace B 0\n");
    EXPECT_EQ(solve(n).states.size(), 2u);
}

TEST(TextFormat, PositionedErrors) {
    auto offset_of = [](std::string_view text) -> std::size_t {
        try {
            parse_net(text);
        } catch (const ParseError& e) {
            return e.offset();
        }
        ADD_FAILURE() << "no error";
        return 0;
    };
    EXPECT_EQ(offset_of("place A 1\nfrob X\n"), 10u);
    EXPECT_EQ(offset_of("place A x\n"), 8u);
    // Guard error offset is absolute within the file.
    EXPECT_EQ(offset_of("place A 1\ntimed T rate=1 guard=\"#A==\" in=A out=A\n"), 10u + 26u);
    EXPECT_EQ(offset_of("place A 1\ntimed T in=A out=A\n"), 10u);
    EXPECT_EQ(offset_of("place A 1\ntimed T rate=abc in=A out=A\n"), 10u + 13u);
    try {
        parse_net("place A 1\ntimed T rate=1 in=Z out=A\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("unknown place 'Z'"), std::string::npos);
    }
}

TEST(SrnProperty, ReachabilityMatchesBruteForce) {
    std::mt19937 rng(17);
    int solved = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const auto net = oracle::random_net(rng);
        ASSERT_LE(net.places().size(), 10u);
        const int cap = net.total_initial_tokens();
        const auto g = reachability(net, net.initial_marking());
        const auto chain = oracle::explicit_chain(net, cap);
        std::set<Marking> tangible(g.tangible.begin(), g.tangible.end());
        std::set<Marking> vanishing(g.vanishing.begin(), g.vanishing.end());
        EXPECT_EQ(tangible, std::set<Marking>(chain.tangible.begin(), chain.tangible.end())) << to_text(net);
        EXPECT_EQ(vanishing, std::set<Marking>(chain.vanishing.begin(), chain.vanishing.end())) << to_text(net);

        SteadyStateSolution sol;
        try {
            sol = steady_state(eliminate_vanishing(g));
        } catch (const SolverError&) {
            continue;  // reducible random chain
        }
        ++solved;
        expect_proper_solution(sol);
        const auto pi = oracle::dense_stationary(chain.q);
        std::map<Marking, double> ref;
        for (std::size_t i = 0; i < chain.tangible.size(); ++i) ref[chain.tangible[i]] = pi[i];
        for (std::size_t i = 0; i < sol.states.size(); ++i) EXPECT_NEAR(sol.pi[i], ref.at(sol.states[i]), 1e-9);
    }
    EXPECT_GT(solved, 50);
}

TEST(SrnProperty, TokensConservedInRandomNets) {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = oracle::random_net(rng);
        const auto g = reachability(net, net.initial_marking());
        for (const auto* set : {&g.tangible, &g.vanishing})
            for (const auto& m : *set) EXPECT_EQ(std::accumulate(m.begin(), m.end(), 0), net.total_initial_tokens());
    }
}

TEST(Simulation, AgreesWithAnalyticTwoState) {
    const auto n = two_state(0.2, 1.0);
    const auto est = simulate_reward(n, up_reward, {1e5, 20, 42});
    const double exact = 1.0 / 1.2;
    EXPECT_LT(std::abs(est.mean - exact), 3.0 * est.standard_error) << est.mean << " +- " << est.standard_error;
}

TEST(Simulation, HandlesImmediates) {
    Net n;
    n.add_place("S", 1);
    n.add_place("V", 0);
    n.add_place("A", 0);
    n.add_place("B", 0);
    n.add_timed("T_go", RateExpr::fixed(1.0), {{"S"}}, {{"V"}});
    n.add_immediate("I_a", {{"V"}}, {{"A"}}, {}, 1.0);
    n.add_immediate("I_b", {{"V"}}, {{"B"}}, {}, 3.0);
    n.add_timed("T_a", RateExpr::fixed(1.0), {{"A"}}, {{"S"}});
    n.add_timed("T_b", RateExpr::fixed(1.0), {{"B"}}, {{"S"}});
    auto in_b = [](std::span<const int> m) { return m[3] == 1 ? 1.0 : 0.0; };
    const double exact = expected_reward(solve(n), in_b);
    const auto est = simulate_reward(n, in_b, {2e5, 20, 7});
    EXPECT_LT(std::abs(est.mean - exact), 3.0 * est.standard_error);
    EXPECT_NEAR(exact, 0.375, 1e-12);
}

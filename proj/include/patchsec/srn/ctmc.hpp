#pragma once

// Reachability graph -> CTMC generator -> stationary distribution -> rewards.

#include <patchsec/errors.hpp>
#include <patchsec/srn/net.hpp>
#include <patchsec/srn/reachability.hpp>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace patchsec::srn {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Generator over the tangible markings: off-diagonals >= 0, rows sum to 0.
struct Generator {
    std::vector<Marking> states;
    SparseMatrix q;
};

struct SteadyStateSolution {
    std::vector<Marking> states;
    std::vector<double> pi;
    double residual = 0.0;  // max |(pi Q)_j|
};

namespace detail {

inline std::string marking_text(const Marking& m) {
    std::string s = "(";
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(m[i]);
    }
    return s + ")";
}

/// Strongly connected components of a directed graph (iterative Kosaraju).
inline std::vector<std::size_t> strong_components(const std::vector<std::vector<std::size_t>>& adj,
                                                  std::size_t& count) {
    const std::size_t n = adj.size();
    std::vector<std::vector<std::size_t>> radj(n);
    for (std::size_t u = 0; u < n; ++u)
        for (auto v : adj[u]) radj[v].push_back(u);

    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<bool> seen(n, false);
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{s, 0}};
        seen[s] = true;
        while (!stack.empty()) {
            auto& [u, i] = stack.back();
            if (i < adj[u].size()) {
                auto v = adj[u][i++];
                if (!seen[v]) {
                    seen[v] = true;
                    stack.push_back({v, 0});
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }
    constexpr auto none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(n, none);
    count = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] != none) continue;
        std::vector<std::size_t> stack{*it};
        comp[*it] = count;
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (auto v : radj[u])
                if (comp[v] == none) {
                    comp[v] = count;
                    stack.push_back(v);
                }
        }
        ++count;
    }
    return comp;
}

} // namespace detail

/// Folds vanishing markings into the rates between tangible markings. Immediate
/// branching probabilities compose along vanishing chains, including chains
/// with loops, through the absorption probabilities (I - P_vv)^-1 P_vt.
inline Generator eliminate_vanishing(const ReachabilityGraph& g) {
    const std::size_t nt = g.tangible.size();
    const std::size_t nv = g.vanishing.size();
    if (nt == 0) throw SolverError("net has no tangible markings");

    // Absorption probabilities from each vanishing marking into tangible ones.
    SparseMatrix absorb(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nt));
    if (nv > 0) {
        std::vector<Eigen::Triplet<double>> vv, vt;
        std::vector<std::vector<std::size_t>> preds(nv);
        std::vector<bool> exits(nv, false);
        for (std::size_t i = 0; i < nv; ++i) vv.emplace_back(i, i, 1.0);
        for (const auto& e : g.edges) {
            if (!e.from.vanishing) continue;
            if (e.to.vanishing) {
                vv.emplace_back(e.from.index, e.to.index, -e.value);
                preds[e.to.index].push_back(e.from.index);
            } else {
                vt.emplace_back(e.from.index, e.to.index, e.value);
                exits[e.from.index] = true;
            }
        }
        // Every vanishing marking must be able to leave the vanishing set.
        std::vector<bool> escapes = exits;
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < nv; ++i)
            if (exits[i]) stack.push_back(i);
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            for (auto p : preds[v])
                if (!escapes[p]) {
                    escapes[p] = true;
                    stack.push_back(p);
                }
        }
        std::string trapped;
        for (std::size_t i = 0; i < nv; ++i) {
            if (escapes[i]) continue;
            if (!trapped.empty()) trapped += " -> ";
            trapped += detail::marking_text(g.vanishing[i]);
        }
        if (!trapped.empty())
            throw SolverError("timeless trap among vanishing markings: " + trapped);

        SparseMatrix a(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nv));
        a.setFromTriplets(vv.begin(), vv.end());
        SparseMatrix b(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nt));
        b.setFromTriplets(vt.begin(), vt.end());
        Eigen::SparseLU<SparseMatrix> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success) throw SolverError("vanishing-marking elimination is singular");
        absorb = lu.solve(b);
        absorb.prune(1e-15, 1.0);
    }

    using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
    const RowMatrix absorb_rows = absorb;
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> out_rate(nt, 0.0);
    auto add = [&](std::size_t from, std::size_t to, double rate) {
        if (from == to || rate == 0.0) return;
        trip.emplace_back(from, to, rate);
        out_rate[from] += rate;
    };
    for (const auto& e : g.edges) {
        if (e.from.vanishing) continue;
        if (!e.to.vanishing) {
            add(e.from.index, e.to.index, e.value);
            continue;
        }
        for (RowMatrix::InnerIterator it(absorb_rows, static_cast<Eigen::Index>(e.to.index)); it; ++it)
            add(e.from.index, static_cast<std::size_t>(it.col()), e.value * it.value());
    }
    for (std::size_t i = 0; i < nt; ++i) trip.emplace_back(i, i, -out_rate[i]);

    Generator gen;
    gen.states = g.tangible;
    gen.q.resize(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nt));
    gen.q.setFromTriplets(trip.begin(), trip.end());
    return gen;
}

/// Solves pi Q = 0, sum(pi) = 1 by sparse LU after replacing one balance
/// equation with the normalization. The chain must be irreducible.
inline SteadyStateSolution steady_state(const Generator& gen, double tolerance = 1e-10) {
    const auto n = static_cast<std::size_t>(gen.q.rows());
    SteadyStateSolution sol;
    sol.states = gen.states;
    if (n == 0) throw SolverError("empty generator");
    if (n == 1) {
        sol.pi = {1.0};
        return sol;
    }

    std::vector<std::vector<std::size_t>> adj(n);
    for (Eigen::Index col = 0; col < gen.q.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(gen.q, col); it; ++it)
            if (it.row() != it.col() && it.value() > 0.0)
                adj[static_cast<std::size_t>(it.row())].push_back(static_cast<std::size_t>(it.col()));
    std::size_t ncomp = 0;
    const auto comp = detail::strong_components(adj, ncomp);
    if (ncomp != 1) {
        std::vector<bool> closed(ncomp, true);
        for (std::size_t u = 0; u < n; ++u)
            for (auto v : adj[u])
                if (comp[u] != comp[v]) closed[comp[u]] = false;
        std::string msg = "reducible chain: " + std::to_string(ncomp) + " communicating classes";
        for (std::size_t c = 0; c < ncomp; ++c) {
            msg += closed[c] ? "; closed class {" : "; transient class {";
            std::size_t shown = 0;
            for (std::size_t u = 0; u < n && shown < 4; ++u)
                if (comp[u] == c) {
                    msg += (shown++ ? " " : "") + detail::marking_text(gen.states[u]);
                }
            msg += "}";
        }
        throw SolverError(msg);
    }

    // A = Q^T with the last row replaced by ones.
    std::vector<Eigen::Triplet<double>> trip;
    const auto last = static_cast<Eigen::Index>(n - 1);
    for (Eigen::Index col = 0; col < gen.q.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(gen.q, col); it; ++it)
            if (it.col() != last) trip.emplace_back(it.col(), it.row(), it.value());
    for (Eigen::Index j = 0; j <= last; ++j) trip.emplace_back(last, j, 1.0);
    SparseMatrix a(last + 1, last + 1);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(last + 1);
    b[last] = 1.0;

    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) throw SolverError("singular generator: " + lu.lastErrorMessage());
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("steady-state solve failed");

    for (Eigen::Index i = 0; i <= last; ++i) {
        if (x[i] < -1e-12) throw SolverError("negative stationary probability " + std::to_string(x[i]));
        x[i] = std::max(x[i], 0.0);
    }
    x /= x.sum();

    Eigen::RowVectorXd r = x.transpose() * gen.q;
    sol.residual = r.cwiseAbs().maxCoeff();
    if (sol.residual > tolerance)
        throw SolverError("singular beyond tolerance: residual " + std::to_string(sol.residual));
    sol.pi.assign(x.data(), x.data() + x.size());
    return sol;
}

/// sum_s pi(s) * reward(s)
template <class Reward>
double expected_reward(const SteadyStateSolution& sol, const Reward& reward) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sol.pi.size(); ++i)
        acc += sol.pi[i] * reward(std::span<const int>(sol.states[i]));
    return acc;
}

/// reachability -> eliminate_vanishing -> steady_state from the initial marking.
inline SteadyStateSolution solve(const Net& net, const ReachabilityOptions& opts = {}) {
    return steady_state(eliminate_vanishing(reachability(net, net.initial_marking(), opts)));
}

} // namespace patchsec::srn

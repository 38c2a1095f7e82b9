#pragma once

// Discrete-event simulation of a net, used to cross-check analytic rewards.

#include <patchsec/errors.hpp>
#include <patchsec/srn/net.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace patchsec::srn {

struct SimulationOptions {
    double horizon = 1e6;     // simulated hours
    std::size_t batches = 20; // batch means for the standard error
    std::uint64_t seed = 1;
    std::size_t max_immediate_chain = 100000;
};

struct SimulationEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t events = 0;
};

/// Time-averaged reward over [0, horizon]. The standard error comes from
/// non-overlapping batch means.
template <class Reward>
SimulationEstimate simulate_reward(const Net& net, const Reward& reward, const SimulationOptions& opt = {}) {
    if (opt.batches < 2 || !(opt.horizon > 0.0))
        throw SolverError("simulation needs a positive horizon and at least 2 batches");
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Marking m = net.initial_marking();
    SimulationEstimate est;

    auto settle = [&] {
        for (std::size_t step = 0;; ++step) {
            const auto imm = net.enabled_immediates(m);
            if (imm.empty()) return;
            if (step >= opt.max_immediate_chain)
                throw SolverError("simulation stuck in vanishing markings at " + net.describe(m));
            double total = 0.0;
            for (auto t : imm) total += net.transitions()[t].immediate().weight;
            double u = unit(rng) * total;
            std::size_t pick = imm.back();
            for (auto t : imm) {
                u -= net.transitions()[t].immediate().weight;
                if (u < 0.0) {
                    pick = t;
                    break;
                }
            }
            m = net.fire(pick, m);
            ++est.events;
        }
    };

    const double batch_len = opt.horizon / static_cast<double>(opt.batches);
    std::vector<double> batch(opt.batches, 0.0);
    auto accumulate = [&](double from, double to, double r) {
        while (from < to) {
            auto b = static_cast<std::size_t>(from / batch_len);
            if (b >= opt.batches) return;
            const double edge = std::min(to, batch_len * static_cast<double>(b + 1));
            batch[b] += r * (edge - from);
            from = edge;
        }
    };

    settle();
    double now = 0.0;
    std::vector<std::size_t> timed;
    std::vector<double> rates;
    while (now < opt.horizon) {
        timed.clear();
        rates.clear();
        double total = 0.0;
        for (std::size_t t = 0; t < net.transitions().size(); ++t) {
            const auto& tr = net.transitions()[t];
            if (!tr.is_timed() || !net.enabled(t, m)) continue;
            const double r = tr.timed().rate.evaluate(m);
            timed.push_back(t);
            rates.push_back(r);
            total += r;
        }
        const double r_now = reward(std::span<const int>(m));
        if (total <= 0.0) {
            accumulate(now, opt.horizon, r_now);
            break;
        }
        const double dt = -std::log1p(-unit(rng)) / total;
        const double next = std::min(now + dt, opt.horizon);
        accumulate(now, next, r_now);
        now = next;
        if (now >= opt.horizon) break;
        double u = unit(rng) * total;
        std::size_t pick = timed.back();
        for (std::size_t i = 0; i < timed.size(); ++i) {
            u -= rates[i];
            if (u < 0.0) {
                pick = timed[i];
                break;
            }
        }
        m = net.fire(pick, m);
        ++est.events;
        settle();
    }

    double sum = 0.0;
    for (auto& b : batch) {
        b /= batch_len;
        sum += b;
    }
    const double n = static_cast<double>(opt.batches);
    est.mean = sum / n;
    double ss = 0.0;
    for (double b : batch) ss += (b - est.mean) * (b - est.mean);
    est.standard_error = std::sqrt(ss / (n - 1.0) / n);
    return est;
}

} // namespace patchsec::srn

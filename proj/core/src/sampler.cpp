// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/sampler.hpp"

#include "pglab/rng.hpp"

#include <fmt/format.h>

#include <cmath>

namespace pglab {

SigmaSchedule::SigmaSchedule(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.size() < 3) {
        throw std::invalid_argument("schedule needs at least 2 steps");
    }
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (!(levels_[i] > 0.0) || !std::isfinite(levels_[i])) {
            throw std::invalid_argument("schedule levels must be positive and finite");
        }
        if (i > 0 && !(levels_[i] < levels_[i - 1])) {
            throw std::invalid_argument("schedule levels must be strictly decreasing");
        }
    }
}

SigmaSchedule make_schedule(int n_steps, double sigma_max, double sigma_min, double rho) {
    if (n_steps < 2) {
        throw std::invalid_argument("n_steps must be at least 2");
    }
    if (!(sigma_min > 0.0 && sigma_max > sigma_min)) {
        throw std::invalid_argument("need 0 < sigma_min < sigma_max");
    }
    if (!(rho > 0.0)) {
        throw std::invalid_argument("rho must be positive");
    }
    const double hi = std::pow(sigma_max, 1.0 / rho);
    const double lo = std::pow(sigma_min, 1.0 / rho);
    std::vector<double> levels(static_cast<std::size_t>(n_steps) + 1);
    levels.front() = sigma_max;
    levels.back() = sigma_min;
    for (int i = 1; i < n_steps; ++i) {
        const double t = static_cast<double>(i) / n_steps;
        levels[static_cast<std::size_t>(i)] = std::pow(hi + t * (lo - hi), rho);
    }
    return SigmaSchedule(std::move(levels));
}

std::string to_string(Solver s) {
    return s == Solver::euler ? "euler" : "heun";
}

Solver parse_solver(const std::string& s) {
    if (s == "euler") {
        return Solver::euler;
    }
    if (s == "heun") {
        return Solver::heun;
    }
    throw std::invalid_argument(fmt::format("unknown solver '{}'", s));
}

SamplingError::SamplingError(std::size_t sample, int step, const std::string& context)
    : std::runtime_error(
          fmt::format("non-finite state in sample {} at step {} ({})", sample, step, context)),
      step_(step) {}

std::vector<Vec2> initial_noise(std::size_t n, double sigma_max, std::uint64_t seed) {
    const RandomStream root(seed);
    std::vector<Vec2> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rs = root.split(i);
        const double z0 = rs.normal();
        const double z1 = rs.normal();
        out.emplace_back(sigma_max * z0, sigma_max * z1);
    }
    return out;
}

Vec2 integrate(const EpsFn& eps, const SigmaSchedule& schedule, Vec2 x, const Condition& cond, Solver solver,
               Trajectory* trace) {
    const auto& s = schedule.levels();
    if (trace) {
        trace->sigmas.assign(s.begin(), s.end());
        trace->states.clear();
        trace->states.reserve(s.size());
        trace->states.push_back(x);
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double h = s[i + 1] - s[i];
        const Vec2 d = eps(x, s[i], cond);
        Vec2 next = x + h * d;
        if (solver == Solver::heun) {
            const Vec2 d2 = eps(next, s[i + 1], cond);
            next = x + h * 0.5 * (d + d2);
        }
        x = next;
        if (!x.allFinite()) {
            throw SamplingError(0, static_cast<int>(i), "state");
        }
        if (trace) {
            trace->states.push_back(x);
        }
    }
    return x;
}

SampleRun ode_sample(const EpsFn& eps, const SigmaSchedule& schedule, std::size_t n, const Condition& cond,
                     std::uint64_t seed, const SampleOptions& options) {
    SampleRun run;
    run.seed = seed;
    const auto x0 = initial_noise(n, schedule.sigma_max(), seed);
    run.samples.reserve(n);
    if (options.record_trajectories) {
        run.trajectories.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Trajectory* trace = options.record_trajectories ? &run.trajectories[i] : nullptr;
        try {
            run.samples.push_back(integrate(eps, schedule, x0[i], cond, options.solver, trace));
        } catch (const SamplingError& e) {
            throw SamplingError(i, e.step(), fmt::format("condition {}, solver {}, {} steps", cond.to_string(),
                                                         to_string(options.solver), schedule.steps()));
        }
    }
    return run;
}

}  // namespace pglab

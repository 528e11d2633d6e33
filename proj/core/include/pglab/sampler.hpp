// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/datasets.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pglab {

/// Strictly decreasing noise levels sigma_max = levels[0] > ... > levels[N] = sigma_min.
class SigmaSchedule {
public:
    explicit SigmaSchedule(std::vector<double> levels);

    [[nodiscard]] const std::vector<double>& levels() const { return levels_; }
    [[nodiscard]] int steps() const { return static_cast<int>(levels_.size()) - 1; }
    [[nodiscard]] double sigma_max() const { return levels_.front(); }
    [[nodiscard]] double sigma_min() const { return levels_.back(); }

private:
    std::vector<double> levels_;
};

/// Power-law spacing in sigma^(1/rho) between the endpoints; rho = 1 is linear.
SigmaSchedule make_schedule(int n_steps, double sigma_max, double sigma_min, double rho);

enum class Solver { euler, heun };

std::string to_string(Solver s);
Solver parse_solver(const std::string& s);

/// Noise estimate driving the flow: eps(x, sigma, cond).
using EpsFn = std::function<Vec2(const Vec2&, double, const Condition&)>;

struct Trajectory {
    std::vector<double> sigmas;
    std::vector<Vec2> states;
};

struct SampleRun {
    std::vector<Vec2> samples;
    std::vector<Trajectory> trajectories;  // empty unless requested
    std::uint64_t seed = 0;
};

struct SampleOptions {
    Solver solver = Solver::euler;
    bool record_trajectories = false;
};

class SamplingError : public std::runtime_error {
public:
    SamplingError(std::size_t sample, int step, const std::string& context);
    [[nodiscard]] int step() const { return step_; }

private:
    int step_;
};

/// Initial states x_T ~ N(0, sigma_max^2 I), one derived stream per sample index.
std::vector<Vec2> initial_noise(std::size_t n, double sigma_max, std::uint64_t seed);

/// Integrates dx = eps(x, sigma) dsigma from sigma_max down to sigma_min.
SampleRun ode_sample(const EpsFn& eps, const SigmaSchedule& schedule, std::size_t n, const Condition& cond,
                     std::uint64_t seed, const SampleOptions& options = {});

/// Single trajectory from a given starting point.
Vec2 integrate(const EpsFn& eps, const SigmaSchedule& schedule, Vec2 x, const Condition& cond, Solver solver,
               Trajectory* trace = nullptr);

}  // namespace pglab

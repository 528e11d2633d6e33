// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/datasets.hpp"
#include "pglab/guidance.hpp"
#include "pglab/sampler.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pglab {

/// Fidelity of one sample set against the requested target condition.
///
/// subject_fidelity: mean log-likelihood under the requested target component
///   N(mu* + t_a, Sigma*). Higher is closer to the personalized subject.
/// attribute_fidelity: fraction of samples whose Bayes-optimal attribute under
///   the target spec equals the requested attribute.
/// energy_distance: two-sample statistic against fresh draws from the
///   requested component.
/// subject_rate: fraction of samples whose most probable component over the
///   union of pretrain and target mixtures is a target component.
struct EvalReport {
    double subject_fidelity = 0.0;
    double attribute_fidelity = 0.0;
    double energy_distance = 0.0;
    double subject_rate = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    GuidanceConfig guidance;
};

EvalReport evaluate(std::span<const Vec2> samples, const Condition& requested, const GmmSpec& target,
                    const GmmSpec& pretrain, std::uint64_t reference_seed);

/// V-statistic 2 E|A-B| - E|A-A'| - E|B-B'|, summed in a fixed order.
double energy_distance(std::span<const Vec2> a, std::span<const Vec2> b);

struct PermutationTest {
    double statistic = 0.0;
    double p_value = 1.0;
    int permutations = 0;  // requested
    int evaluated = 0;     // actually run; less than requested after an early stop
};

/// Permutation two-sample test on the energy statistic. The p-value counts the
/// observed labelling, (1 + #{null >= observed}) / (1 + permutations).
///
/// With stop_at > 0 the loop ends as soon as stop_at null statistics reach the
/// observed one. p_value is then a lower bound on the full-run value, so any
/// level below (1 + stop_at) / (1 + permutations) is decided exactly.
PermutationTest energy_permutation_test(std::span<const Vec2> a, std::span<const Vec2> b, int permutations,
                                        std::uint64_t seed, int stop_at = 0);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Shared inputs for every grid point of a sweep. Every row reuses the same
/// initial noise (seed) and reference draws (reference_seed).
struct EvalInputs {
    GmmSpec pretrain;
    GmmSpec target;
    Condition requested;
    std::size_t samples = 2000;
    SigmaSchedule schedule;
    Solver solver = Solver::euler;
    std::uint64_t seed = 0;
    std::uint64_t reference_seed = 0;
};

/// Noise-estimate closure for the sampler. The weak model of PG is resolved
/// once here, so per-step cost matches CFG.
EpsFn make_guided_eps_fn(const ModelPair& pair, const GuidanceConfig& cfg);

/// Sample with the given guidance and evaluate.
EvalReport run_config(const ModelPair& pair, const GuidanceConfig& cfg, const EvalInputs& inputs);

struct SweepRow {
    double value = 0.0;
    EvalReport report;
};

struct SweepTable {
    std::string swept;  // "omega" or "lambda"
    std::vector<SweepRow> rows;

    [[nodiscard]] std::vector<double> values() const;
    [[nodiscard]] std::vector<double> column(double EvalReport::*field) const;
};

SweepTable sweep_omega(const ModelPair& pair, double lambda, std::span<const double> grid, const EvalInputs& inputs);

SweepTable sweep_lambda(const ModelPair& pair, Method method, double omega, std::span<const double> grid,
                        const EvalInputs& inputs);

/// omega with the highest subject fidelity; ties go to the larger omega.
double select_best_omega(const SweepTable& table);

/// 0.0, 0.1, ..., 1.0 built from integers so the grid points are exact decimals.
std::vector<double> default_omega_grid();

}  // namespace pglab

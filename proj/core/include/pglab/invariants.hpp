// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/config.hpp"
#include "pglab/guidance.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pglab {

enum class Compare { less, less_equal, greater, equal };

struct CheckResult {
    std::string name;
    double value = 0.0;
    Compare op = Compare::less;
    double threshold = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    [[nodiscard]] bool all_pass() const;
    /// check,value,op,threshold,pass; numbers printed with 17 significant digits.
    [[nodiscard]] std::string to_csv() const;
};

/// Random probe point for guidance identities.
struct Probe {
    Vec2 x;
    double sigma = 1.0;
    Condition cond;
};

std::vector<Probe> make_probes(const Architecture& arch, std::size_t n, std::uint64_t seed);

/// Largest |PG(omega = 1) - CFG| over the probes.
double omega_one_gap(const ModelPair& pair, double lambda, std::span<const Probe> probes);

/// Largest |guided(lambda = 1) - forward(theta', c)| over methods and probes.
double lambda_one_gap(const ModelPair& pair, double omega, std::span<const Probe> probes);

/// Largest |PG_omega - (omega CFG + (1 - omega) PG_0)| over the probes.
double output_interpolation_gap(const ModelPair& pair, double lambda, double omega, std::span<const Probe> probes);

/// Largest relative error of loss_and_grad against central differences with
/// step h over `draws` random parameter/batch draws. Relative error is
/// |a - f| / max(|a|, |f|, floor).
double gradient_error(const Architecture& arch, int draws, int batch, double h, double floor, std::uint64_t seed);

/// Fast invariant suite on the configured architecture with random
/// parameters. When a trained pair and its fine-tuning data are given the
/// suite also checks the fine-tuning loss ordering.
VerifyReport run_invariants(const ExperimentConfig& config, const ModelPair* trained = nullptr,
                            const LabeledSamples* target = nullptr);

}  // namespace pglab

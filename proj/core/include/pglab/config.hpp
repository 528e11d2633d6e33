// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/datasets.hpp"
#include "pglab/denoiser.hpp"
#include "pglab/evaluation.hpp"
#include "pglab/guidance.hpp"
#include "pglab/sampler.hpp"
#include "pglab/training.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pglab {

/// Schema violation. `field()` is the dotted path of the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message);
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct SamplerConfig {
    int steps = 50;
    double sigma_max = 10.0;
    double sigma_min = 0.01;
    double rho = 7.0;
    Solver solver = Solver::euler;

    [[nodiscard]] SigmaSchedule schedule() const;
};

struct GuidanceDefaults {
    double lambda = 7.5;
    double ag_lambda = 2.0;
    double omega = 0.0;
};

struct EvalConfig {
    int attribute = 1;
    int samples = 2000;
};

struct SweepConfig {
    std::vector<double> omega_grid = default_omega_grid();
    std::vector<double> lambda_grid{1.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 7.5};
    std::vector<Method> lambda_methods{Method::cfg, Method::pg};
    std::vector<double> compare_lambdas{1.0, 7.5};
    std::vector<double> compare_omegas{0.0, 0.5, 1.0};
};

TrainConfig default_pretrain();
TrainConfig default_finetune();

/// Everything one experiment needs. All randomness derives from `seed`
/// through named substreams; TrainConfig::seed fields are filled from it.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    DataConfig data;
    Architecture model;
    TrainConfig pretrain = default_pretrain();
    TrainConfig finetune = default_finetune();
    SamplerConfig sampler;
    GuidanceDefaults guidance;
    EvalConfig eval;
    SweepConfig sweeps;

    static ExperimentConfig defaults();

    /// Throws ConfigError naming the first invalid field.
    void validate() const;

    /// Re-derives the stage seeds and the architecture's condition ranges
    /// after `seed` or `data` changed.
    void resolve();

    [[nodiscard]] std::uint64_t stream(std::string_view name) const;
    [[nodiscard]] Condition requested() const;
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text of one top-level section ("seed", "data", "model", ...),
/// stable across runs and used in cache keys.
std::string section_yaml(const ExperimentConfig& config, std::string_view section);

/// Canonical text of the whole config; parse_config(to_yaml(c)) reproduces c.
std::string to_yaml(const ExperimentConfig& config);

/// Short hex digest of to_yaml(config).
std::string config_hash(const ExperimentConfig& config);

std::vector<double> parse_grid(const std::string& text);

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/datasets.hpp"
#include "pglab/denoiser.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pglab {

enum class TrainMode { full, adapter };

std::string to_string(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

struct TrainConfig {
    int steps = 20000;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double final_lr_ratio = 1.0;  // cosine decay to learning_rate * ratio; 1 keeps it constant
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double p_drop = 0.1;
    double sigma_min = 0.01;
    double sigma_max = 10.0;
    TrainMode mode = TrainMode::full;
    int rank = 4;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] std::string to_yaml() const;
};

class TrainingError : public std::runtime_error {
public:
    TrainingError(int step, const std::string& what);
    [[nodiscard]] int step() const { return step_; }

private:
    int step_;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;

    static AdamState fresh(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Learning rate at `step` under the cosine schedule of `config`.
double scheduled_lr(const TrainConfig& config, int step);

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr,
               const AdamHyper& hyper = {});

struct TrainResult {
    ParamVector params;
    std::vector<double> losses;  // one entry per optimizer step
};

/// Joint conditional/unconditional training on fresh mixture draws; each
/// condition is replaced by null with probability p_drop.
TrainResult pretrain(const GmmSpec& spec, const Architecture& arch, const TrainConfig& config);

/// Fits theta to the fixed target set. In adapter mode only a low-rank delta on
/// the dense weights is trained and the result is materialized as theta + Delta.
TrainResult finetune(const ParamVector& theta, const LabeledSamples& target, const TrainConfig& config);

/// Fixed evaluation batch for the denoising objective on a sample set:
/// `draws` (sigma, noise) pairs per point from a dedicated seed.
std::vector<TrainingExample> make_eval_batch(const LabeledSamples& samples, double sigma_min, double sigma_max,
                                             int draws, std::uint64_t seed);

/// Denoising loss of `params` on the target set, using common random numbers
/// so different parameter vectors are directly comparable.
double target_loss(const ParamVector& params, const LabeledSamples& target, double sigma_min, double sigma_max,
                   int draws, std::uint64_t seed);

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/datasets.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pglab {

enum class Activation { tanh, silu };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

/// Shape of the fully-connected noise predictor eps(x, sigma, c).
///
/// Input features are the scaled point x / sqrt(sigma^2 + sigma_data^2), a
/// log-sigma scalar, `sigma_features` sinusoids of log sigma, and the
/// condition code. With `embedding_width > 0` the code is the sum of a learned
/// concept row and a learned attribute row (a separate learned row for null);
/// with `embedding_width == 0` it is a fixed one-hot code, which makes an arch
/// without hidden layers exactly linear in its parameters.
struct Architecture {
    std::vector<int> hidden{64, 64};
    Activation activation = Activation::silu;
    int sigma_features = 8;
    int embedding_width = 0;
    int concept_slots = 3;
    int attributes = 2;
    double sigma_data = 2.0;

    static constexpr int kInputDim = 2;
    static constexpr int kOutputDim = 2;

    void validate() const;

    [[nodiscard]] int condition_width() const;
    [[nodiscard]] int feature_width() const;
    [[nodiscard]] std::size_t embedding_parameter_count() const;
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] std::string to_yaml() const;
    static Architecture from_yaml(const std::string& text);

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Offsets of every tensor inside the flat parameter vector.
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::size_t weight = 0;  // input-major: in x out
    std::size_t bias = 0;
};

struct ParamLayout {
    std::size_t concept_rows = 0;
    std::size_t attribute_rows = 0;
    std::size_t null_row = 0;
    std::vector<DenseLayer> layers;
    std::size_t total = 0;

    static ParamLayout of(const Architecture& arch);
};

class ArchitectureError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Flat float64 parameter store. Immutable once built.
class ParamVector {
public:
    ParamVector(Architecture arch, std::vector<double> values);

    static ParamVector zeros(const Architecture& arch);

    [[nodiscard]] const Architecture& arch() const { return arch_; }
    [[nodiscard]] const ParamLayout& layout() const { return layout_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

    /// Copy of the raw values, for owners that need to mutate (optimizers).
    [[nodiscard]] std::vector<double> to_vector() const { return values_; }

    friend bool operator==(const ParamVector& a, const ParamVector& b) {
        return a.arch_ == b.arch_ && a.values_ == b.values_;
    }

private:
    Architecture arch_;
    ParamLayout layout_;
    std::vector<double> values_;
};

ParamVector init_params(const Architecture& arch, std::uint64_t seed);

Vec2 forward(const ParamVector& params, const Vec2& x, double sigma, const Condition& cond);

/// Same network on a borrowed parameter span; `params.size()` must match the layout.
Vec2 forward(const Architecture& arch, std::span<const double> params, const Vec2& x, double sigma,
             const Condition& cond);

/// Number of forward passes issued on this thread. Instrumentation for tests.
std::uint64_t forward_evaluations();

/// One term of the denoising objective: clean point x, unit-normal noise n,
/// network input x + sigma * n, regression target n.
struct TrainingExample {
    Vec2 x = Vec2::Zero();
    Condition cond;
    double sigma = 1.0;
    Vec2 noise = Vec2::Zero();
};

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Mean over the batch of ||eps(x + sigma n, sigma, c) - n||^2 and its gradient.
LossAndGrad loss_and_grad(const Architecture& arch, std::span<const double> params,
                          std::span<const TrainingExample> batch);
LossAndGrad loss_and_grad(const ParamVector& params, std::span<const TrainingExample> batch);

/// Loss only; avoids the backward pass.
double batch_loss(const ParamVector& params, std::span<const TrainingExample> batch);

/// theta_omega = omega * theta_prime + (1 - omega) * theta.
ParamVector interpolate(const ParamVector& theta, const ParamVector& theta_prime, double omega);

/// Rank-r additive factorization Delta W = B A for every dense weight matrix.
/// B starts at zero so a fresh adapter materializes to the base weights.
class LowRankAdapter {
public:
    static LowRankAdapter init(const Architecture& arch, int rank, std::uint64_t seed);

    [[nodiscard]] int rank() const { return rank_; }
    [[nodiscard]] const Architecture& arch() const { return arch_; }
    [[nodiscard]] const ParamLayout& layout() const { return layout_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }

    /// base + Delta, with Delta nonzero only on dense weights.
    [[nodiscard]] ParamVector materialize(const ParamVector& base) const;

    /// Chain rule from a gradient w.r.t. the full parameters to the adapter factors.
    [[nodiscard]] std::vector<double> chain_gradient(std::span<const double> full_grad) const;

private:
    struct Factor {
        std::size_t a = 0;  // rank x in
        std::size_t b = 0;  // out x rank
    };

    Architecture arch_;
    ParamLayout layout_;
    int rank_ = 0;
    std::vector<Factor> factors_;
    std::vector<double> values_;
};

}  // namespace pglab

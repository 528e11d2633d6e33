// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/training.hpp"

#include "pglab/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pglab {

namespace {

double log_uniform_sigma(RandomStream& rs, double lo, double hi) {
    const double a = std::log(lo);
    const double b = std::log(hi);
    return std::exp(a + rs.uniform() * (b - a));
}

AdamHyper hyper_of(const TrainConfig& c) {
    return {c.beta1, c.beta2, c.epsilon};
}

}  // namespace

std::string to_string(TrainMode m) {
    return m == TrainMode::full ? "full" : "adapter";
}

TrainMode parse_train_mode(const std::string& s) {
    if (s == "full") {
        return TrainMode::full;
    }
    if (s == "adapter") {
        return TrainMode::adapter;
    }
    throw std::invalid_argument(fmt::format("unknown training mode '{}'", s));
}

void TrainConfig::validate() const {
    if (steps < 1) {
        throw std::invalid_argument("steps must be at least 1");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("batch_size must be at least 1");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be finite and non-negative");
    }
    if (!(final_lr_ratio >= 0.0 && final_lr_ratio <= 1.0)) {
        throw std::invalid_argument("final_lr_ratio must lie in [0, 1]");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1) and epsilon must be positive");
    }
    if (!(p_drop >= 0.0 && p_drop < 1.0)) {
        throw std::invalid_argument("p_drop must lie in [0, 1)");
    }
    if (!(sigma_min > 0.0 && sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
        throw std::invalid_argument("need 0 < sigma_min < sigma_max");
    }
    if (mode == TrainMode::adapter && rank < 1) {
        throw std::invalid_argument("adapter rank must be at least 1");
    }
}

std::string TrainConfig::to_yaml() const {
    return fmt::format(
        "steps: {}\nbatch_size: {}\nlearning_rate: {:.17g}\nfinal_lr_ratio: {:.17g}\nbeta1: {:.17g}\nbeta2: {:.17g}\nepsilon: {:.17g}\n"
        "p_drop: {:.17g}\nsigma_min: {:.17g}\nsigma_max: {:.17g}\nmode: {}\nrank: {}\nseed: {}\n",
        steps, batch_size, learning_rate, final_lr_ratio, beta1, beta2, epsilon, p_drop, sigma_min, sigma_max, to_string(mode), rank,
        seed);
}

double scheduled_lr(const TrainConfig& config, int step) {
    if (config.final_lr_ratio == 1.0 || config.steps < 2) {
        return config.learning_rate;
    }
    const double t = static_cast<double>(step) / static_cast<double>(config.steps - 1);
    const double c = 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    return config.learning_rate * (config.final_lr_ratio + (1.0 - config.final_lr_ratio) * c);
}

TrainingError::TrainingError(int step, const std::string& what)
    : std::runtime_error(fmt::format("training diverged at step {}: {}", step, what)), step_(step) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr,
               const AdamHyper& hyper) {
    if (state.m.size() != params.size() || grad.size() != params.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + hyper.epsilon);
    }
}

TrainResult pretrain(const GmmSpec& spec, const Architecture& arch, const TrainConfig& config) {
    config.validate();
    std::size_t conditions = 0;
    {
        std::vector<Condition> seen;
        for (const auto& c : spec.components()) {
            if (std::find(seen.begin(), seen.end(), c.condition) == seen.end()) {
                seen.push_back(c.condition);
            }
        }
        conditions = seen.size();
    }
    if (conditions < 2) {
        throw std::invalid_argument("pretraining needs a spec with at least 2 conditions");
    }

    const RandomStream root(config.seed);
    const ParamVector init = init_params(arch, root.split("init").key());
    std::vector<double> theta = init.to_vector();
    AdamState adam = AdamState::fresh(theta.size());
    const AdamHyper hyper = hyper_of(config);

    std::vector<TrainingExample> batch(static_cast<std::size_t>(config.batch_size));
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(config.steps));
    const RandomStream data_root = root.split("data");
    const RandomStream aux_root = root.split("aux");

    for (int step = 0; step < config.steps; ++step) {
        const LabeledSamples draw =
            sample_dataset(spec, batch.size(), data_root.split(static_cast<std::uint64_t>(step)).key());
        RandomStream rs = aux_root.split(static_cast<std::uint64_t>(step));
        for (std::size_t b = 0; b < batch.size(); ++b) {
            auto& ex = batch[b];
            ex.x = draw.points[b];
            ex.cond = rs.uniform() < config.p_drop ? Condition::null() : draw.conditions[b];
            ex.sigma = log_uniform_sigma(rs, config.sigma_min, config.sigma_max);
            const double n0 = rs.normal();
            const double n1 = rs.normal();
            ex.noise = Vec2(n0, n1);
        }
        LossAndGrad lg;
        try {
            lg = loss_and_grad(arch, theta, batch);
        } catch (const std::runtime_error& e) {
            throw TrainingError(step, e.what());
        }
        if (!std::isfinite(lg.loss)) {
            throw TrainingError(step, "non-finite loss");
        }
        losses.push_back(lg.loss);
        adam_step(adam, theta, lg.grad, scheduled_lr(config, step), hyper);
    }
    return {ParamVector(arch, std::move(theta)), std::move(losses)};
}

TrainResult finetune(const ParamVector& theta, const LabeledSamples& target, const TrainConfig& config) {
    config.validate();
    if (target.size() == 0) {
        throw std::invalid_argument("fine-tuning needs at least one target sample");
    }
    if (target.conditions.size() != target.points.size()) {
        throw std::invalid_argument("target points and conditions differ in length");
    }
    const Architecture& arch = theta.arch();
    const RandomStream root(config.seed);
    const RandomStream aux_root = root.split("aux");
    const AdamHyper hyper = hyper_of(config);
    std::vector<TrainingExample> batch(static_cast<std::size_t>(config.batch_size));
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(config.steps));

    auto fill_batch = [&](int step) {
        RandomStream rs = aux_root.split(static_cast<std::uint64_t>(step));
        for (auto& ex : batch) {
            const std::size_t i = rs.below(target.size());
            ex.x = target.points[i];
            ex.cond = rs.uniform() < config.p_drop ? Condition::null() : target.conditions[i];
            ex.sigma = log_uniform_sigma(rs, config.sigma_min, config.sigma_max);
            const double n0 = rs.normal();
            const double n1 = rs.normal();
            ex.noise = Vec2(n0, n1);
        }
    };

    if (config.mode == TrainMode::full) {
        std::vector<double> p = theta.to_vector();
        AdamState adam = AdamState::fresh(p.size());
        for (int step = 0; step < config.steps; ++step) {
            fill_batch(step);
            LossAndGrad lg;
            try {
                lg = loss_and_grad(arch, p, batch);
            } catch (const std::runtime_error& e) {
                throw TrainingError(step, e.what());
            }
            if (!std::isfinite(lg.loss)) {
                throw TrainingError(step, "non-finite loss");
            }
            losses.push_back(lg.loss);
            adam_step(adam, p, lg.grad, scheduled_lr(config, step), hyper);
        }
        return {ParamVector(arch, std::move(p)), std::move(losses)};
    }

    LowRankAdapter adapter = LowRankAdapter::init(arch, config.rank, root.split("adapter").key());
    AdamState adam = AdamState::fresh(adapter.values().size());
    for (int step = 0; step < config.steps; ++step) {
        fill_batch(step);
        const ParamVector merged = adapter.materialize(theta);
        LossAndGrad lg;
        try {
            lg = loss_and_grad(merged, batch);
        } catch (const std::runtime_error& e) {
            throw TrainingError(step, e.what());
        }
        if (!std::isfinite(lg.loss)) {
            throw TrainingError(step, "non-finite loss");
        }
        losses.push_back(lg.loss);
        const std::vector<double> g = adapter.chain_gradient(lg.grad);
        adam_step(adam, adapter.values(), g, scheduled_lr(config, step), hyper);
    }
    return {adapter.materialize(theta), std::move(losses)};
}

std::vector<TrainingExample> make_eval_batch(const LabeledSamples& samples, double sigma_min, double sigma_max,
                                             int draws, std::uint64_t seed) {
    if (draws < 1) {
        throw std::invalid_argument("draws must be at least 1");
    }
    const RandomStream root(seed);
    std::vector<TrainingExample> out;
    out.reserve(samples.size() * static_cast<std::size_t>(draws));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        RandomStream rs = root.split(i);
        for (int d = 0; d < draws; ++d) {
            TrainingExample ex;
            ex.x = samples.points[i];
            ex.cond = samples.conditions[i];
            ex.sigma = log_uniform_sigma(rs, sigma_min, sigma_max);
            const double n0 = rs.normal();
            const double n1 = rs.normal();
            ex.noise = Vec2(n0, n1);
            out.push_back(ex);
        }
    }
    return out;
}

double target_loss(const ParamVector& params, const LabeledSamples& target, double sigma_min, double sigma_max,
                   int draws, std::uint64_t seed) {
    const auto batch = make_eval_batch(target, sigma_min, sigma_max, draws, seed);
    return batch_loss(params, batch);
}

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/datasets.hpp"
#include "pglab/denoiser.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace pglab {

enum class Method { cfg, ag, pg };

std::string to_string(Method m);
Method parse_method(const std::string& s);

/// Guidance selector. For PG the weak branch is the null-conditioned model at
/// theta_omega; CFG is the omega = 1 member of that family.
struct GuidanceConfig {
    Method method = Method::pg;
    double lambda = 7.5;
    double omega = 0.0;

    void validate() const;
    [[nodiscard]] std::string describe() const;
};

/// Pretrained and fine-tuned parameters plus a cache of interpolated weak
/// models. Copies share the cache.
class ModelPair {
public:
    ModelPair(ParamVector pretrained, ParamVector finetuned);

    [[nodiscard]] const ParamVector& pretrained() const { return pretrained_; }
    [[nodiscard]] const ParamVector& finetuned() const { return finetuned_; }

    /// theta_omega, computed once per distinct omega and then reused.
    [[nodiscard]] std::shared_ptr<const ParamVector> interpolated(double omega) const;

    [[nodiscard]] std::size_t cached_count() const;

    /// Disable the cache (every call re-interpolates). Used to check that
    /// caching is invisible in results.
    void set_caching(bool enabled) { caching_ = enabled; }

private:
    struct Cache {
        mutable std::mutex mu;
        std::map<double, std::shared_ptr<const ParamVector>> entries;
    };

    ParamVector pretrained_;
    ParamVector finetuned_;
    std::shared_ptr<Cache> cache_;
    bool caching_ = true;
};

/// epsilon_{theta_omega}(x | null).
Vec2 weak_eps(const ModelPair& pair, double omega, const Vec2& x, double sigma, const Condition& cond);

/// Guided estimate weak + lambda * (strong - weak) for the configured method:
///   CFG: weak = eps_theta'(x | null)
///   AG:  weak = eps_theta(x | c)
///   PG:  weak = eps_theta_omega(x | null)
/// with strong = eps_theta'(x | c) in all three.
Vec2 guided_eps(const ModelPair& pair, const GuidanceConfig& cfg, const Vec2& x, double sigma, const Condition& cond);

/// Two-branch decomposition of guided_eps. Exposed for tests and diagnostics.
struct GuidanceBranches {
    Vec2 weak;
    Vec2 strong;
};
GuidanceBranches guidance_branches(const ModelPair& pair, const GuidanceConfig& cfg, const Vec2& x, double sigma,
                                   const Condition& cond);

inline Vec2 combine(const GuidanceBranches& b, double lambda) {
    return b.weak + lambda * (b.strong - b.weak);
}

/// Closed-form analogue of the model pair: the pretrained model is replaced by
/// the exact pretrain mixture and the fine-tuned model by the pretrain mixture
/// extended with the target components. A condition the pretrained mixture has
/// no component for falls back to its marginal. PG's omega branch interpolates
/// the two null-conditioned oracles in output space.
class OracleModels {
public:
    OracleModels(GmmSpec pretrain, const GmmSpec& target);

    [[nodiscard]] const GmmSpec& pretrain() const { return pretrain_; }
    [[nodiscard]] const GmmSpec& adapted() const { return adapted_; }

    [[nodiscard]] Vec2 pretrained_eps(const Vec2& x, double sigma, const Condition& cond) const;
    [[nodiscard]] Vec2 adapted_eps(const Vec2& x, double sigma, const Condition& cond) const;

private:
    GmmSpec pretrain_;
    GmmSpec adapted_;
};

/// Union of both mixtures with uniform component weights.
GmmSpec adapted_spec(const GmmSpec& pretrain, const GmmSpec& target);

Vec2 oracle_guided_eps(const OracleModels& oracle, const GuidanceConfig& cfg, const Vec2& x, double sigma,
                       const Condition& cond);
Vec2 oracle_guided_eps(const GmmSpec& pretrain, const GmmSpec& target, const GuidanceConfig& cfg, const Vec2& x,
                       double sigma, const Condition& cond);

}  // namespace pglab

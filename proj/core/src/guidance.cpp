// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/guidance.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace pglab {

std::string to_string(Method m) {
    switch (m) {
        case Method::cfg:
            return "cfg";
        case Method::ag:
            return "ag";
        case Method::pg:
            return "pg";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "cfg" || s == "CFG") {
        return Method::cfg;
    }
    if (s == "ag" || s == "AG") {
        return Method::ag;
    }
    if (s == "pg" || s == "PG") {
        return Method::pg;
    }
    throw std::invalid_argument(fmt::format("unknown guidance method '{}'", s));
}

void GuidanceConfig::validate() const {
    if (!(lambda >= 1.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument(fmt::format("guidance scale {} must be >= 1", lambda));
    }
    if (!(omega >= 0.0 && omega <= 1.0)) {
        throw std::invalid_argument(fmt::format("interpolation scale {} outside [0, 1]", omega));
    }
}

std::string GuidanceConfig::describe() const {
    return fmt::format("method={} lambda={} omega={}", to_string(method), lambda, omega);
}

ModelPair::ModelPair(ParamVector pretrained, ParamVector finetuned)
    : pretrained_(std::move(pretrained)), finetuned_(std::move(finetuned)), cache_(std::make_shared<Cache>()) {
    if (!(pretrained_.arch() == finetuned_.arch())) {
        throw ArchitectureError("pretrained and fine-tuned models have different architectures");
    }
}

std::shared_ptr<const ParamVector> ModelPair::interpolated(double omega) const {
    if (!caching_) {
        return std::make_shared<const ParamVector>(interpolate(pretrained_, finetuned_, omega));
    }
    std::lock_guard lock(cache_->mu);
    auto it = cache_->entries.find(omega);
    if (it != cache_->entries.end()) {
        return it->second;
    }
    auto p = std::make_shared<const ParamVector>(interpolate(pretrained_, finetuned_, omega));
    cache_->entries.emplace(omega, p);
    return p;
}

std::size_t ModelPair::cached_count() const {
    std::lock_guard lock(cache_->mu);
    return cache_->entries.size();
}

Vec2 weak_eps(const ModelPair& pair, double omega, const Vec2& x, double sigma, const Condition& cond) {
    const auto theta = pair.interpolated(omega);
    return forward(*theta, x, sigma, cond);
}

GuidanceBranches guidance_branches(const ModelPair& pair, const GuidanceConfig& cfg, const Vec2& x, double sigma,
                                   const Condition& cond) {
    if (cond.is_null()) {
        throw std::invalid_argument("guidance needs a non-null condition");
    }
    GuidanceBranches b;
    switch (cfg.method) {
        case Method::cfg:
            b.weak = forward(pair.finetuned(), x, sigma, Condition::null());
            break;
        case Method::ag:
            b.weak = forward(pair.pretrained(), x, sigma, cond);
            break;
        case Method::pg:
            b.weak = weak_eps(pair, cfg.omega, x, sigma, Condition::null());
            break;
    }
    b.strong = forward(pair.finetuned(), x, sigma, cond);
    return b;
}

namespace {

Vec2 apply_scale(const GuidanceBranches& b, double lambda) {
    // lambda = 1 is the unguided conditional estimate; return it exactly.
    if (lambda == 1.0) {
        return b.strong;
    }
    return combine(b, lambda);
}

}  // namespace

Vec2 guided_eps(const ModelPair& pair, const GuidanceConfig& cfg, const Vec2& x, double sigma, const Condition& cond) {
    return apply_scale(guidance_branches(pair, cfg, x, sigma, cond), cfg.lambda);
}

GmmSpec adapted_spec(const GmmSpec& pretrain, const GmmSpec& target) {
    std::vector<GmmComponent> comps = pretrain.components();
    comps.insert(comps.end(), target.components().begin(), target.components().end());
    const double w = 1.0 / static_cast<double>(comps.size());
    double partial = 0.0;
    for (std::size_t k = 0; k + 1 < comps.size(); ++k) {
        comps[k].weight = w;
        partial += w;
    }
    comps.back().weight = 1.0 - partial;
    return GmmSpec::create(std::move(comps));
}

OracleModels::OracleModels(GmmSpec pretrain, const GmmSpec& target)
    : pretrain_(std::move(pretrain)), adapted_(adapted_spec(pretrain_, target)) {}

Vec2 OracleModels::pretrained_eps(const Vec2& x, double sigma, const Condition& cond) const {
    if (!cond.is_null() && pretrain_.matching(cond).empty()) {
        return analytic_eps(pretrain_, x, sigma, Condition::null());
    }
    return analytic_eps(pretrain_, x, sigma, cond);
}

Vec2 OracleModels::adapted_eps(const Vec2& x, double sigma, const Condition& cond) const {
    return analytic_eps(adapted_, x, sigma, cond);
}

Vec2 oracle_guided_eps(const OracleModels& oracle, const GuidanceConfig& cfg, const Vec2& x, double sigma,
                       const Condition& cond) {
    if (cond.is_null()) {
        throw std::invalid_argument("guidance needs a non-null condition");
    }
    GuidanceBranches b;
    b.strong = oracle.adapted_eps(x, sigma, cond);
    switch (cfg.method) {
        case Method::cfg:
            b.weak = oracle.adapted_eps(x, sigma, Condition::null());
            break;
        case Method::ag:
            b.weak = oracle.pretrained_eps(x, sigma, cond);
            break;
        case Method::pg: {
            const Vec2 tuned = oracle.adapted_eps(x, sigma, Condition::null());
            const Vec2 base = oracle.pretrained_eps(x, sigma, Condition::null());
            b.weak = cfg.omega * tuned + (1.0 - cfg.omega) * base;
            break;
        }
    }
    return apply_scale(b, cfg.lambda);
}

Vec2 oracle_guided_eps(const GmmSpec& pretrain, const GmmSpec& target, const GuidanceConfig& cfg, const Vec2& x,
                       double sigma, const Condition& cond) {
    return oracle_guided_eps(OracleModels(pretrain, target), cfg, x, sigma, cond);
}

}  // namespace pglab

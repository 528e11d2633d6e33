// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/datasets.hpp"

#include "pglab/rng.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace pglab {

namespace {

bool is_spd(const Mat2& m) {
    if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
        return false;
    }
    Eigen::LLT<Mat2> llt(m);
    return llt.info() == Eigen::Success;
}

void require_spd(const Mat2& m, const std::string& what) {
    if (!is_spd(m)) {
        throw DataError(fmt::format("{} covariance is not symmetric positive definite", what));
    }
}

// log N(x; mean, cov) for a 2x2 SPD covariance, written out in closed form.
struct Gauss2 {
    Vec2 mean;
    Mat2 precision;
    double log_norm;

    Gauss2(const Vec2& m, const Mat2& cov) : mean(m) {
        const double det = cov.determinant();
        precision = cov.inverse();
        log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
    }

    [[nodiscard]] double log_pdf(const Vec2& x) const {
        const Vec2 d = x - mean;
        return log_norm - 0.5 * d.dot(precision * d);
    }
};

}  // namespace

std::string Condition::to_string() const {
    if (is_null()) {
        return "null";
    }
    return fmt::format("({},{})", concept_, attribute_);
}

GmmSpec GmmSpec::create(std::vector<GmmComponent> components) {
    if (components.empty()) {
        throw DataError("mixture needs at least one component");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k) {
        const auto& c = components[k];
        if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
            throw DataError(fmt::format("component {} has non-positive weight", k));
        }
        if (!c.mean.allFinite()) {
            throw DataError(fmt::format("component {} has a non-finite mean", k));
        }
        require_spd(c.covariance, fmt::format("component {}", k));
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw DataError(fmt::format("component weights sum to {} instead of 1", total));
    }
    GmmSpec spec;
    spec.components_ = std::move(components);
    return spec;
}

std::vector<std::size_t> GmmSpec::matching(const Condition& cond) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        if (cond.is_null() || components_[k].condition == cond) {
            out.push_back(k);
        }
    }
    return out;
}

Vec2 GmmSpec::mean() const {
    Vec2 m = Vec2::Zero();
    for (const auto& c : components_) {
        m += c.weight * c.mean;
    }
    return m;
}

std::string GmmSpec::to_yaml() const {
    std::string out = "components:\n";
    for (const auto& c : components_) {
        out += fmt::format("  - weight: {:.17g}\n", c.weight);
        out += fmt::format("    mean: [{:.17g}, {:.17g}]\n", c.mean.x(), c.mean.y());
        out += fmt::format("    covariance: [[{:.17g}, {:.17g}], [{:.17g}, {:.17g}]]\n", c.covariance(0, 0),
                           c.covariance(0, 1), c.covariance(1, 0), c.covariance(1, 1));
        if (c.condition.is_null()) {
            out += "    condition: null\n";
        } else {
            out += fmt::format("    condition: {{concept: {}, attribute: {}}}\n", c.condition.concept_id(),
                               c.condition.attribute());
        }
    }
    return out;
}

GmmSpec make_pretrain_spec(const DataConfig& config) {
    const int C = config.num_concepts();
    const int A = config.num_attributes();
    if (C < 2) {
        throw DataError("need at least 2 concepts");
    }
    if (A < 2) {
        throw DataError("need at least 2 attributes");
    }
    require_spd(config.covariance, "pretrain");

    const double w = 1.0 / static_cast<double>(C * A);
    std::vector<GmmComponent> comps;
    comps.reserve(static_cast<std::size_t>(C * A));
    for (int c = 0; c < C; ++c) {
        for (int a = 0; a < A; ++a) {
            comps.push_back({w, config.concept_means[c] + config.attribute_shifts[a], config.covariance,
                             Condition::token(c, a)});
        }
    }
    // Equal weights may not sum to exactly 1 in binary; fold the residue into the last one.
    double partial = 0.0;
    for (std::size_t k = 0; k + 1 < comps.size(); ++k) {
        partial += comps[k].weight;
    }
    comps.back().weight = 1.0 - partial;
    return GmmSpec::create(std::move(comps));
}

GmmSpec make_target_spec(const DataConfig& config) {
    const int C = config.num_concepts();
    const int A = config.num_attributes();
    if (A < 2) {
        throw DataError("need at least 2 attributes");
    }
    if (config.target_concept < C) {
        throw DataError(fmt::format("target concept id {} collides with a pretrain concept (ids 0..{})",
                                    config.target_concept, C - 1));
    }
    if (config.base_attribute < 0 || config.base_attribute >= A) {
        throw DataError(fmt::format("base attribute {} out of range", config.base_attribute));
    }
    require_spd(config.target_covariance, "target");

    // The target must be a genuinely new cluster, not a relabelled pretrain one.
    const Vec2 base = config.target_mean + config.attribute_shifts[config.base_attribute];
    for (int c = 0; c < C; ++c) {
        for (int a = 0; a < A; ++a) {
            const Vec2 m = config.concept_means[c] + config.attribute_shifts[a];
            const double d = mahalanobis(base, m, config.covariance);
            if (!(d > 2.0)) {
                throw DataError(fmt::format(
                    "target base mean is within Mahalanobis distance {:.3f} of pretrain component ({},{})", d, c, a));
            }
        }
    }
    const double w = 1.0 / static_cast<double>(A);
    std::vector<GmmComponent> comps;
    for (int a = 0; a < A; ++a) {
        comps.push_back({w, config.target_mean + config.attribute_shifts[a], config.target_covariance,
                         Condition::token(config.target_concept, a)});
    }
    double partial = 0.0;
    for (std::size_t k = 0; k + 1 < comps.size(); ++k) {
        partial += comps[k].weight;
    }
    comps.back().weight = 1.0 - partial;
    return GmmSpec::create(std::move(comps));
}

const GmmComponent& target_component(const GmmSpec& target, int attribute) {
    for (const auto& c : target.components()) {
        if (!c.condition.is_null() && c.condition.attribute() == attribute) {
            return c;
        }
    }
    throw DataError(fmt::format("unknown attribute id {}", attribute));
}

LabeledSamples sample_dataset(const GmmSpec& spec, std::size_t n, std::uint64_t seed,
                              const std::optional<Condition>& filter) {
    if (n == 0) {
        throw DataError("sample count must be at least 1");
    }
    std::vector<std::size_t> pool;
    if (filter) {
        for (std::size_t k = 0; k < spec.size(); ++k) {
            if (spec.components()[k].condition == *filter) {
                pool.push_back(k);
            }
        }
        if (pool.empty()) {
            throw DataError(fmt::format("no component matches condition {}", filter->to_string()));
        }
    } else {
        pool.resize(spec.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
    }

    std::vector<double> cumulative;
    std::vector<Mat2> chol;
    double acc = 0.0;
    for (std::size_t k : pool) {
        acc += spec.components()[k].weight;
        cumulative.push_back(acc);
        chol.push_back(Eigen::LLT<Mat2>(spec.components()[k].covariance).matrixL());
    }

    const RandomStream root(seed);
    LabeledSamples out;
    out.seed = seed;
    out.points.reserve(n);
    out.conditions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rs = root.split(i);
        const double u = rs.uniform() * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), pool.size() - 1);
        const auto& comp = spec.components()[pool[j]];
        const double z0 = rs.normal();
        const double z1 = rs.normal();
        out.points.emplace_back(comp.mean + chol[j] * Vec2(z0, z1));
        out.conditions.push_back(comp.condition);
    }
    return out;
}

std::vector<Vec2> sample_gaussian(const Vec2& mean, const Mat2& covariance, std::size_t n, std::uint64_t seed) {
    require_spd(covariance, "reference");
    const Mat2 L = Eigen::LLT<Mat2>(covariance).matrixL();
    const RandomStream root(seed);
    std::vector<Vec2> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rs = root.split(i);
        const double z0 = rs.normal();
        const double z1 = rs.normal();
        out.emplace_back(mean + L * Vec2(z0, z1));
    }
    return out;
}

Vec2 analytic_eps(const GmmSpec& spec, const Vec2& x, double sigma, const Condition& cond) {
    if (!(sigma > 0.0)) {
        throw DataError("sigma must be positive");
    }
    const auto idx = spec.matching(cond);
    if (idx.empty()) {
        throw DataError(fmt::format("no component matches condition {}", cond.to_string()));
    }
    const Mat2 noise = Mat2::Identity() * (sigma * sigma);

    // Posterior responsibilities via log-sum-exp, then
    //   eps = sigma * sum_k r_k (Sigma_k + sigma^2 I)^{-1} (x - mu_k).
    std::vector<double> logw(idx.size());
    std::vector<Vec2> pulls(idx.size());
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto& c = spec.components()[idx[j]];
        const Gauss2 g(c.mean, c.covariance + noise);
        logw[j] = std::log(c.weight) + g.log_pdf(x);
        pulls[j] = g.precision * (x - c.mean);
        max_logw = std::max(max_logw, logw[j]);
    }
    double total = 0.0;
    Vec2 acc = Vec2::Zero();
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const double r = std::exp(logw[j] - max_logw);
        total += r;
        acc += r * pulls[j];
    }
    return sigma * acc / total;
}

double noisy_log_density(const GmmSpec& spec, const Vec2& x, double sigma, const Condition& cond) {
    const auto idx = spec.matching(cond);
    if (idx.empty()) {
        throw DataError(fmt::format("no component matches condition {}", cond.to_string()));
    }
    double wsum = 0.0;
    for (std::size_t k : idx) {
        wsum += spec.components()[k].weight;
    }
    const Mat2 noise = Mat2::Identity() * (sigma * sigma);
    std::vector<double> logw;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k : idx) {
        const auto& c = spec.components()[k];
        logw.push_back(std::log(c.weight / wsum) + Gauss2(c.mean, c.covariance + noise).log_pdf(x));
        m = std::max(m, logw.back());
    }
    double s = 0.0;
    for (double v : logw) {
        s += std::exp(v - m);
    }
    return m + std::log(s);
}

double gaussian_log_pdf(const Vec2& x, const Vec2& mean, const Mat2& covariance) {
    return Gauss2(mean, covariance).log_pdf(x);
}

double mahalanobis(const Vec2& x, const Vec2& mean, const Mat2& covariance) {
    const Vec2 d = x - mean;
    return std::sqrt(d.dot(covariance.inverse() * d));
}

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/datasets.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace pglab {
namespace {

DataConfig two_by_two() {
    DataConfig c;
    c.concept_means = {Vec2(-3, 0), Vec2(3, 0)};
    c.attribute_shifts = {Vec2(0, 0), Vec2(0, 4)};
    c.covariance = Mat2::Identity();
    return c;
}

// Independent mixture density: plain sum of Gaussian pdfs with explicit 2x2 algebra.
double reference_log_density(const std::vector<GmmComponent>& comps, const Vec2& x, double sigma) {
    double total = 0.0;
    for (const auto& c : comps) {
        const double a = c.covariance(0, 0) + sigma * sigma;
        const double b = c.covariance(0, 1);
        const double d = c.covariance(1, 1) + sigma * sigma;
        const double det = a * d - b * b;
        const double dx = x.x() - c.mean.x();
        const double dy = x.y() - c.mean.y();
        const double q = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        total += c.weight * std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
    }
    return std::log(total);
}

TEST(PretrainSpec, TwoByTwoHasFourEqualComponents) {
    const GmmSpec s = make_pretrain_spec(two_by_two());
    ASSERT_EQ(s.size(), 4u);
    for (const auto& c : s.components()) {
        EXPECT_NEAR(c.weight, 0.25, 1e-15);
    }
    EXPECT_EQ(s.components()[3].mean, Vec2(3, 4));
}

TEST(PretrainSpec, RejectsSingleAttribute) {
    DataConfig c = two_by_two();
    c.attribute_shifts = {Vec2(0, 0)};
    try {
        make_pretrain_spec(c);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_STREQ(e.what(), "need at least 2 attributes");
    }
}

TEST(PretrainSpec, RejectsSingleConceptAndNonSpdCovariance) {
    DataConfig c = two_by_two();
    c.concept_means = {Vec2(0, 0)};
    EXPECT_THROW(make_pretrain_spec(c), DataError);
    c = two_by_two();
    c.covariance << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(make_pretrain_spec(c), DataError);
}

TEST(PretrainSpec, MarginalMeanMatchesMonteCarlo) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    const std::size_t n = 1'000'000;
    const LabeledSamples d = sample_dataset(s, n, 11);
    Vec2 mean = Vec2::Zero();
    for (const auto& p : d.points) {
        mean += p;
    }
    mean /= static_cast<double>(n);
    Vec2 var = Vec2::Zero();
    for (const auto& p : d.points) {
        var += (p - mean).cwiseProduct(p - mean);
    }
    var /= static_cast<double>(n - 1);
    const Vec2 se = (var / static_cast<double>(n)).cwiseSqrt();
    const Vec2 expected = s.mean();
    EXPECT_LT(std::abs(mean.x() - expected.x()), 3.0 * se.x());
    EXPECT_LT(std::abs(mean.y() - expected.y()), 3.0 * se.y());
}

TEST(TargetSpec, ComponentsFollowAttributeShifts) {
    DataConfig c = two_by_two();
    c.target_concept = 7;
    c.target_mean = Vec2(0, -3);
    const GmmSpec t = make_target_spec(c);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t.components()[0].mean, Vec2(0, -3));
    EXPECT_EQ(t.components()[1].mean, Vec2(0, 1));
    for (const auto& comp : t.components()) {
        EXPECT_EQ(comp.condition.concept_id(), 7);
    }
}

TEST(TargetSpec, RejectsCollidingConcept) {
    DataConfig c = two_by_two();
    c.target_concept = 0;
    EXPECT_THROW(make_target_spec(c), DataError);
}

TEST(TargetSpec, RejectsTargetOnTopOfPretrainComponent) {
    DataConfig c = two_by_two();
    c.target_mean = Vec2(-3.0, 1.0);
    EXPECT_THROW(make_target_spec(c), DataError);
}

TEST(TargetSpec, ShippedTargetIsFarFromPretrainMeans) {
    // Frozen from tests/oracles/oracle_values.py: 4.2426406871192848 under the
    // pretrain covariance, 6.5292862509901051 under the target covariance.
    const DataConfig c;
    const GmmSpec pre = make_pretrain_spec(c);
    const Vec2 base = target_component(make_target_spec(c), c.base_attribute).mean;
    double d_pre = 1e300;
    double d_tgt = 1e300;
    for (const auto& comp : pre.components()) {
        d_pre = std::min(d_pre, mahalanobis(base, comp.mean, comp.covariance));
        d_tgt = std::min(d_tgt, mahalanobis(base, comp.mean, c.target_covariance));
    }
    EXPECT_NEAR(d_pre, 4.2426406871192848, 1e-12);
    EXPECT_NEAR(d_tgt, 6.5292862509901051, 1e-12);
    EXPECT_GT(d_pre, 2.0);
}

TEST(GmmSpec, RejectsBadWeightsAndCovariances) {
    GmmComponent a{0.5, Vec2(0, 0), Mat2::Identity(), Condition::token(0, 0)};
    GmmComponent b{0.4, Vec2(1, 0), Mat2::Identity(), Condition::token(1, 0)};
    EXPECT_THROW(GmmSpec::create({a, b}), DataError);
    b.weight = 0.5;
    b.covariance << 1.0, 0.0, 0.0, -1.0;
    EXPECT_THROW(GmmSpec::create({a, b}), DataError);
    EXPECT_THROW(GmmSpec::create({}), DataError);
}

TEST(SampleDataset, SingleGaussianMoments) {
    const GmmSpec s = GmmSpec::create({{1.0, Vec2(0, 0), Mat2::Identity(), Condition::token(0, 0)}});
    const LabeledSamples d = sample_dataset(s, 1000, 5);
    Vec2 mean = Vec2::Zero();
    for (const auto& p : d.points) {
        mean += p;
    }
    mean /= 1000.0;
    Mat2 cov = Mat2::Zero();
    for (const auto& p : d.points) {
        cov += (p - mean) * (p - mean).transpose();
    }
    cov /= 999.0;
    EXPECT_LT(mean.norm(), 0.1);
    EXPECT_LT((cov - Mat2::Identity()).norm(), 0.15);
}

TEST(SampleDataset, LargeSampleMeanWithinFourStandardErrors) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    const std::size_t n = 100'000;
    const LabeledSamples d = sample_dataset(s, n, 99);
    Vec2 mean = Vec2::Zero();
    for (const auto& p : d.points) {
        mean += p;
    }
    mean /= static_cast<double>(n);
    // Mixture variance per axis: within-component 1 plus spread of the means.
    Vec2 var = Vec2::Ones();
    for (const auto& c : s.components()) {
        var += c.weight * (c.mean - s.mean()).cwiseProduct(c.mean - s.mean());
    }
    const Vec2 se = (var / static_cast<double>(n)).cwiseSqrt();
    EXPECT_LT(std::abs(mean.x() - s.mean().x()), 4.0 * se.x());
    EXPECT_LT(std::abs(mean.y() - s.mean().y()), 4.0 * se.y());
}

TEST(SampleDataset, FilterRestrictsAndLabels) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    const Condition c = Condition::token(1, 1);
    const LabeledSamples d = sample_dataset(s, 50, 3, c);
    for (const auto& l : d.conditions) {
        EXPECT_EQ(l, c);
    }
    EXPECT_THROW(sample_dataset(s, 10, 3, Condition::token(5, 0)), DataError);
    EXPECT_THROW(sample_dataset(s, 0, 3), DataError);
}

TEST(SampleDataset, SameSeedIsBitIdentical) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    const LabeledSamples a = sample_dataset(s, 500, 42);
    const LabeledSamples b = sample_dataset(s, 500, 42);
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.conditions, b.conditions);
}

TEST(AnalyticEps, IsotropicClosedForm) {
    const GmmSpec s = GmmSpec::create({{1.0, Vec2(0, 0), Mat2::Identity(), Condition::token(0, 0)}});
    const Vec2 e = analytic_eps(s, Vec2(1, 0), 1.0, Condition::null());
    EXPECT_NEAR(e.x(), 0.5, 1e-15);
    EXPECT_NEAR(e.y(), 0.0, 1e-15);
}

TEST(AnalyticEps, VanishesAtIsolatedMode) {
    const GmmSpec s = GmmSpec::create({{0.5, Vec2(0, 0), Mat2::Identity(), Condition::token(0, 0)},
                                       {0.5, Vec2(50, 50), Mat2::Identity(), Condition::token(1, 0)}});
    const Vec2 e = analytic_eps(s, Vec2(50, 50), 1e-3, Condition::null());
    EXPECT_LT(e.norm(), 1e-6);
}

TEST(AnalyticEps, MatchesFiniteDifferenceOfExactDensity) {
    Mat2 c2;
    c2 << 0.6, 0.2, 0.2, 0.4;
    const std::vector<GmmComponent> comps{{0.3, Vec2(-1, 0.5), Mat2::Identity(), Condition::token(0, 0)},
                                          {0.7, Vec2(1.5, -0.5), c2, Condition::token(1, 0)}};
    const GmmSpec s = GmmSpec::create(comps);
    const double sigma = 0.7;
    const double h = 1e-5;
    for (const Vec2& x : {Vec2(0.2, 0.1), Vec2(-2.0, 1.0), Vec2(1.0, -1.3), Vec2(3.0, 2.0)}) {
        const Vec2 e = analytic_eps(s, x, sigma, Condition::null());
        Vec2 fd;
        for (int k = 0; k < 2; ++k) {
            Vec2 up = x;
            Vec2 dn = x;
            up[k] += h;
            dn[k] -= h;
            fd[k] = -sigma * (reference_log_density(comps, up, sigma) - reference_log_density(comps, dn, sigma)) /
                    (2 * h);
        }
        EXPECT_LT((e - fd).norm() / e.norm(), 1e-5) << x.transpose();
    }
}

TEST(AnalyticEps, FiniteDifferenceAtHundredRandomPoints) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    std::vector<GmmComponent> comps = s.components();
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double u = (i * 0.6180339887498949) - std::floor(i * 0.6180339887498949);
        const double v = (i * 0.7548776662466927) - std::floor(i * 0.7548776662466927);
        const Vec2 x(-6.0 + 12.0 * u, -3.0 + 10.0 * v);
        const double sigma = 0.2 + 3.0 * std::fmod(i * 0.5698402909980532, 1.0);
        const Vec2 e = analytic_eps(s, x, sigma, Condition::null());
        Vec2 fd;
        for (int k = 0; k < 2; ++k) {
            Vec2 up = x;
            Vec2 dn = x;
            up[k] += h;
            dn[k] -= h;
            fd[k] = -sigma * (reference_log_density(comps, up, sigma) - reference_log_density(comps, dn, sigma)) /
                    (2 * h);
        }
        worst = std::max(worst, (e - fd).norm() / std::max(e.norm(), 1e-3));
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(AnalyticEps, NullIsPosteriorWeightedConditionals) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    for (const Vec2& x : {Vec2(0.3, 1.0), Vec2(-2.0, 3.5), Vec2(4.0, -1.0)}) {
        const double sigma = 0.9;
        double total = 0.0;
        Vec2 mix = Vec2::Zero();
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a < 2; ++a) {
                const Condition cond = Condition::token(c, a);
                const double w = 0.25 * std::exp(noisy_log_density(s, x, sigma, cond));
                mix += w * analytic_eps(s, x, sigma, cond);
                total += w;
            }
        }
        mix /= total;
        EXPECT_LT((analytic_eps(s, x, sigma, Condition::null()) - mix).norm(), 1e-10);
    }
}

TEST(AnalyticEps, Errors) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    EXPECT_THROW(analytic_eps(s, Vec2(0, 0), 0.0, Condition::null()), DataError);
    EXPECT_THROW(analytic_eps(s, Vec2(0, 0), 1.0, Condition::token(9, 0)), DataError);
}

TEST(AnalyticEps, FiniteFarFromData) {
    const GmmSpec s = make_pretrain_spec(DataConfig{});
    const Vec2 e = analytic_eps(s, Vec2(1e6, -1e6), 0.01, Condition::null());
    EXPECT_TRUE(e.allFinite());
}

}  // namespace
}  // namespace pglab

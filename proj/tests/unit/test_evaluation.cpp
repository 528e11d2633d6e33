// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace pglab {
namespace {

struct World {
    DataConfig data;
    GmmSpec pretrain = make_pretrain_spec(data);
    GmmSpec target = make_target_spec(data);
};

TEST(Evaluate, AttributeFidelityNearOneOnRequestedComponent) {
    // Bayes error between the two target components is 6.18e-05
    // (tests/oracles/oracle_values.py), so 0.95 leaves a wide margin.
    const World w;
    const auto& comp = target_component(w.target, 1);
    const auto pts = sample_gaussian(comp.mean, comp.covariance, 2000, 4);
    const EvalReport r = evaluate(pts, Condition::token(2, 1), w.target, w.pretrain, 5);
    EXPECT_GE(r.attribute_fidelity, 0.95);
    EXPECT_GE(r.subject_rate, 0.95);
    EXPECT_EQ(r.n, 2000u);
}

TEST(Evaluate, AttributeFidelityNearZeroOnOtherAttribute) {
    const World w;
    const auto& comp = target_component(w.target, 0);
    const auto pts = sample_gaussian(comp.mean, comp.covariance, 2000, 4);
    const EvalReport r = evaluate(pts, Condition::token(2, 1), w.target, w.pretrain, 5);
    EXPECT_LE(r.attribute_fidelity, 0.05);
}

TEST(Evaluate, SubjectFidelityMatchesExpectedLogLikelihood) {
    // E[log N(x; mu, S)] for x ~ N(mu, S) = -1.6609378727185471 for the shipped
    // target covariance (tests/oracles/oracle_values.py).
    const World w;
    const auto& comp = target_component(w.target, 1);
    const std::size_t n = 5000;
    const auto pts = sample_gaussian(comp.mean, comp.covariance, n, 6);
    const EvalReport r = evaluate(pts, Condition::token(2, 1), w.target, w.pretrain, 7);
    double sq = 0.0;
    for (const auto& p : pts) {
        const double l = gaussian_log_pdf(p, comp.mean, comp.covariance) - r.subject_fidelity;
        sq += l * l;
    }
    const double se = std::sqrt(sq / (n - 1) / n);
    EXPECT_LT(std::abs(r.subject_fidelity - (-1.6609378727185471)), 3.0 * se);
}

TEST(Evaluate, PretrainSamplesScoreLow) {
    const World w;
    const auto pts = sample_dataset(w.pretrain, 1000, 3).points;
    const EvalReport r = evaluate(pts, Condition::token(2, 1), w.target, w.pretrain, 5);
    EXPECT_LT(r.subject_rate, 0.05);
    EXPECT_LT(r.subject_fidelity, -10.0);
}

TEST(Evaluate, Errors) {
    const World w;
    const std::vector<Vec2> none;
    EXPECT_THROW(evaluate(none, Condition::token(2, 1), w.target, w.pretrain, 1), std::invalid_argument);
    const std::vector<Vec2> one{Vec2(0, 0)};
    EXPECT_THROW(evaluate(one, Condition::null(), w.target, w.pretrain, 1), std::invalid_argument);
}

TEST(EnergyDistance, WorkedExamples) {
    const std::vector<Vec2> a{Vec2(0, 0)};
    const std::vector<Vec2> b{Vec2(3, 4)};
    EXPECT_DOUBLE_EQ(energy_distance(a, b), 10.0);
    const std::vector<Vec2> pair{Vec2(0, 0), Vec2(2, 0)};
    const std::vector<Vec2> mid{Vec2(1, 0)};
    // 2 * 1 - (0 + 2 + 2 + 0) / 4 - 0 = 1
    EXPECT_DOUBLE_EQ(energy_distance(pair, mid), 1.0);
}

TEST(EnergyDistance, ZeroOnIdenticalAndSymmetric) {
    const auto a = sample_gaussian(Vec2(0, 0), Mat2::Identity(), 300, 1);
    const auto b = sample_gaussian(Vec2(1, 0), Mat2::Identity(), 200, 2);
    EXPECT_NEAR(energy_distance(a, a), 0.0, 1e-12);
    EXPECT_NEAR(energy_distance(a, b), energy_distance(b, a), 1e-12);
    EXPECT_GT(energy_distance(a, b), 0.0);
}

TEST(EnergyDistance, MatchesNaiveSum) {
    const auto a = sample_gaussian(Vec2(0, 0), Mat2::Identity(), 37, 1);
    const auto b = sample_gaussian(Vec2(0.5, 1), Mat2::Identity(), 23, 2);
    const auto mean_dist = [](const std::vector<Vec2>& u, const std::vector<Vec2>& v) {
        double s = 0.0;
        for (const auto& p : u) {
            for (const auto& q : v) {
                s += (p - q).norm();
            }
        }
        return s / (static_cast<double>(u.size()) * static_cast<double>(v.size()));
    };
    const double naive = 2 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b);
    EXPECT_NEAR(energy_distance(a, b), naive, 1e-12);
}

TEST(PermutationTest, PowerAgainstShift) {
    int rejected = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = sample_gaussian(Vec2(0, 0), Mat2::Identity(), 100, 100 + s);
        const auto b = sample_gaussian(Vec2(1, 0), Mat2::Identity(), 100, 200 + s);
        rejected += energy_permutation_test(a, b, 99, s).p_value <= 0.05 ? 1 : 0;
    }
    EXPECT_GE(rejected, 18);
}

TEST(PermutationTest, CalibratedUnderNull) {
    int kept = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = sample_gaussian(Vec2(0, 0), Mat2::Identity(), 100, 300 + s);
        const auto b = sample_gaussian(Vec2(0, 0), Mat2::Identity(), 100, 400 + s);
        kept += energy_permutation_test(a, b, 99, s).p_value > 0.05 ? 1 : 0;
    }
    EXPECT_GE(kept, 16);
}

TEST(PermutationTest, EarlyStopDecidesLevel) {
    const auto a = sample_gaussian(Vec2(0, 0), Mat2::Identity(), 80, 1);
    const auto b = sample_gaussian(Vec2(0, 0), Mat2::Identity(), 80, 2);
    const PermutationTest full = energy_permutation_test(a, b, 99, 5);
    const PermutationTest early = energy_permutation_test(a, b, 99, 5, 5);
    EXPECT_EQ(full.statistic, early.statistic);
    EXPECT_LE(early.p_value, full.p_value);
    EXPECT_LE(early.evaluated, 99);
    EXPECT_EQ(full.p_value > 0.05, early.p_value > 0.05);
}

TEST(Spearman, FrozenValues) {
    // scipy.stats.spearmanr, tests/oracles/oracle_values.py.
    const std::vector<double> x{1.0, 2.0, 2.0, 3.0, 5.0, 4.0};
    const std::vector<double> y{2.0, 1.0, 4.0, 4.0, 6.0, 6.0};
    EXPECT_NEAR(spearman(x, y), 0.8508410434878082, 1e-14);
    const std::vector<double> u{1, 2, 3, 4};
    const std::vector<double> v{8, 6, 4, 1};
    EXPECT_NEAR(spearman(u, v), -1.0, 1e-15);
    const std::vector<double> flat{2, 2, 2, 2};
    EXPECT_EQ(spearman(u, flat), 0.0);
    const std::vector<double> shorter{1, 2};
    EXPECT_THROW(spearman(u, shorter), std::invalid_argument);
}

TEST(Sweeps, GridOrderAndSharedNoise) {
    Architecture arch;
    arch.hidden = {8};
    const ModelPair pair(init_params(arch, 1), init_params(arch, 2));
    const World w;
    const EvalInputs in{w.pretrain, w.target, Condition::token(2, 1), 64, make_schedule(5, 10.0, 0.01, 7.0),
                        Solver::euler, 11, 12};
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const SweepTable t = sweep_omega(pair, 3.0, grid, in);
    EXPECT_EQ(t.swept, "omega");
    EXPECT_EQ(t.values(), grid);
    const EvalReport cfg = run_config(pair, {Method::cfg, 3.0, 1.0}, in);
    EXPECT_EQ(t.rows[2].report.subject_fidelity, cfg.subject_fidelity);
    EXPECT_EQ(t.rows[2].report.energy_distance, cfg.energy_distance);
    const std::vector<double> lambdas{1.0, 2.0};
    const SweepTable l = sweep_lambda(pair, Method::ag, 0.0, lambdas, in);
    EXPECT_EQ(l.swept, "lambda");
    EXPECT_EQ(l.values(), lambdas);
}

TEST(Sweeps, BestOmegaPrefersLargerOnTies) {
    SweepTable t;
    t.swept = "omega";
    for (double v : {0.0, 0.1, 0.2, 0.3}) {
        SweepRow r;
        r.value = v;
        r.report.subject_fidelity = v == 0.1 || v == 0.2 ? -1.0 : -2.0;
        t.rows.push_back(r);
    }
    EXPECT_EQ(select_best_omega(t), 0.2);
}

TEST(Sweeps, DefaultOmegaGridIsExact) {
    const auto g = default_omega_grid();
    ASSERT_EQ(g.size(), 11u);
    EXPECT_EQ(g[3], 0.3);
    EXPECT_EQ(g[7], 0.7);
    EXPECT_EQ(g.back(), 1.0);
}

}  // namespace
}  // namespace pglab

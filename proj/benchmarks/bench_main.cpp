// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/evaluation.hpp"
#include "pglab/invariants.hpp"
#include "pglab/training.hpp"

#include <benchmark/benchmark.h>

namespace pglab {
namespace {

const ModelPair& pair() {
    static const ModelPair p(init_params(Architecture{}, 1), init_params(Architecture{}, 2));
    return p;
}

void BM_Forward(benchmark::State& state) {
    const auto& theta = pair().finetuned();
    const Vec2 x(0.3, -1.2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(theta, x, 0.7, Condition::token(2, 1)));
    }
}
BENCHMARK(BM_Forward);

void BM_GuidedEps(benchmark::State& state) {
    const auto method = static_cast<Method>(state.range(0));
    const EpsFn fn = make_guided_eps_fn(pair(), {method, 7.5, method == Method::cfg ? 1.0 : 0.5});
    const Vec2 x(0.3, -1.2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fn(x, 0.7, Condition::token(2, 1)));
    }
    state.SetLabel(to_string(method));
}
BENCHMARK(BM_GuidedEps)->Arg(static_cast<int>(Method::cfg))->Arg(static_cast<int>(Method::ag))->Arg(
    static_cast<int>(Method::pg));

void BM_TrainStep(benchmark::State& state) {
    const ParamVector theta = init_params(Architecture{}, 3);
    std::vector<double> p = theta.to_vector();
    AdamState adam = AdamState::fresh(p.size());
    std::vector<TrainingExample> batch;
    for (const auto& probe : make_probes(theta.arch(), static_cast<std::size_t>(state.range(0)), 4)) {
        batch.push_back({probe.x, probe.cond, probe.sigma, Vec2(0.5, -0.5)});
    }
    for (auto _ : state) {
        const LossAndGrad lg = loss_and_grad(theta.arch(), p, batch);
        adam_step(adam, p, lg.grad, 1e-3);
    }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128);

void BM_EnergyDistance(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = sample_gaussian(Vec2(0, 0), Mat2::Identity(), n, 1);
    const auto b = sample_gaussian(Vec2(0.5, 0), Mat2::Identity(), n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(energy_distance(a, b));
    }
}
BENCHMARK(BM_EnergyDistance)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pglab

BENCHMARK_MAIN();

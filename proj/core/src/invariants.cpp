// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/invariants.hpp"

#include "pglab/evaluation.hpp"
#include "pglab/rng.hpp"
#include "pglab/sampler.hpp"
#include "pglab/training.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace pglab {

namespace {

double max_abs(const Vec2& v) {
    return v.cwiseAbs().maxCoeff();
}

const char* op_text(Compare op) {
    switch (op) {
        case Compare::less:
            return "<";
        case Compare::less_equal:
            return "<=";
        case Compare::greater:
            return ">";
        case Compare::equal:
            return "==";
    }
    return "?";
}

CheckResult check(std::string name, double value, Compare op, double threshold) {
    bool pass = false;
    switch (op) {
        case Compare::less:
            pass = value < threshold;
            break;
        case Compare::less_equal:
            pass = value <= threshold;
            break;
        case Compare::greater:
            pass = value > threshold;
            break;
        case Compare::equal:
            pass = value == threshold;
            break;
    }
    return {std::move(name), value, op, threshold, pass};
}

ModelPair random_pair(const Architecture& arch, std::uint64_t seed) {
    const RandomStream rs(seed);
    return ModelPair(init_params(arch, rs.split("theta").key()), init_params(arch, rs.split("theta_prime").key()));
}

}  // namespace

bool VerifyReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string VerifyReport::to_csv() const {
    std::string out = "check,value,op,threshold,pass\n";
    for (const auto& c : checks) {
        out += fmt::format("{},{:.17g},{},{:.17g},{}\n", c.name, c.value, op_text(c.op), c.threshold,
                           c.pass ? "true" : "false");
    }
    return out;
}

std::vector<Probe> make_probes(const Architecture& arch, std::size_t n, std::uint64_t seed) {
    const RandomStream root(seed);
    std::vector<Probe> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rs = root.split(i);
        Probe p;
        const double a = rs.uniform();
        const double b = rs.uniform();
        p.x = Vec2(-6.0 + 12.0 * a, -6.0 + 12.0 * b);
        p.sigma = std::exp(std::log(0.01) + rs.uniform() * (std::log(10.0) - std::log(0.01)));
        const int c = static_cast<int>(rs.below(static_cast<std::uint64_t>(arch.concept_slots)));
        const int at = static_cast<int>(rs.below(static_cast<std::uint64_t>(arch.attributes)));
        p.cond = Condition::token(c, at);
        out.push_back(p);
    }
    return out;
}

double omega_one_gap(const ModelPair& pair, double lambda, std::span<const Probe> probes) {
    double worst = 0.0;
    for (const auto& p : probes) {
        const Vec2 pg = guided_eps(pair, {Method::pg, lambda, 1.0}, p.x, p.sigma, p.cond);
        const Vec2 cfg = guided_eps(pair, {Method::cfg, lambda, 1.0}, p.x, p.sigma, p.cond);
        worst = std::max(worst, max_abs(pg - cfg));
    }
    return worst;
}

double lambda_one_gap(const ModelPair& pair, double omega, std::span<const Probe> probes) {
    double worst = 0.0;
    for (const auto& p : probes) {
        const Vec2 ref = forward(pair.finetuned(), p.x, p.sigma, p.cond);
        for (Method m : {Method::cfg, Method::ag, Method::pg}) {
            worst = std::max(worst, max_abs(guided_eps(pair, {m, 1.0, omega}, p.x, p.sigma, p.cond) - ref));
        }
    }
    return worst;
}

double output_interpolation_gap(const ModelPair& pair, double lambda, double omega, std::span<const Probe> probes) {
    double worst = 0.0;
    for (const auto& p : probes) {
        const Vec2 pgw = guided_eps(pair, {Method::pg, lambda, omega}, p.x, p.sigma, p.cond);
        const Vec2 cfg = guided_eps(pair, {Method::cfg, lambda, 1.0}, p.x, p.sigma, p.cond);
        const Vec2 pg0 = guided_eps(pair, {Method::pg, lambda, 0.0}, p.x, p.sigma, p.cond);
        worst = std::max(worst, max_abs(pgw - (omega * cfg + (1.0 - omega) * pg0)));
    }
    return worst;
}

double gradient_error(const Architecture& arch, int draws, int batch, double h, double floor, std::uint64_t seed) {
    const RandomStream root(seed);
    double worst = 0.0;
    for (int d = 0; d < draws; ++d) {
        RandomStream rs = root.split(static_cast<std::uint64_t>(d));
        std::vector<double> theta = init_params(arch, rs.split("init").key()).to_vector();
        // Fresh params have zero biases; perturb everything so every path is exercised.
        for (double& v : theta) {
            v += 0.1 * rs.normal();
        }
        const auto probes = make_probes(arch, static_cast<std::size_t>(batch), rs.split("probes").key());
        std::vector<TrainingExample> ex;
        for (const auto& p : probes) {
            TrainingExample e;
            e.x = p.x;
            e.sigma = p.sigma;
            e.cond = rs.uniform() < 0.25 ? Condition::null() : p.cond;
            const double n0 = rs.normal();
            const double n1 = rs.normal();
            e.noise = Vec2(n0, n1);
            ex.push_back(e);
        }
        const LossAndGrad lg = loss_and_grad(arch, theta, ex);
        const auto loss_at = [&] { return batch_loss(ParamVector(arch, theta), ex); };
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double keep = theta[i];
            theta[i] = keep + h;
            const double up = loss_at();
            theta[i] = keep - h;
            const double down = loss_at();
            theta[i] = keep;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(lg.grad[i]), std::abs(fd), floor});
            worst = std::max(worst, std::abs(lg.grad[i] - fd) / denom);
        }
    }
    return worst;
}

VerifyReport run_invariants(const ExperimentConfig& config, const ModelPair* trained, const LabeledSamples* target) {
    VerifyReport rep;
    const std::uint64_t seed = config.stream("verify");
    const RandomStream rs(seed);
    const Architecture& arch = config.model;
    const ModelPair pair = random_pair(arch, rs.split("pair").key());
    const auto probes = make_probes(arch, 200, rs.split("probes").key());
    const double lambda = config.guidance.lambda;

    rep.checks.push_back(check("omega_one_equals_cfg", omega_one_gap(pair, lambda, probes), Compare::equal, 0.0));
    rep.checks.push_back(check("lambda_one_equals_conditional", lambda_one_gap(pair, 0.5, probes),
                               Compare::less_equal, 1e-15));

    Architecture linear = arch;
    linear.hidden.clear();
    linear.embedding_width = 0;
    const ModelPair lin = random_pair(linear, rs.split("linear").key());
    rep.checks.push_back(check("linear_output_interpolation", output_interpolation_gap(lin, lambda, 0.3, probes),
                               Compare::less_equal, 1e-12));
    if (!arch.hidden.empty()) {
        rep.checks.push_back(check("nonlinear_output_interpolation",
                                   output_interpolation_gap(pair, lambda, 0.3, probes), Compare::greater, 1e-6));
    }

    Architecture small = arch;
    small.hidden = {8, 8};
    rep.checks.push_back(check("gradient_finite_difference",
                               gradient_error(small, 3, 8, 1e-5, 1e-4, rs.split("grad").key()), Compare::less,
                               1e-4));

    {
        ModelPair uncached = pair;
        ModelPair cached(pair.pretrained(), pair.finetuned());
        uncached.set_caching(false);
        double gap = 0.0;
        for (const auto& p : probes) {
            const GuidanceConfig g{Method::pg, lambda, 0.3};
            gap = std::max(gap, max_abs(guided_eps(cached, g, p.x, p.sigma, p.cond) -
                                        guided_eps(uncached, g, p.x, p.sigma, p.cond)));
        }
        rep.checks.push_back(check("omega_cache_transparent", gap, Compare::equal, 0.0));
    }

    {
        const ParamVector w0 = interpolate(pair.pretrained(), pair.finetuned(), 0.0);
        const ParamVector w1 = interpolate(pair.pretrained(), pair.finetuned(), 1.0);
        const bool exact = w0 == pair.pretrained() && w1 == pair.finetuned();
        rep.checks.push_back(check("interpolation_endpoints_exact", exact ? 0.0 : 1.0, Compare::equal, 0.0));
    }

    {
        // Affinity in lambda: two scales determine a third.
        double gap = 0.0;
        for (const auto& p : probes) {
            for (Method m : {Method::cfg, Method::ag, Method::pg}) {
                const Vec2 a = guided_eps(pair, {m, 1.5, 0.3}, p.x, p.sigma, p.cond);
                const Vec2 b = guided_eps(pair, {m, 3.0, 0.3}, p.x, p.sigma, p.cond);
                const Vec2 c = guided_eps(pair, {m, 7.5, 0.3}, p.x, p.sigma, p.cond);
                const Vec2 pred = a + ((7.5 - 1.5) / (3.0 - 1.5)) * (b - a);
                gap = std::max(gap, max_abs(c - pred) / std::max(1.0, max_abs(c)));
            }
        }
        rep.checks.push_back(check("lambda_affine", gap, Compare::less_equal, 1e-12));
    }

    const GmmSpec pre = make_pretrain_spec(config.data);
    const GmmSpec tgt = make_target_spec(config.data);
    {
        double worst = 0.0;
        constexpr double h = 1e-5;
        for (std::size_t i = 0; i < 100; ++i) {
            const Probe& p = probes[i];
            const double sigma = std::max(p.sigma, 0.2);
            const Vec2 e = analytic_eps(pre, p.x, sigma, Condition::null());
            Vec2 fd;
            for (int k = 0; k < 2; ++k) {
                Vec2 up = p.x;
                Vec2 down = p.x;
                up[k] += h;
                down[k] -= h;
                fd[k] = -sigma * (noisy_log_density(pre, up, sigma, Condition::null()) -
                                  noisy_log_density(pre, down, sigma, Condition::null())) /
                        (2.0 * h);
            }
            worst = std::max(worst, max_abs(e - fd) / std::max(max_abs(e), 1e-3));
        }
        rep.checks.push_back(check("analytic_eps_finite_difference", worst, Compare::less, 1e-5));
    }

    {
        double worst = 0.0;
        for (std::size_t i = 0; i < 50; ++i) {
            const Probe& p = probes[i];
            const Vec2 null = analytic_eps(pre, p.x, p.sigma, Condition::null());
            Vec2 mix = Vec2::Zero();
            double total = 0.0;
            std::vector<std::pair<double, Vec2>> parts;
            for (int c = 0; c < config.data.num_concepts(); ++c) {
                for (int a = 0; a < config.data.num_attributes(); ++a) {
                    const Condition cond = Condition::token(c, a);
                    double mass = 0.0;
                    for (std::size_t k : pre.matching(cond)) {
                        mass += pre.components()[k].weight;
                    }
                    const double w = mass * std::exp(noisy_log_density(pre, p.x, p.sigma, cond));
                    parts.emplace_back(w, analytic_eps(pre, p.x, p.sigma, cond));
                    total += w;
                }
            }
            if (!(total > 1e-280)) {
                continue;
            }
            for (const auto& [w, e] : parts) {
                mix += (w / total) * e;
            }
            worst = std::max(worst, max_abs(null - mix) / std::max(1.0, max_abs(null)));
        }
        rep.checks.push_back(check("null_oracle_bayes_consistent", worst, Compare::less_equal, 1e-10));
    }

    {
        bool ok = true;
        for (int n : {2, 3, 10, 50, 200}) {
            for (double rho : {1.0, 3.0, 7.0}) {
                const auto lv = make_schedule(n, 10.0, 0.01, rho).levels();
                ok = ok && lv.front() == 10.0 && lv.back() == 0.01 &&
                     std::adjacent_find(lv.begin(), lv.end(), std::less_equal<>()) == lv.end();
            }
        }
        rep.checks.push_back(check("schedule_strictly_decreasing", ok ? 0.0 : 1.0, Compare::equal, 0.0));
    }

    const EpsFn fn = make_guided_eps_fn(pair, {Method::pg, lambda, 0.3});
    const SigmaSchedule sched = make_schedule(10, config.sampler.sigma_max, config.sampler.sigma_min,
                                              config.sampler.rho);
    const Condition req = config.requested();
    {
        const SampleRun a = ode_sample(fn, sched, 64, req, rs.split("sample").key());
        const SampleRun b = ode_sample(fn, sched, 64, req, rs.split("sample").key());
        rep.checks.push_back(check("sampler_deterministic", a.samples == b.samples ? 0.0 : 1.0, Compare::equal, 0.0));

        std::vector<Vec2> rev(a.samples.rbegin(), a.samples.rend());
        const EvalReport ea = evaluate(a.samples, req, tgt, pre, rs.split("ref").key());
        const EvalReport eb = evaluate(rev, req, tgt, pre, rs.split("ref").key());
        const double gap = std::max({std::abs(ea.subject_fidelity - eb.subject_fidelity),
                                     std::abs(ea.attribute_fidelity - eb.attribute_fidelity),
                                     std::abs(ea.energy_distance - eb.energy_distance)});
        rep.checks.push_back(check("evaluate_order_invariant", gap, Compare::less_equal, 1e-12));
    }

    if (trained != nullptr && target != nullptr) {
        const double lo = config.finetune.sigma_min;
        const double hi = config.finetune.sigma_max;
        const std::uint64_t es = rs.split("target_loss").key();
        const double l0 = target_loss(trained->pretrained(), *target, lo, hi, 64, es);
        const double l1 = target_loss(trained->finetuned(), *target, lo, hi, 64, es);
        rep.checks.push_back(check("finetune_reduces_target_loss", l1 - l0, Compare::less, 0.0));
        const double lambda1 = lambda_one_gap(*trained, 0.5, probes);
        rep.checks.push_back(check("trained_lambda_one_equals_conditional", lambda1, Compare::less_equal, 1e-15));
        rep.checks.push_back(
            check("trained_omega_one_equals_cfg", omega_one_gap(*trained, lambda, probes), Compare::equal, 0.0));
    }
    return rep;
}

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "pglab/checkpoint.hpp"
#include "pglab/config.hpp"
#include "pglab/invariants.hpp"
#include "pglab/io.hpp"
#include "pglab/pipeline.hpp"
#include "pglab/report.hpp"
#include "pglab/rng.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace fs = std::filesystem;
using namespace pglab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double secs) {
    fmt::print("[{}] {} {}: {} ({:.2f} s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail, secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

std::set<int> selected;

void run(int id, const std::string& name, const std::function<Outcome()>& body) {
    if (!selected.empty() && !selected.contains(id)) {
        return;
    }
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, fmt::format("threw: {}", e.what())};
    }
    report(id, name, o, seconds_since(t0));
}

// Shared state: the shipped default experiment, run once.
struct Shipped {
    ExperimentConfig config;
    fs::path root;
    std::optional<ModelPair> pair;
    double pipeline_seconds = 0.0;

    ModelPair& trained() {
        if (!pair) {
            const auto t0 = Clock::now();
            run_pipeline_all();
            pipeline_seconds = seconds_since(t0);
            pair = Pipeline(config, root).model_pair();
        }
        return *pair;
    }

    void run_pipeline_all() { Pipeline(config, root).run_all(); }
};

Outcome omega_one(Shipped& s) {
    static_cast<void>(s.trained());
    const auto probes = make_probes(s.config.model, 1000, 101);
    const auto t0 = Clock::now();
    const double gap = omega_one_gap(s.trained(), s.config.guidance.lambda, probes);
    const double secs = seconds_since(t0);
    return {gap == 0.0 && secs < 1.0, fmt::format("max |PG(omega=1) - CFG| = {:g} over 1000 probes in {:.3f} s", gap, secs)};
}

Outcome lambda_one(Shipped& s) {
    const auto probes = make_probes(s.config.model, 1000, 102);
    const double gap = lambda_one_gap(s.trained(), 0.5, probes);
    return {gap <= 1e-15, fmt::format("max |guided(lambda=1) - conditional| = {:g} over 3 methods x 1000 probes", gap)};
}

Outcome linear_identity(Shipped& s) {
    Architecture linear = s.config.model;
    linear.hidden.clear();
    const RandomStream rs(103);
    const ModelPair lp(init_params(linear, rs.split("a").key()), init_params(linear, rs.split("b").key()));
    const auto lprobes = make_probes(linear, 1000, rs.split("p").key());
    double lin = 0.0;
    for (double omega : {0.25, 0.5, 0.75}) {
        lin = std::max(lin, output_interpolation_gap(lp, s.config.guidance.lambda, omega, lprobes));
    }
    const auto probes = make_probes(s.config.model, 1000, rs.split("q").key());
    const double nonlin = output_interpolation_gap(s.trained(), s.config.guidance.lambda, 0.5, probes);
    return {lin <= 1e-12 && nonlin > 1e-6,
            fmt::format("linear gap {:.3g} (<= 1e-12), default nonlinear gap {:.3g} (> 1e-6)", lin, nonlin)};
}

Outcome gradient_oracle(Shipped& s) {
    const auto t0 = Clock::now();
    const double err = gradient_error(s.config.model, 20, 4, 1e-5, 1e-4, 104);
    const double secs = seconds_since(t0);
    return {err < 1e-4 && secs < 10.0,
            fmt::format("max relative error {:.3g} over 20 draws ({} params each) in {:.2f} s", err,
                        s.config.model.parameter_count(), secs)};
}

// Frozen calibration thresholds on the per-coordinate MSE; the 0.5 entry is fixed
// by the acceptance target, the others sit above measured values of the
// default pretrained model.
const std::map<double, double> kScoreThresholds{{0.2, 0.08}, {0.5, 0.05}, {1.0, 0.08}, {2.0, 0.02}};

Outcome score_fit(Shipped& s) {
    const ModelPair& pair = s.trained();
    const GmmSpec pre = make_pretrain_spec(s.config.data);
    std::vector<Condition> conds{Condition::null()};
    for (int c = 0; c < s.config.data.num_concepts(); ++c) {
        for (int a = 0; a < s.config.data.num_attributes(); ++a) {
            conds.push_back(Condition::token(c, a));
        }
    }
    bool ok = true;
    std::string detail;
    for (const auto& [sigma, limit] : kScoreThresholds) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& cond : conds) {
            for (int i = 0; i <= 40; ++i) {
                for (int j = 0; j <= 40; ++j) {
                    const Vec2 x(-6.0 + 12.0 * i / 40.0, -3.0 + 10.0 * j / 40.0);
                    const Vec2 d = forward(pair.pretrained(), x, sigma, cond) - analytic_eps(pre, x, sigma, cond);
                    sum += d.squaredNorm();
                    count += 2;
                }
            }
        }
        const double mse = sum / static_cast<double>(count);
        ok = ok && mse < limit;
        detail += fmt::format("{}sigma={} mse={:.4f}<{}", detail.empty() ? "" : ", ", sigma, mse, limit);
    }
    return {ok, detail};
}

Outcome sampler_correctness(Shipped& s) {
    // Centered unit Gaussian. The start x_T ~ N(0, sigma_max^2 I) leaves an offset
    // of mean * sqrt(1 / (1 + sigma_max^2)) for off-center data at any step count.
    const Condition cond = Condition::token(0, 0);
    const GmmSpec single = GmmSpec::create({{1.0, Vec2::Zero(), Mat2::Identity(), cond}});
    const EpsFn eps = [&](const Vec2& x, double sigma, const Condition& c) {
        // lambda = 1: the guided estimate is the conditional oracle itself.
        return analytic_eps(single, x, sigma, c);
    };
    const SigmaSchedule schedule =
        make_schedule(200, s.config.sampler.sigma_max, s.config.sampler.sigma_min, s.config.sampler.rho);
    const auto t0 = Clock::now();
    int passed = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RandomStream rs(1000 + seed);
        const SampleRun run = ode_sample(eps, schedule, 5000, cond, rs.split("noise").key());
        const auto direct = sample_gaussian(Vec2::Zero(), Mat2::Identity(), 5000, rs.split("direct").key());
        // Early stop at 5 exceedances decides the 5% level exactly with 99 permutations.
        const PermutationTest t = energy_permutation_test(run.samples, direct, 99, rs.split("perm").key(), 5);
        passed += t.p_value > 0.05 ? 1 : 0;
    }
    const double secs = seconds_since(t0);
    return {passed >= 18 && secs < 60.0, fmt::format("{}/20 seeds not rejected at 5% in {:.1f} s", passed, secs)};
}

// One fine-tune replica per experiment seed, all sharing the shipped pretrained model.
struct Replica {
    ExperimentConfig config;
    LabeledSamples target;
    ParamVector tuned;
};

std::vector<Replica> replicas(Shipped& s) {
    std::vector<Replica> out;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ExperimentConfig c = s.config;
        c.seed = seed;
        c.resolve();
        const Pipeline p(c, s.root / "unused");
        LabeledSamples target = p.target_dataset();
        ParamVector tuned = finetune(s.trained().pretrained(), target, c.finetune).params;
        out.push_back({c, std::move(target), std::move(tuned)});
    }
    return out;
}

Outcome unlearning_degree(Shipped& s, const std::vector<Replica>& reps) {
    int lower = 0;
    int monotone = 0;
    const ParamVector& base = s.trained().pretrained();
    for (const auto& r : reps) {
        std::vector<double> loss;
        for (double omega : s.config.sweeps.omega_grid) {
            loss.push_back(target_loss(interpolate(base, r.tuned, omega), r.target, r.config.finetune.sigma_min,
                                       r.config.finetune.sigma_max, 256, 12345));
        }
        lower += loss.back() < loss.front() ? 1 : 0;
        bool mono = true;
        for (std::size_t i = 1; i < loss.size(); ++i) {
            mono = mono && loss[i] <= loss[i - 1];
        }
        monotone += mono ? 1 : 0;
    }
    return {lower == 10 && monotone >= 9,
            fmt::format("omega=1 below omega=0 in {}/10, nonincreasing over the grid in {}/10", lower, monotone)};
}

std::map<std::string, EvalReport> compare_rows(const fs::path& root, double lambda) {
    const CsvTable t = parse_csv(read_file(root / "compare" / "compare.csv"));
    std::map<std::string, EvalReport> out;
    const auto variants = t.strings("variant");
    const auto lambdas = t.numbers("lambda");
    const auto sf = t.numbers("subject_fidelity");
    const auto af = t.numbers("attribute_fidelity");
    for (std::size_t i = 0; i < variants.size(); ++i) {
        if (lambdas[i] == lambda) {
            EvalReport r;
            r.subject_fidelity = sf[i];
            r.attribute_fidelity = af[i];
            out[variants[i]] = r;
        }
    }
    return out;
}

Outcome directional(Shipped& s, const std::vector<Replica>& reps, Clock::time_point t0) {
    const auto rows = compare_rows(s.root, s.config.guidance.lambda);
    const EvalReport& cfg = rows.at("cfg");
    const EvalReport& pg0 = rows.at("pg_w0");
    const EvalReport& ag = rows.at("ag");
    const bool sf_ok = pg0.subject_fidelity > cfg.subject_fidelity;
    const bool af_ok = cfg.attribute_fidelity >= pg0.attribute_fidelity;
    const bool ag_ok = ag.attribute_fidelity <= cfg.attribute_fidelity;

    int both = 0;
    int sf_sign = 0;
    int af_sign = 0;
    for (const auto& r : reps) {
        const ModelPair pair(s.trained().pretrained(), r.tuned);
        const EvalInputs in = Pipeline(r.config, s.root / "unused").eval_inputs();
        const SweepTable t = sweep_omega(pair, r.config.guidance.lambda, r.config.sweeps.omega_grid, in);
        const auto omega = t.values();
        const bool a = spearman(omega, t.column(&EvalReport::subject_fidelity)) <= 0.0;
        const bool b = spearman(omega, t.column(&EvalReport::attribute_fidelity)) >= 0.0;
        sf_sign += a ? 1 : 0;
        af_sign += b ? 1 : 0;
        both += a && b ? 1 : 0;
    }
    const double secs = seconds_since(t0) + s.pipeline_seconds;
    return {sf_ok && af_ok && ag_ok && both >= 8 && secs < 600.0,
            fmt::format("PG0 sf {:.3f} > CFG sf {:.3f}: {}; CFG af {:.4f} >= PG0 af {:.4f}: {}; AG af {:.4f} <= CFG af: "
                        "{}; Spearman signs hold in {}/10 seeds (subject {}/10, attribute {}/10); "
                        "pipeline plus seeds {:.0f} s",
                        pg0.subject_fidelity, cfg.subject_fidelity, sf_ok, cfg.attribute_fidelity,
                        pg0.attribute_fidelity, af_ok, ag.attribute_fidelity, ag_ok, both, sf_sign, af_sign, secs)};
}

Outcome lambda_direction(Shipped& s) {
    const CsvTable t = parse_csv(read_file(s.root / "sweep-lambda" / "sweep_lambda.csv"));
    const auto methods = t.strings("method");
    const auto value = t.numbers("value");
    const auto af = t.numbers("attribute_fidelity");
    const double lambda = s.config.guidance.lambda;
    bool ok = true;
    std::string detail;
    for (const char* m : {"cfg", "pg"}) {
        double at_default = -1.0;
        double at_one = -1.0;
        for (std::size_t i = 0; i < methods.size(); ++i) {
            if (methods[i] == m && value[i] == lambda) {
                at_default = af[i];
            }
            if (methods[i] == m && value[i] == 1.0) {
                at_one = af[i];
            }
        }
        ok = ok && at_default >= 0.0 && at_one >= 0.0 && at_default > at_one;
        detail += fmt::format("{}{} af(lambda={}) {:.4f} vs af(lambda=1) {:.4f}", detail.empty() ? "" : "; ", m,
                              lambda, at_default, at_one);
    }
    return {ok, detail};
}

Outcome overhead(Shipped& s) {
    const ModelPair& pair = s.trained();
    const EvalInputs in = Pipeline(s.config, s.root).eval_inputs();
    const EpsFn cfg = make_guided_eps_fn(pair, {Method::cfg, s.config.guidance.lambda, 1.0});
    const EpsFn pg = make_guided_eps_fn(pair, {Method::pg, s.config.guidance.lambda, 0.5});
    constexpr std::size_t kChunk = 1000;
    constexpr int kChunks = 10;
    constexpr int kPasses = 5;
    // Each chunk is timed for both methods back to back, alternating which goes
    // first; a chunk's time is its fastest pass, which filters scheduler noise.
    std::vector<double> chunk_cfg(kChunks, 1e300);
    std::vector<double> chunk_pg(kChunks, 1e300);
    const auto time_chunk = [&](const EpsFn& fn, std::uint64_t seed) {
        const auto t0 = Clock::now();
        static_cast<void>(ode_sample(fn, in.schedule, kChunk, in.requested, seed));
        return seconds_since(t0);
    };
    for (int pass = 0; pass < kPasses; ++pass) {
        for (int c = 0; c < kChunks; ++c) {
            const auto seed = static_cast<std::uint64_t>(c);
            const auto i = static_cast<std::size_t>(c);
            if ((pass + c) % 2 == 0) {
                chunk_cfg[i] = std::min(chunk_cfg[i], time_chunk(cfg, seed));
                chunk_pg[i] = std::min(chunk_pg[i], time_chunk(pg, seed));
            } else {
                chunk_pg[i] = std::min(chunk_pg[i], time_chunk(pg, seed));
                chunk_cfg[i] = std::min(chunk_cfg[i], time_chunk(cfg, seed));
            }
        }
    }
    const double best_cfg = std::accumulate(chunk_cfg.begin(), chunk_cfg.end(), 0.0);
    const double best_pg = std::accumulate(chunk_pg.begin(), chunk_pg.end(), 0.0);
    const double n = static_cast<double>(kChunk * kChunks);
    const double ratio = best_pg / best_cfg;
    return {std::abs(ratio - 1.0) <= 0.05,
            fmt::format("per sample CFG {:.2f} us, PG(omega=0.5) {:.2f} us over 10000 samples, ratio {:.4f}",
                        1e6 * best_cfg / n, 1e6 * best_pg / n, ratio)};
}

std::map<std::string, std::string> csv_files(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") {
            out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
        }
    }
    return out;
}

Outcome determinism(Shipped& s, const fs::path& second) {
    s.trained();
    fs::remove_all(second);
    Pipeline(s.config, second).run_all();
    Pipeline(s.config, s.root).verify();
    Pipeline(s.config, second).verify();
    const auto a = csv_files(s.root);
    const auto b = csv_files(second);
    std::vector<std::string> differ;
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        if (it == b.end() || it->second != bytes) {
            differ.push_back(name);
        }
    }
    for (const auto& [name, bytes] : b) {
        if (!a.contains(name)) {
            differ.push_back(name);
        }
    }
    const bool verify_present = a.contains("verify/verify.csv");
    return {differ.empty() && verify_present && a.size() > 5,
            differ.empty() ? fmt::format("{} CSV files byte-identical across two stores, verify.csv included", a.size())
                           : fmt::format("{} files differ, first {}", differ.size(), differ.front())};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pglab acceptance run"};
    std::string store = "acceptance-store";
    std::string config_path = PGLAB_SOURCE_DIR "/configs/default.yaml";
    bool keep = false;
    std::vector<int> only;
    app.add_option("--store", store, "Store directory for the shipped experiment");
    app.add_option("--config", config_path, "Experiment config")->check(CLI::ExistingFile);
    app.add_flag("--keep", keep, "Reuse cached stages from an earlier run");
    app.add_option("--only", only, "Run only these criteria (repeatable)")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    selected.insert(only.begin(), only.end());
    Shipped s;
    s.config = load_config(config_path);
    s.root = fs::path(store) / "main";
    if (!keep) {
        fs::remove_all(store);
    }
    fmt::print("acceptance on {} (config hash {}), store {}\n", config_path, config_hash(s.config), store);

    run(1, "omega=1 reduction", [&] { return omega_one(s); });
    run(2, "lambda=1 reduction", [&] { return lambda_one(s); });
    run(3, "linear-architecture identity", [&] { return linear_identity(s); });
    run(4, "gradient oracle", [&] { return gradient_oracle(s); });
    run(5, "score-oracle fit", [&] { return score_fit(s); });
    run(6, "sampler correctness", [&] { return sampler_correctness(s); });

    const auto t8 = Clock::now();
    std::vector<Replica> reps;
    run(7, "unlearning-degree monotonicity", [&] {
        reps = replicas(s);
        return unlearning_degree(s, reps);
    });
    run(8, "directional reproduction", [&] {
        if (reps.empty()) {
            reps = replicas(s);
        }
        return directional(s, reps, t8);
    });
    run(9, "lambda-sweep direction", [&] { return lambda_direction(s); });
    run(10, "overhead parity", [&] { return overhead(s); });
    run(11, "determinism", [&] { return determinism(s, fs::path(store) / "second"); });

    fmt::print("{} of {} criteria failed\n", failures, selected.empty() ? 11 : selected.size());
    return failures == 0 ? 0 : 1;
}

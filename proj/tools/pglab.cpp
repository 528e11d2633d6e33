// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

// pglab: train, fine-tune, sample and sweep guidance methods on the toy world.

#include "pglab/config.hpp"
#include "pglab/pipeline.hpp"

#include <fmt/format.h>

#include "CLI11.hpp"

#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

struct GuidanceFlags {
    std::optional<std::string> method;
    std::optional<double> lambda;
    std::optional<double> omega;
};

pglab::ExperimentConfig load(const Globals& g) {
    pglab::ExperimentConfig c =
        g.config_path.empty() ? pglab::ExperimentConfig::defaults() : pglab::load_config(g.config_path);
    if (g.seed) {
        c.seed = *g.seed;
    }
    c.resolve();
    c.validate();
    return c;
}

std::filesystem::path store(const Globals& g) {
    return g.out_dir.empty() ? pglab::default_store_root() : std::filesystem::path(g.out_dir);
}

void print_stats(const pglab::PipelineResult& r, const std::filesystem::path& root) {
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) {
            s += (s.empty() ? "" : ", ") + x;
        }
        return s.empty() ? std::string("none") : s;
    };
    fmt::print("store: {}\nconfig hash: {}\nexecuted: {}\ncached: {}\n", root.string(), r.manifest.config_hash,
               join(r.stats.executed), join(r.stats.cached));
}

void add_guidance_flags(CLI::App* cmd, GuidanceFlags& f) {
    cmd->add_option("--method", f.method, "Guidance method: cfg, ag or pg");
    cmd->add_option("--lambda", f.lambda, "Guidance scale (>= 1)");
    cmd->add_option("--omega", f.omega, "Weight interpolation scale in [0, 1]");
}

int run_stages(const Globals& g, std::initializer_list<pglab::Stage> stages, pglab::ExperimentConfig config) {
    pglab::Pipeline p(std::move(config), store(g));
    const std::vector<pglab::Stage> targets(stages);
    const auto r = p.run(targets);
    print_stats(r, p.root());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Personalization guidance laboratory on a 2-D toy world"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Experiment config (YAML); built-in defaults when omitted")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override the experiment seed");
    app.add_option("--out-dir", g.out_dir, "Artifact store root (default $PGLAB_STORE or ./pglab-store)");

    auto* train = app.add_subcommand("train", "Pretrain the conditional denoiser");

    auto* finetune = app.add_subcommand("finetune", "Fine-tune on the novel concept");
    std::optional<std::string> mode;
    std::optional<int> rank;
    finetune->add_option("--mode", mode, "full or adapter");
    finetune->add_option("--rank", rank, "Adapter rank");

    auto* sample = app.add_subcommand("sample", "Sample one guidance configuration");
    GuidanceFlags sample_flags;
    std::size_t sample_n = 0;
    bool trajectories = false;
    add_guidance_flags(sample, sample_flags);
    sample->add_option("-n,--samples", sample_n, "Sample count (default eval.samples)");
    sample->add_flag("--trajectories", trajectories, "Also write every ODE trajectory");

    auto* sweep_omega = app.add_subcommand("sweep-omega", "Sweep the interpolation scale for PG");
    std::optional<double> so_lambda;
    std::optional<std::string> so_grid;
    sweep_omega->add_option("--lambda", so_lambda, "Guidance scale");
    sweep_omega->add_option("--grid", so_grid, "Comma-separated omega values");

    auto* sweep_lambda = app.add_subcommand("sweep-lambda", "Sweep the guidance scale");
    std::vector<std::string> sl_methods;
    std::optional<double> sl_omega;
    std::optional<std::string> sl_grid;
    sweep_lambda->add_option("--method", sl_methods, "Methods to sweep (repeatable)");
    sweep_lambda->add_option("--omega", sl_omega, "Interpolation scale for PG");
    sweep_lambda->add_option("--grid", sl_grid, "Comma-separated lambda values");

    auto* compare = app.add_subcommand("compare", "Compare CFG, AG and PG under shared seeds");
    auto* plot = app.add_subcommand("plot", "Render sweep and comparison charts");
    auto* run = app.add_subcommand("run", "Run every stage");
    auto* verify = app.add_subcommand("verify", "Run the invariant suite");
    auto* show_config = app.add_subcommand("show-config", "Print the resolved config as YAML");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    using pglab::Stage;
    try {
        pglab::ExperimentConfig config = load(g);

        if (*show_config) {
            fmt::print("{}", pglab::to_yaml(config));
            return kOk;
        }
        if (*train) {
            return run_stages(g, {Stage::pretrain}, config);
        }
        if (*finetune) {
            if (mode) {
                config.finetune.mode = pglab::parse_train_mode(*mode);
            }
            if (rank) {
                config.finetune.rank = *rank;
            }
            config.validate();
            return run_stages(g, {Stage::finetune}, config);
        }
        if (*sample) {
            pglab::SampleRequest req;
            req.guidance.method =
                sample_flags.method ? pglab::parse_method(*sample_flags.method) : pglab::Method::pg;
            const bool ag = req.guidance.method == pglab::Method::ag;
            req.guidance.lambda = sample_flags.lambda.value_or(ag ? config.guidance.ag_lambda : config.guidance.lambda);
            req.guidance.omega = sample_flags.omega.value_or(
                req.guidance.method == pglab::Method::cfg ? 1.0 : config.guidance.omega);
            req.n = sample_n;
            req.trajectories = trajectories;
            try {
                req.guidance.validate();
            } catch (const std::invalid_argument& e) {
                throw pglab::ConfigError("guidance", e.what());
            }
            pglab::Pipeline p(config, store(g));
            pglab::PipelineResult r;
            const auto out = p.sample(req, &r);
            print_stats(r, p.root());
            fmt::print("samples: {}\n", out.samples_csv.string());
            if (out.trajectory_csv) {
                fmt::print("trajectories: {}\n", out.trajectory_csv->string());
            }
            fmt::print("scatter: {}\n", out.scatter_svg.string());
            fmt::print("{}: subject_fidelity={:.6f} attribute_fidelity={:.4f} energy_distance={:.6f}\n",
                       req.guidance.describe(), out.report.subject_fidelity, out.report.attribute_fidelity,
                       out.report.energy_distance);
            return kOk;
        }
        if (*sweep_omega) {
            if (so_lambda) {
                config.guidance.lambda = *so_lambda;
            }
            if (so_grid) {
                config.sweeps.omega_grid = pglab::parse_grid(*so_grid);
            }
            config.validate();
            return run_stages(g, {Stage::sweep_omega}, config);
        }
        if (*sweep_lambda) {
            if (!sl_methods.empty()) {
                config.sweeps.lambda_methods.clear();
                for (const auto& m : sl_methods) {
                    config.sweeps.lambda_methods.push_back(pglab::parse_method(m));
                }
            }
            if (sl_omega) {
                config.guidance.omega = *sl_omega;
            }
            if (sl_grid) {
                config.sweeps.lambda_grid = pglab::parse_grid(*sl_grid);
            }
            config.validate();
            return run_stages(g, {Stage::sweep_lambda}, config);
        }
        if (*compare) {
            return run_stages(g, {Stage::compare}, config);
        }
        if (*plot) {
            return run_stages(g, {Stage::report}, config);
        }
        if (*run) {
            return run_stages(g, {Stage::pretrain, Stage::finetune, Stage::sweep_omega, Stage::sweep_lambda,
                                  Stage::compare, Stage::report},
                              config);
        }
        if (*verify) {
            pglab::Pipeline p(config, store(g));
            pglab::PipelineResult r;
            const auto rep = p.verify(&r);
            for (const auto& c : rep.checks) {
                fmt::print("{:<40} {:>12.4e}  {}\n", c.name, c.value, c.pass ? "PASS" : "FAIL");
            }
            const auto problems = pglab::check_manifest(p.root());
            for (const auto& problem : problems) {
                fmt::print("manifest: {}\n", problem);
            }
            fmt::print("wrote {}\n", (p.root() / "verify" / "verify.csv").string());
            return rep.all_pass() && problems.empty() ? kOk : kFailure;
        }
    } catch (const pglab::ConfigError& e) {
        fmt::print(stderr, "{}\n", e.what());
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kFailure;
    }
    return kOk;
}

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/pipeline.hpp"

#include "pglab/checkpoint.hpp"
#include "pglab/hash.hpp"
#include "pglab/io.hpp"
#include "pglab/report.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <map>

namespace pglab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPretrainCkpt = "pretrain/theta.ckpt";
constexpr const char* kPretrainLoss = "pretrain/loss.csv";
constexpr const char* kFinetuneCkpt = "finetune/theta_prime.ckpt";
constexpr const char* kFinetuneLoss = "finetune/loss.csv";
constexpr const char* kTargetCsv = "finetune/target.csv";
constexpr const char* kSweepOmegaCsv = "sweep-omega/sweep_omega.csv";
constexpr const char* kSweepLambdaCsv = "sweep-lambda/sweep_lambda.csv";
constexpr const char* kCompareCsv = "compare/compare.csv";
constexpr const char* kCompareSvg = "compare/compare.svg";

std::string now_utc() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

std::string num(double v) {
    return fmt::format("{:.17g}", v);
}

std::string grid_text(std::span<const double> grid) {
    std::string s = "[";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s += (i ? ", " : "") + num(grid[i]);
    }
    return s + "]";
}

std::string methods_text(std::span<const Method> methods) {
    std::string s = "[";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        s += (i ? ", " : "") + to_string(methods[i]);
    }
    return s + "]";
}

std::string meta_of(const fs::path& ckpt) {
    return meta_path(ckpt).generic_string();
}

int stage_rank(const std::string& name) {
    const auto stages = all_stages();
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (to_string(stages[i]) == name) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(stages.size());
}

json to_json_hash(const FileHash& f) {
    return json{{"path", f.path}, {"sha256", f.sha256}};
}

FileHash from_json_hash(const json& j) {
    return {j.at("path").get<std::string>(), j.at("sha256").get<std::string>()};
}

std::string target_csv(const LabeledSamples& s) {
    std::string out = "index,x0,x1,concept,attribute\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += fmt::format("{},{},{},{},{}\n", i, num(s.points[i].x()), num(s.points[i].y()),
                           s.conditions[i].concept_id(), s.conditions[i].attribute());
    }
    return out;
}

std::string sample_tag(const SampleRequest& r, std::size_t n) {
    return fmt::format("{}_l{}_w{}_n{}{}", to_string(r.guidance.method), r.guidance.lambda, r.guidance.omega, n,
                       r.trajectories ? "_traj" : "");
}

std::vector<Vec2> points_of(const CsvTable& t) {
    const auto xs = t.numbers("x0");
    const auto ys = t.numbers("x1");
    std::vector<Vec2> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out.emplace_back(xs[i], ys[i]);
    }
    return out;
}

}  // namespace

fs::path default_store_root() {
    if (const char* env = std::getenv("PGLAB_STORE"); env != nullptr && *env != '\0') {
        return fs::path(env);
    }
    return fs::path("pglab-store");
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::pretrain:
            return "pretrain";
        case Stage::finetune:
            return "finetune";
        case Stage::sweep_omega:
            return "sweep-omega";
        case Stage::sweep_lambda:
            return "sweep-lambda";
        case Stage::compare:
            return "compare";
        case Stage::report:
            return "report";
    }
    return "?";
}

std::vector<Stage> all_stages() {
    return {Stage::pretrain, Stage::finetune, Stage::sweep_omega, Stage::sweep_lambda, Stage::compare, Stage::report};
}

StageError::StageError(std::string stage, const std::string& config_yaml, const std::string& what)
    : std::runtime_error(fmt::format("stage '{}' failed: {}\nconfig:\n{}", stage, what, config_yaml)),
      stage_(std::move(stage)) {}

const StageRecord* ExperimentManifest::find(const std::string& stage) const {
    for (const auto& s : stages) {
        if (s.name == stage) {
            return &s;
        }
    }
    return nullptr;
}

std::string ExperimentManifest::to_json() const {
    json j;
    j["tool_version"] = tool_version;
    j["config_hash"] = config_hash;
    j["created"] = created;
    j["config_file"] = to_json_hash(config_file);
    j["stages"] = json::array();
    for (const auto& s : stages) {
        json st{{"name", s.name}, {"key", s.key}, {"started", s.started}, {"finished", s.finished}};
        st["inputs"] = json::array();
        for (const auto& f : s.inputs) {
            st["inputs"].push_back(to_json_hash(f));
        }
        st["outputs"] = json::array();
        for (const auto& f : s.outputs) {
            st["outputs"].push_back(to_json_hash(f));
        }
        j["stages"].push_back(std::move(st));
    }
    return j.dump(2) + "\n";
}

ExperimentManifest ExperimentManifest::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        ExperimentManifest m;
        m.tool_version = j.at("tool_version").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.created = j.at("created").get<std::string>();
        m.config_file = from_json_hash(j.at("config_file"));
        for (const auto& st : j.at("stages")) {
            StageRecord r;
            r.name = st.at("name").get<std::string>();
            r.key = st.at("key").get<std::string>();
            r.started = st.at("started").get<std::string>();
            r.finished = st.at("finished").get<std::string>();
            for (const auto& f : st.at("inputs")) {
                r.inputs.push_back(from_json_hash(f));
            }
            for (const auto& f : st.at("outputs")) {
                r.outputs.push_back(from_json_hash(f));
            }
            m.stages.push_back(std::move(r));
        }
        return m;
    } catch (const json::exception& e) {
        throw std::runtime_error(fmt::format("malformed manifest: {}", e.what()));
    }
}

struct Pipeline::Runner {
    Pipeline& p;
    std::optional<ExperimentManifest> previous;
    std::map<std::string, StageRecord> records;
    RunStats stats;

    explicit Runner(Pipeline& pipeline) : p(pipeline) {
        const fs::path mp = p.manifest_path();
        if (fs::exists(mp)) {
            try {
                previous = ExperimentManifest::from_json(read_file(mp));
            } catch (const std::exception&) {
                previous.reset();
            }
        }
    }

    [[nodiscard]] fs::path abs(const std::string& rel) const { return p.root_ / rel; }

    FileHash hash_of(const std::string& rel) const { return {rel, sha256_file(abs(rel))}; }

    bool outputs_intact(const StageRecord& r, const std::vector<std::string>& expected) const {
        if (r.outputs.size() != expected.size()) {
            return false;
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            const auto& f = r.outputs[i];
            if (f.path != expected[i] || !fs::exists(abs(f.path))) {
                return false;
            }
            if (sha256_file(abs(f.path)) != f.sha256) {
                return false;
            }
        }
        return true;
    }

    const StageRecord& execute(const std::string& name, const std::vector<std::string>& key_parts,
                               const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                               const std::function<void()>& body, bool force = false) {
        if (auto it = records.find(name); it != records.end()) {
            return it->second;
        }
        StageRecord rec;
        rec.name = name;
        for (const auto& in : inputs) {
            rec.inputs.push_back(hash_of(in));
        }
        Sha256 h;
        h.field(name).field(kToolVersion);
        for (const auto& part : key_parts) {
            h.field(part);
        }
        for (const auto& in : rec.inputs) {
            h.field(in.path).field(in.sha256);
        }
        rec.key = h.hex();

        if (previous && !force) {
            const StageRecord* old = previous->find(name);
            if (old != nullptr && old->key == rec.key && outputs_intact(*old, outputs)) {
                stats.cached.push_back(name);
                return records.emplace(name, *old).first->second;
            }
        }
        rec.started = now_utc();
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, to_yaml(p.config_), e.what());
        }
        rec.finished = now_utc();
        for (const auto& out : outputs) {
            rec.outputs.push_back(hash_of(out));
        }
        stats.executed.push_back(name);
        return records.emplace(name, std::move(rec)).first->second;
    }

    void write_text(const std::string& rel, const std::string& text) const { write_file_atomic(abs(rel), text); }

    const StageRecord& ensure(Stage s);
    const StageRecord& pretrain();
    const StageRecord& finetune();
    const StageRecord& sweep_omega();
    const StageRecord& sweep_lambda();
    const StageRecord& compare();
    const StageRecord& report();

    [[nodiscard]] std::vector<std::string> sweep_parts() const {
        const auto& c = p.config_;
        return {section_yaml(c, "data"), section_yaml(c, "sampler"), section_yaml(c, "guidance"),
                section_yaml(c, "eval"), fmt::format("noise={} eval={}", c.stream("noise"), c.stream("eval"))};
    }

    [[nodiscard]] RunEcho echo() const {
        const auto& c = p.config_;
        return {c.stream("noise"),  c.stream("eval"),  to_string(c.sampler.solver),
                c.sampler.steps,    c.sampler.sigma_max, c.sampler.sigma_min,
                c.sampler.rho,      c.data.target_concept, c.eval.attribute};
    }

    PipelineResult finish() {
        ExperimentManifest m;
        m.tool_version = kToolVersion;
        m.config_hash = config_hash(p.config_);
        m.created = now_utc();
        const std::string cfg_rel = "config.yaml";
        write_text(cfg_rel, to_yaml(p.config_));
        m.config_file = hash_of(cfg_rel);

        std::map<std::string, StageRecord> merged = records;
        if (previous) {
            for (const auto& old : previous->stages) {
                if (merged.count(old.name) != 0) {
                    continue;
                }
                std::vector<std::string> paths;
                for (const auto& f : old.outputs) {
                    paths.push_back(f.path);
                }
                if (outputs_intact(old, paths)) {
                    merged.emplace(old.name, old);
                }
            }
        }
        for (auto& [name, rec] : merged) {
            m.stages.push_back(rec);
        }
        std::stable_sort(m.stages.begin(), m.stages.end(), [](const StageRecord& a, const StageRecord& b) {
            const int ra = stage_rank(a.name);
            const int rb = stage_rank(b.name);
            return ra != rb ? ra < rb : a.name < b.name;
        });
        write_file_atomic(p.manifest_path(), m.to_json());
        return {std::move(m), std::move(stats)};
    }
};

const StageRecord& Pipeline::Runner::ensure(Stage s) {
    switch (s) {
        case Stage::pretrain:
            return pretrain();
        case Stage::finetune:
            return finetune();
        case Stage::sweep_omega:
            return sweep_omega();
        case Stage::sweep_lambda:
            return sweep_lambda();
        case Stage::compare:
            return compare();
        case Stage::report:
            return report();
    }
    throw std::logic_error("unknown stage");
}

const StageRecord& Pipeline::Runner::pretrain() {
    const auto& c = p.config_;
    return execute("pretrain", {section_yaml(c, "data"), section_yaml(c, "model"), section_yaml(c, "pretrain"),
                    fmt::format("seed={}", c.pretrain.seed)},
                   {},
                   {kPretrainCkpt, meta_of(kPretrainCkpt), kPretrainLoss}, [&] {
                       const TrainResult r = pglab::pretrain(make_pretrain_spec(c.data), c.model, c.pretrain);
                       const CheckpointMeta meta{c.pretrain.seed, c.pretrain.steps,
                                                 sha256_hex(section_yaml(c, "data")).substr(0, 16), "pretrain"};
                       save_checkpoint(abs(kPretrainCkpt), r.params, meta);
                       write_text(kPretrainLoss, loss_csv(r.losses));
                   });
}

const StageRecord& Pipeline::Runner::finetune() {
    pretrain();
    const auto& c = p.config_;
    return execute(
        "finetune",
        {section_yaml(c, "data"), section_yaml(c, "finetune"), fmt::format("target={} seed={}", c.stream("target"), c.finetune.seed)},
        {kPretrainCkpt}, {kFinetuneCkpt, meta_of(kFinetuneCkpt), kFinetuneLoss, kTargetCsv}, [&] {
            const Checkpoint base = load_checkpoint(abs(kPretrainCkpt));
            const LabeledSamples target = p.target_dataset();
            const TrainResult r = pglab::finetune(base.params, target, c.finetune);
            const CheckpointMeta meta{c.finetune.seed, c.finetune.steps,
                                      sha256_hex(section_yaml(c, "data")).substr(0, 16),
                                      to_string(c.finetune.mode)};
            save_checkpoint(abs(kFinetuneCkpt), r.params, meta);
            write_text(kFinetuneLoss, loss_csv(r.losses));
            write_text(kTargetCsv, target_csv(target));
        });
}

const StageRecord& Pipeline::Runner::sweep_omega() {
    finetune();
    const auto& c = p.config_;
    auto parts = sweep_parts();
    parts.push_back("omega_grid=" + grid_text(c.sweeps.omega_grid));
    return execute("sweep-omega", parts, {kPretrainCkpt, kFinetuneCkpt}, {kSweepOmegaCsv}, [&] {
        const ModelPair pair = p.model_pair();
        const SweepTable t = pglab::sweep_omega(pair, c.guidance.lambda, c.sweeps.omega_grid, p.eval_inputs());
        write_text(kSweepOmegaCsv, sweep_csv(std::span(&t, 1), echo()));
    });
}

const StageRecord& Pipeline::Runner::sweep_lambda() {
    finetune();
    const auto& c = p.config_;
    auto parts = sweep_parts();
    parts.push_back("lambda_grid=" + grid_text(c.sweeps.lambda_grid));
    parts.push_back("lambda_methods=" + methods_text(c.sweeps.lambda_methods));
    return execute("sweep-lambda", parts, {kPretrainCkpt, kFinetuneCkpt}, {kSweepLambdaCsv}, [&] {
        const ModelPair pair = p.model_pair();
        const EvalInputs inputs = p.eval_inputs();
        std::vector<SweepTable> tables;
        for (Method m : c.sweeps.lambda_methods) {
            tables.push_back(pglab::sweep_lambda(pair, m, c.guidance.omega, c.sweeps.lambda_grid, inputs));
        }
        write_text(kSweepLambdaCsv, sweep_csv(tables, echo()));
    });
}

const StageRecord& Pipeline::Runner::compare() {
    finetune();
    const auto& c = p.config_;
    auto parts = sweep_parts();
    parts.push_back("compare_lambdas=" + grid_text(c.sweeps.compare_lambdas));
    parts.push_back("compare_omegas=" + grid_text(c.sweeps.compare_omegas));
    return execute("compare", parts, {kPretrainCkpt, kFinetuneCkpt}, {kCompareCsv, kCompareSvg}, [&] {
        const ModelPair pair = p.model_pair();
        const EvalInputs inputs = p.eval_inputs();
        struct Variant {
            std::string name;
            Method method;
            double omega;
        };
        std::vector<Variant> variants{{"cfg", Method::cfg, 1.0}, {"ag", Method::ag, 0.0}};
        for (double w : c.sweeps.compare_omegas) {
            variants.push_back({fmt::format("pg_w{}", w), Method::pg, w});
        }
        std::vector<CompareRow> rows;
        std::vector<Panel> panels(2);
        panels[0] = {"subject fidelity", "lambda", "mean log-likelihood", {}};
        panels[1] = {"attribute fidelity", "lambda", "accuracy", {}};
        for (const auto& v : variants) {
            Series sf{v.name, {}, {}};
            Series af{v.name, {}, {}};
            for (double l : c.sweeps.compare_lambdas) {
                const EvalReport r = run_config(pair, GuidanceConfig{v.method, l, v.omega}, inputs);
                rows.push_back({v.name, r});
                sf.x.push_back(l);
                sf.y.push_back(r.subject_fidelity);
                af.x.push_back(l);
                af.y.push_back(r.attribute_fidelity);
            }
            panels[0].series.push_back(std::move(sf));
            panels[1].series.push_back(std::move(af));
        }
        write_text(kCompareCsv, compare_csv(rows, echo()));
        write_text(kCompareSvg, svg_line_charts("guidance methods", panels));
    });
}

const StageRecord& Pipeline::Runner::report() {
    sweep_omega();
    sweep_lambda();
    compare();
    const auto& c = p.config_;
    const std::vector<std::string> scatter_methods{"cfg", "ag", "pg"};
    std::vector<std::string> outputs{"report/sweep_omega.svg", "report/sweep_lambda.svg", "report/summary.csv"};
    for (const auto& m : scatter_methods) {
        outputs.push_back(fmt::format("report/samples_{}.csv", m));
        outputs.push_back(fmt::format("report/scatter_{}.svg", m));
    }
    auto parts = sweep_parts();
    return execute(
        "report", parts, {kPretrainCkpt, kFinetuneCkpt, kSweepOmegaCsv, kSweepLambdaCsv, kCompareCsv}, outputs, [&] {
            const CsvTable omega = parse_csv(read_file(abs(kSweepOmegaCsv)));
            std::vector<Panel> op(2);
            op[0] = {"subject fidelity", "omega", "mean log-likelihood", {}};
            op[1] = {"attribute fidelity", "omega", "accuracy", {}};
            const std::string oname = fmt::format("pg lambda={}", c.guidance.lambda);
            op[0].series.push_back({oname, omega.numbers("value"), omega.numbers("subject_fidelity")});
            op[1].series.push_back({oname, omega.numbers("value"), omega.numbers("attribute_fidelity")});
            write_text("report/sweep_omega.svg", svg_line_charts("interpolation scale sweep", op));

            const CsvTable lam = parse_csv(read_file(abs(kSweepLambdaCsv)));
            std::vector<Panel> lp(2);
            lp[0] = {"subject fidelity", "lambda", "mean log-likelihood", {}};
            lp[1] = {"attribute fidelity", "lambda", "accuracy", {}};
            const auto methods = lam.strings("method");
            const auto lv = lam.numbers("value");
            const auto ls = lam.numbers("subject_fidelity");
            const auto la = lam.numbers("attribute_fidelity");
            for (Method m : c.sweeps.lambda_methods) {
                Series s{to_string(m), {}, {}};
                Series a{to_string(m), {}, {}};
                for (std::size_t i = 0; i < methods.size(); ++i) {
                    if (methods[i] == to_string(m)) {
                        s.x.push_back(lv[i]);
                        s.y.push_back(ls[i]);
                        a.x.push_back(lv[i]);
                        a.y.push_back(la[i]);
                    }
                }
                lp[0].series.push_back(std::move(s));
                lp[1].series.push_back(std::move(a));
            }
            write_text("report/sweep_lambda.svg", svg_line_charts("guidance scale sweep", lp));

            SweepTable ot;
            ot.swept = "omega";
            const auto ov = omega.numbers("value");
            const auto osf = omega.numbers("subject_fidelity");
            for (std::size_t i = 0; i < ov.size(); ++i) {
                SweepRow r;
                r.value = ov[i];
                r.report.subject_fidelity = osf[i];
                ot.rows.push_back(r);
            }
            std::string summary = "key,value\n";
            summary += fmt::format("config_hash,{}\n", config_hash(c));
            summary += fmt::format("best_omega,{}\n", num(select_best_omega(ot)));

            const CsvTable cmp = parse_csv(read_file(abs(kCompareCsv)));
            const auto variant = cmp.strings("variant");
            const auto cl = cmp.numbers("lambda");
            const auto csf = cmp.numbers("subject_fidelity");
            const auto caf = cmp.numbers("attribute_fidelity");
            for (std::size_t i = 0; i < variant.size(); ++i) {
                summary += fmt::format("{}_l{}_subject_fidelity,{}\n", variant[i], cl[i], num(csf[i]));
                summary += fmt::format("{}_l{}_attribute_fidelity,{}\n", variant[i], cl[i], num(caf[i]));
            }
            write_text("report/summary.csv", summary);

            const ModelPair pair = p.model_pair();
            const EvalInputs inputs = p.eval_inputs();
            const std::vector<GmmSpec> specs{inputs.pretrain, inputs.target};
            for (const auto& m : scatter_methods) {
                const Method method = parse_method(m);
                const GuidanceConfig g{method, method == Method::ag ? c.guidance.ag_lambda : c.guidance.lambda,
                                       method == Method::pg ? c.guidance.omega : 1.0};
                SampleOptions opts;
                opts.solver = inputs.solver;
                const SampleRun run = ode_sample(make_guided_eps_fn(pair, g), inputs.schedule, inputs.samples,
                                                 inputs.requested, inputs.seed, opts);
                write_text(fmt::format("report/samples_{}.csv", m),
                           samples_csv(run.samples, inputs.requested, g, inputs.seed));
                write_text(fmt::format("report/scatter_{}.svg", m),
                           svg_scatter(g.describe(), run.samples, specs));
            }
        });
}

Pipeline::Pipeline(ExperimentConfig config, fs::path root) : config_(std::move(config)), root_(std::move(root)) {
    config_.resolve();
    config_.validate();
}

PipelineResult Pipeline::run(std::span<const Stage> targets) {
    Runner r(*this);
    for (Stage s : targets) {
        r.ensure(s);
    }
    return r.finish();
}

PipelineResult Pipeline::run_all() {
    const auto stages = all_stages();
    return run(stages);
}

ModelPair Pipeline::model_pair() {
    const fs::path a = root_ / kPretrainCkpt;
    const fs::path b = root_ / kFinetuneCkpt;
    if (!fs::exists(a) || !fs::exists(b)) {
        const Stage s = Stage::finetune;
        run(std::span(&s, 1));
    }
    return ModelPair(load_checkpoint(a).params, load_checkpoint(b).params);
}

EvalInputs Pipeline::eval_inputs() const {
    const auto& c = config_;
    return EvalInputs{make_pretrain_spec(c.data),
                      make_target_spec(c.data),
                      c.requested(),
                      static_cast<std::size_t>(c.eval.samples),
                      c.sampler.schedule(),
                      c.sampler.solver,
                      c.stream("noise"),
                      c.stream("eval")};
}

LabeledSamples Pipeline::target_dataset() const {
    const auto& c = config_;
    return sample_dataset(make_target_spec(c.data), static_cast<std::size_t>(c.data.target_points),
                          c.stream("target"), Condition::token(c.data.target_concept, c.data.base_attribute));
}

SampleOutput Pipeline::sample(const SampleRequest& request, PipelineResult* result) {
    request.guidance.validate();
    Runner r(*this);
    r.finetune();
    const std::size_t n = request.n == 0 ? static_cast<std::size_t>(config_.eval.samples) : request.n;
    const std::string tag = sample_tag(request, n);
    const std::string csv_rel = fmt::format("samples/{}.csv", tag);
    const std::string traj_rel = fmt::format("samples/{}_trajectory.csv", tag);
    const std::string svg_rel = fmt::format("samples/{}.svg", tag);
    std::vector<std::string> outputs{csv_rel, svg_rel};
    if (request.trajectories) {
        outputs.push_back(traj_rel);
    }
    auto parts = r.sweep_parts();
    parts.push_back(request.guidance.describe());
    parts.push_back(fmt::format("n={} trajectories={}", n, request.trajectories));
    EvalInputs inputs = eval_inputs();
    r.execute("sample:" + tag, parts, {kPretrainCkpt, kFinetuneCkpt}, outputs, [&] {
        const ModelPair pair = model_pair();
        SampleOptions opts;
        opts.solver = inputs.solver;
        opts.record_trajectories = request.trajectories;
        const SampleRun run = ode_sample(make_guided_eps_fn(pair, request.guidance), inputs.schedule, n,
                                         inputs.requested, inputs.seed, opts);
        r.write_text(csv_rel, samples_csv(run.samples, inputs.requested, request.guidance, inputs.seed));
        const std::vector<GmmSpec> specs{inputs.pretrain, inputs.target};
        r.write_text(svg_rel, svg_scatter(request.guidance.describe(), run.samples, specs));
        if (request.trajectories) {
            r.write_text(traj_rel, trajectory_csv(run.trajectories));
        }
    });
    PipelineResult res = r.finish();
    if (result != nullptr) {
        *result = res;
    }
    SampleOutput out;
    out.samples_csv = root_ / csv_rel;
    out.scatter_svg = root_ / svg_rel;
    if (request.trajectories) {
        out.trajectory_csv = root_ / traj_rel;
    }
    const auto pts = points_of(parse_csv(read_file(out.samples_csv)));
    out.report = evaluate(pts, inputs.requested, inputs.target, inputs.pretrain, inputs.reference_seed);
    out.report.seed = inputs.seed;
    out.report.guidance = request.guidance;
    return out;
}

VerifyReport Pipeline::verify(PipelineResult* result) {
    Runner r(*this);
    r.finetune();
    const std::string rel = "verify/verify.csv";
    VerifyReport rep;
    r.execute("verify", {to_yaml(config_)}, {kPretrainCkpt, kFinetuneCkpt}, {rel}, [&] {
        const ModelPair pair = model_pair();
        const LabeledSamples target = target_dataset();
        rep = run_invariants(config_, &pair, &target);
        r.write_text(rel, rep.to_csv());
    }, true);
    PipelineResult res = r.finish();
    if (result != nullptr) {
        *result = res;
    }
    return rep;
}

PipelineResult run_pipeline(const fs::path& config_path, const fs::path& root) {
    Pipeline p(load_config(config_path), root);
    return p.run_all();
}

PipelineResult compare_methods(const fs::path& config_path, const fs::path& root) {
    Pipeline p(load_config(config_path), root);
    const Stage s = Stage::compare;
    return p.run(std::span(&s, 1));
}

std::vector<std::string> check_manifest(const fs::path& root) {
    std::vector<std::string> problems;
    const fs::path mp = root / "manifest.json";
    if (!fs::exists(mp)) {
        return {"manifest.json is missing"};
    }
    ExperimentManifest m;
    try {
        m = ExperimentManifest::from_json(read_file(mp));
    } catch (const std::exception& e) {
        return {e.what()};
    }
    auto check = [&](const FileHash& f) {
        const fs::path path = root / f.path;
        if (!fs::exists(path)) {
            problems.push_back(fmt::format("{} is missing", f.path));
        } else if (sha256_file(path) != f.sha256) {
            problems.push_back(fmt::format("{} does not match its recorded hash", f.path));
        }
    };
    check(m.config_file);
    for (const auto& s : m.stages) {
        for (const auto& f : s.outputs) {
            check(f);
        }
    }
    return problems;
}

}  // namespace pglab

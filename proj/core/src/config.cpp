// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/config.hpp"

#include "pglab/hash.hpp"
#include "pglab/rng.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pglab {

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string num(double v) {
    return fmt::format("{:.17g}", v);
}

std::string vec_text(const Vec2& v) {
    return fmt::format("[{}, {}]", num(v.x()), num(v.y()));
}

std::string mat_text(const Mat2& m) {
    return fmt::format("[[{}, {}], [{}, {}]]", num(m(0, 0)), num(m(0, 1)), num(m(1, 0)), num(m(1, 1)));
}

template <class T, class F>
std::string list_text(const std::vector<T>& xs, F f) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i ? ", " : "") + f(xs[i]);
    }
    return out + "]";
}

// Walks a mapping node, reading known keys and rejecting the rest.
class Section {
public:
    Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) {
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected a mapping");
        }
    }

    ~Section() = default;

    void finish() const {
        if (!node_ || node_.IsNull()) {
            return;
        }
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.contains(key)) {
                throw ConfigError(join(path_, key), "unknown key");
            }
        }
    }

    YAML::Node child(const std::string& key) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) {
            return YAML::Node();
        }
        const YAML::Node& view = node_;
        return view[key];
    }

    [[nodiscard]] std::string path(const std::string& key) const { return join(path_, key); }

    template <class T>
    void read(const std::string& key, T& out) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) {
            return;
        }
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(path(key), "wrong type");
        }
    }

    void read_u64(const std::string& key, std::uint64_t& out) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) {
            return;
        }
        try {
            const auto s = n.as<std::string>();
            if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
                throw ConfigError(path(key), "expected a non-negative integer");
            }
            out = std::stoull(s);
        } catch (const YAML::Exception&) {
            throw ConfigError(path(key), "wrong type");
        } catch (const std::out_of_range&) {
            throw ConfigError(path(key), "integer out of range");
        }
    }

    void read_vec(const std::string& key, Vec2& out) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) {
            return;
        }
        out = to_vec(n, path(key));
    }

    void read_mat(const std::string& key, Mat2& out) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) {
            return;
        }
        if (!n.IsSequence() || n.size() != 2) {
            throw ConfigError(path(key), "expected a 2x2 matrix");
        }
        const Vec2 r0 = to_vec(n[0], path(key));
        const Vec2 r1 = to_vec(n[1], path(key));
        out << r0.x(), r0.y(), r1.x(), r1.y();
    }

    void read_vec_list(const std::string& key, std::vector<Vec2>& out) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) {
            return;
        }
        if (!n.IsSequence()) {
            throw ConfigError(path(key), "expected a list of points");
        }
        out.clear();
        for (std::size_t i = 0; i < n.size(); ++i) {
            out.push_back(to_vec(n[i], fmt::format("{}[{}]", path(key), i)));
        }
    }

    template <class F>
    void read_enum(const std::string& key, F parse) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) {
            return;
        }
        try {
            parse(n.as<std::string>());
        } catch (const YAML::Exception&) {
            throw ConfigError(path(key), "wrong type");
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path(key), e.what());
        }
    }

private:
    static Vec2 to_vec(const YAML::Node& n, const std::string& where) {
        if (!n.IsSequence() || n.size() != 2) {
            throw ConfigError(where, "expected a 2-vector");
        }
        try {
            return {n[0].as<double>(), n[1].as<double>()};
        } catch (const YAML::Exception&) {
            throw ConfigError(where, "expected numbers");
        }
    }

    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_train(Section s, TrainConfig& t) {
    s.read("steps", t.steps);
    s.read("batch_size", t.batch_size);
    s.read("learning_rate", t.learning_rate);
    s.read("final_lr_ratio", t.final_lr_ratio);
    s.read("beta1", t.beta1);
    s.read("beta2", t.beta2);
    s.read("epsilon", t.epsilon);
    s.read("p_drop", t.p_drop);
    s.read("sigma_min", t.sigma_min);
    s.read("sigma_max", t.sigma_max);
    s.read_enum("mode", [&](const std::string& v) { t.mode = parse_train_mode(v); });
    s.read("rank", t.rank);
    s.finish();
}

std::string train_text(const TrainConfig& t) {
    return fmt::format(
        "  steps: {}\n  batch_size: {}\n  learning_rate: {}\n  final_lr_ratio: {}\n  beta1: {}\n  beta2: {}\n"
        "  epsilon: {}\n  p_drop: {}\n  sigma_min: {}\n  sigma_max: {}\n  mode: {}\n  rank: {}\n",
        t.steps, t.batch_size, num(t.learning_rate), num(t.final_lr_ratio), num(t.beta1), num(t.beta2),
        num(t.epsilon), num(t.p_drop), num(t.sigma_min), num(t.sigma_max), to_string(t.mode), t.rank);
}

void check_grid(const std::vector<double>& grid, const std::string& where, double lo, double hi) {
    if (grid.empty()) {
        throw ConfigError(where, "grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= lo && grid[i] <= hi)) {
            throw ConfigError(where, fmt::format("value {} outside [{}, {}]", grid[i], lo, hi));
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ConfigError(where, "grid must be strictly increasing");
        }
    }
}

template <class F>
void wrap(const std::string& where, F f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where, e.what());
    }
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::invalid_argument(fmt::format("config error at '{}': {}", field, message)), field_(std::move(field)) {}

SigmaSchedule SamplerConfig::schedule() const {
    return make_schedule(steps, sigma_max, sigma_min, rho);
}

TrainConfig default_pretrain() {
    TrainConfig t;
    t.final_lr_ratio = 0.01;
    return t;
}

TrainConfig default_finetune() {
    TrainConfig t;
    t.steps = 3000;
    t.batch_size = 32;
    t.p_drop = 0.1;
    return t;
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    c.resolve();
    return c;
}

void ExperimentConfig::resolve() {
    model.concept_slots = data.concept_slots();
    model.attributes = data.num_attributes();
    pretrain.seed = stream("pretrain");
    finetune.seed = stream("finetune");
}

std::uint64_t ExperimentConfig::stream(std::string_view name) const {
    return RandomStream(seed).split(name).key();
}

Condition ExperimentConfig::requested() const {
    return Condition::token(data.target_concept, eval.attribute);
}

void ExperimentConfig::validate() const {
    wrap("data", [&] {
        make_pretrain_spec(data);
        make_target_spec(data);
    });
    if (data.target_points < 1) {
        throw ConfigError("data.target.points", "must be at least 1");
    }
    if (data.base_attribute < 0 || data.base_attribute >= data.num_attributes()) {
        throw ConfigError("data.base_attribute", "not a declared attribute");
    }
    wrap("model", [&] { model.validate(); });
    wrap("pretrain", [&] { pretrain.validate(); });
    wrap("finetune", [&] { finetune.validate(); });
    wrap("sampler", [&] { static_cast<void>(sampler.schedule()); });
    if (!(guidance.lambda >= 1.0) || !std::isfinite(guidance.lambda)) {
        throw ConfigError("guidance.lambda", "must be finite and >= 1");
    }
    if (!(guidance.ag_lambda >= 1.0) || !std::isfinite(guidance.ag_lambda)) {
        throw ConfigError("guidance.ag_lambda", "must be finite and >= 1");
    }
    if (!(guidance.omega >= 0.0 && guidance.omega <= 1.0)) {
        throw ConfigError("guidance.omega", "must lie in [0, 1]");
    }
    if (eval.attribute < 0 || eval.attribute >= data.num_attributes()) {
        throw ConfigError("eval.attribute", "not a declared attribute");
    }
    if (eval.samples < 1) {
        throw ConfigError("eval.samples", "must be at least 1");
    }
    check_grid(sweeps.omega_grid, "sweeps.omega_grid", 0.0, 1.0);
    check_grid(sweeps.lambda_grid, "sweeps.lambda_grid", 1.0, 1e6);
    check_grid(sweeps.compare_lambdas, "sweeps.compare_lambdas", 1.0, 1e6);
    check_grid(sweeps.compare_omegas, "sweeps.compare_omegas", 0.0, 1.0);
    if (sweeps.lambda_methods.empty()) {
        throw ConfigError("sweeps.lambda_methods", "must name at least one method");
    }
}

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("<root>", fmt::format("malformed YAML: {}", e.msg));
    }
    ExperimentConfig c = ExperimentConfig::defaults();
    Section top(root, "");
    top.read_u64("seed", c.seed);
    {
        Section d(top.child("data"), "data");
        d.read_vec_list("concept_means", c.data.concept_means);
        d.read_vec_list("attribute_shifts", c.data.attribute_shifts);
        d.read_mat("covariance", c.data.covariance);
        d.read("base_attribute", c.data.base_attribute);
        Section t(d.child("target"), "data.target");
        t.read("concept", c.data.target_concept);
        t.read_vec("mean", c.data.target_mean);
        t.read_mat("covariance", c.data.target_covariance);
        t.read("points", c.data.target_points);
        t.finish();
        d.finish();
    }
    {
        Section m(top.child("model"), "model");
        m.read("hidden", c.model.hidden);
        m.read_enum("activation", [&](const std::string& v) { c.model.activation = parse_activation(v); });
        m.read("sigma_features", c.model.sigma_features);
        m.read("embedding_width", c.model.embedding_width);
        m.read("sigma_data", c.model.sigma_data);
        m.finish();
    }
    read_train(Section(top.child("pretrain"), "pretrain"), c.pretrain);
    read_train(Section(top.child("finetune"), "finetune"), c.finetune);
    {
        Section s(top.child("sampler"), "sampler");
        s.read("steps", c.sampler.steps);
        s.read("sigma_max", c.sampler.sigma_max);
        s.read("sigma_min", c.sampler.sigma_min);
        s.read("rho", c.sampler.rho);
        s.read_enum("solver", [&](const std::string& v) { c.sampler.solver = parse_solver(v); });
        s.finish();
    }
    {
        Section g(top.child("guidance"), "guidance");
        g.read("lambda", c.guidance.lambda);
        g.read("ag_lambda", c.guidance.ag_lambda);
        g.read("omega", c.guidance.omega);
        g.finish();
    }
    {
        Section e(top.child("eval"), "eval");
        e.read("attribute", c.eval.attribute);
        e.read("samples", c.eval.samples);
        e.finish();
    }
    {
        Section s(top.child("sweeps"), "sweeps");
        s.read("omega_grid", c.sweeps.omega_grid);
        s.read("lambda_grid", c.sweeps.lambda_grid);
        std::vector<std::string> methods;
        s.read("lambda_methods", methods);
        if (!methods.empty()) {
            c.sweeps.lambda_methods.clear();
            for (const auto& m : methods) {
                try {
                    c.sweeps.lambda_methods.push_back(parse_method(m));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError("sweeps.lambda_methods", e.what());
                }
            }
        }
        s.read("compare_lambdas", c.sweeps.compare_lambdas);
        s.read("compare_omegas", c.sweeps.compare_omegas);
        s.finish();
    }
    top.finish();
    c.resolve();
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("<file>", fmt::format("cannot read config file {}", path.string()));
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string section_yaml(const ExperimentConfig& c, std::string_view section) {
    if (section == "seed") {
        return fmt::format("seed: {}\n", c.seed);
    }
    if (section == "data") {
        const auto& d = c.data;
        return fmt::format(
            "data:\n  concept_means: {}\n  attribute_shifts: {}\n  covariance: {}\n  base_attribute: {}\n"
            "  target:\n    concept: {}\n    mean: {}\n    covariance: {}\n    points: {}\n",
            list_text(d.concept_means, vec_text), list_text(d.attribute_shifts, vec_text), mat_text(d.covariance),
            d.base_attribute, d.target_concept, vec_text(d.target_mean), mat_text(d.target_covariance),
            d.target_points);
    }
    if (section == "model") {
        const auto& m = c.model;
        return fmt::format(
            "model:\n  hidden: {}\n  activation: {}\n  sigma_features: {}\n  embedding_width: {}\n  sigma_data: {}\n",
            list_text(m.hidden, [](int w) { return std::to_string(w); }), to_string(m.activation),
            m.sigma_features, m.embedding_width, num(m.sigma_data));
    }
    if (section == "pretrain") {
        return "pretrain:\n" + train_text(c.pretrain);
    }
    if (section == "finetune") {
        return "finetune:\n" + train_text(c.finetune);
    }
    if (section == "sampler") {
        const auto& s = c.sampler;
        return fmt::format("sampler:\n  steps: {}\n  sigma_max: {}\n  sigma_min: {}\n  rho: {}\n  solver: {}\n",
                           s.steps, num(s.sigma_max), num(s.sigma_min), num(s.rho), to_string(s.solver));
    }
    if (section == "guidance") {
        return fmt::format("guidance:\n  lambda: {}\n  ag_lambda: {}\n  omega: {}\n", num(c.guidance.lambda),
                           num(c.guidance.ag_lambda), num(c.guidance.omega));
    }
    if (section == "eval") {
        return fmt::format("eval:\n  attribute: {}\n  samples: {}\n", c.eval.attribute, c.eval.samples);
    }
    if (section == "sweeps") {
        const auto& s = c.sweeps;
        return fmt::format(
            "sweeps:\n  omega_grid: {}\n  lambda_grid: {}\n  lambda_methods: {}\n  compare_lambdas: {}\n"
            "  compare_omegas: {}\n",
            list_text(s.omega_grid, num), list_text(s.lambda_grid, num),
            list_text(s.lambda_methods, [](Method m) { return to_string(m); }), list_text(s.compare_lambdas, num),
            list_text(s.compare_omegas, num));
    }
    throw std::invalid_argument(fmt::format("unknown config section '{}'", section));
}

std::string to_yaml(const ExperimentConfig& c) {
    std::string out;
    for (const char* s : {"seed", "data", "model", "pretrain", "finetune", "sampler", "guidance", "eval", "sweeps"}) {
        out += section_yaml(c, s);
    }
    return out;
}

std::string config_hash(const ExperimentConfig& config) {
    return sha256_hex(to_yaml(config)).substr(0, 16);
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument(fmt::format("bad grid value '{}'", item));
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos) {
            throw std::invalid_argument(fmt::format("bad grid value '{}'", item));
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw std::invalid_argument("grid is empty");
    }
    return out;
}

}  // namespace pglab

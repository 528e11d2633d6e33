// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/config.hpp"
#include "pglab/evaluation.hpp"
#include "pglab/guidance.hpp"
#include "pglab/invariants.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pglab {

inline constexpr const char* kToolVersion = "pglab 0.1.0";

/// Artifact store root: $PGLAB_STORE if set, else ./pglab-store.
std::filesystem::path default_store_root();

struct FileHash {
    std::string path;  // relative to the store root
    std::string sha256;

    friend bool operator==(const FileHash&, const FileHash&) = default;
};

struct StageRecord {
    std::string name;
    std::string key;
    std::vector<FileHash> inputs;
    std::vector<FileHash> outputs;
    std::string started;
    std::string finished;
};

struct ExperimentManifest {
    std::string tool_version;
    std::string config_hash;
    std::string created;
    FileHash config_file;
    std::vector<StageRecord> stages;

    [[nodiscard]] const StageRecord* find(const std::string& stage) const;
    [[nodiscard]] std::string to_json() const;
    static ExperimentManifest from_json(const std::string& text);
};

/// Stage that threw. The message carries the stage name and the config.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& config_yaml, const std::string& what);
    [[nodiscard]] const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

enum class Stage { pretrain, finetune, sweep_omega, sweep_lambda, compare, report };

std::string to_string(Stage s);
std::vector<Stage> all_stages();

struct RunStats {
    std::vector<std::string> executed;
    std::vector<std::string> cached;
};

struct PipelineResult {
    ExperimentManifest manifest;
    RunStats stats;
};

/// One sampled configuration written by Pipeline::sample.
struct SampleRequest {
    GuidanceConfig guidance;
    std::size_t n = 0;  // 0 means eval.samples
    bool trajectories = false;
};

struct SampleOutput {
    std::filesystem::path samples_csv;
    std::optional<std::filesystem::path> trajectory_csv;
    std::filesystem::path scatter_svg;
    EvalReport report;
};

/// Content-addressed stage runner over one store directory.
///
/// Every stage is keyed by sha256(stage, tool version, the config fields it
/// reads, hashes of its input files). A stage is skipped when the manifest in
/// the store holds the same key and every recorded output still hashes to
/// its recorded value.
class Pipeline {
public:
    Pipeline(ExperimentConfig config, std::filesystem::path root);

    /// Runs the requested stages and their dependencies, then rewrites
    /// manifest.json.
    PipelineResult run(std::span<const Stage> targets);
    PipelineResult run_all();

    /// Samples one guidance configuration on top of the trained pair.
    SampleOutput sample(const SampleRequest& request, PipelineResult* result = nullptr);

    [[nodiscard]] const ExperimentConfig& config() const { return config_; }
    [[nodiscard]] const std::filesystem::path& root() const { return root_; }
    [[nodiscard]] std::filesystem::path manifest_path() const { return root_ / "manifest.json"; }

    /// Runs the invariant suite against random and trained models and writes
    /// verify/verify.csv. Always executes.
    VerifyReport verify(PipelineResult* result = nullptr);

    /// Loads both checkpoints, running the training stages if needed.
    ModelPair model_pair();
    [[nodiscard]] EvalInputs eval_inputs() const;
    [[nodiscard]] LabeledSamples target_dataset() const;

private:
    struct Runner;

    ExperimentConfig config_;
    std::filesystem::path root_;
};

PipelineResult run_pipeline(const std::filesystem::path& config_path, const std::filesystem::path& root);
PipelineResult compare_methods(const std::filesystem::path& config_path, const std::filesystem::path& root);

/// Reads and checks a manifest: every listed file exists and matches its hash.
/// Returns the problems found; empty means consistent.
std::vector<std::string> check_manifest(const std::filesystem::path& root);

}  // namespace pglab

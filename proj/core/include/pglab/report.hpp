// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/datasets.hpp"
#include "pglab/evaluation.hpp"
#include "pglab/guidance.hpp"
#include "pglab/sampler.hpp"

#include <span>
#include <string>
#include <vector>

namespace pglab {

/// Context echoed into every sweep/compare row so a CSV stands on its own.
struct RunEcho {
    std::uint64_t seed = 0;
    std::uint64_t reference_seed = 0;
    std::string solver;
    int steps = 0;
    double sigma_max = 0.0;
    double sigma_min = 0.0;
    double rho = 0.0;
    int concept_id = 0;
    int attribute = 0;
};

std::string samples_csv(std::span<const Vec2> samples, const Condition& cond, const GuidanceConfig& guidance,
                        std::uint64_t seed);
std::string trajectory_csv(std::span<const Trajectory> trajectories);
std::string loss_csv(std::span<const double> losses);
/// One header, then the rows of every table in order.
std::string sweep_csv(std::span<const SweepTable> tables, const RunEcho& echo);

/// One row of a method comparison.
struct CompareRow {
    std::string variant;
    EvalReport report;
};
std::string compare_csv(std::span<const CompareRow> rows, const RunEcho& echo);

/// Minimal reader for the CSV files written above (no quoting).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t index(const std::string& column) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& column) const;
    [[nodiscard]] std::vector<std::string> strings(const std::string& column) const;
};
CsvTable parse_csv(const std::string& text);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Panels laid out left to right, one polyline with markers per series.
std::string svg_line_charts(const std::string& title, std::span<const Panel> panels);

/// Sweep table as two panels: subject and attribute fidelity vs swept value.
std::string svg_sweep(const std::string& title, std::span<const SweepTable> tables, std::span<const std::string> names);

/// Samples over the 2-sigma ellipses of every component of the given specs.
std::string svg_scatter(const std::string& title, std::span<const Vec2> samples, std::span<const GmmSpec> specs);

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/report.hpp"

#include <gtest/gtest.h>

namespace pglab {
namespace {

std::string first_line(const std::string& s) {
    return s.substr(0, s.find('\n'));
}

RunEcho echo() {
    return {3, 4, "euler", 50, 10.0, 0.01, 7.0, 2, 1};
}

TEST(Csv, SamplesHeaderAndRows) {
    const std::vector<Vec2> pts{Vec2(0.5, -1.25), Vec2(2, 3)};
    const std::string csv = samples_csv(pts, Condition::token(2, 1), {Method::pg, 7.5, 0.3}, 9);
    EXPECT_EQ(first_line(csv), "sample_id,x0,x1,concept,attribute,method,lambda,omega,seed");
    const CsvTable t = parse_csv(csv);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.numbers("x1")[0], -1.25);
    EXPECT_EQ(t.strings("method")[1], "pg");
    EXPECT_EQ(t.numbers("omega")[0], 0.3);
}

TEST(Csv, SweepHeaderEchoesContext) {
    SweepTable t;
    t.swept = "omega";
    SweepRow r;
    r.value = 0.1;
    r.report.subject_fidelity = -2.5;
    r.report.n = 10;
    r.report.guidance = {Method::pg, 7.5, 0.1};
    t.rows.push_back(r);
    const std::vector<SweepTable> tables{t};
    const std::string csv = sweep_csv(tables, echo());
    EXPECT_EQ(first_line(csv),
              "swept,value,method,lambda,omega,subject_fidelity,attribute_fidelity,energy_distance,subject_rate,n,"
              "seed,reference_seed,solver,steps,sigma_max,sigma_min,rho,concept,attribute");
    const CsvTable back = parse_csv(csv);
    EXPECT_EQ(back.numbers("subject_fidelity")[0], -2.5);
    EXPECT_EQ(back.numbers("reference_seed")[0], 4.0);
    EXPECT_THROW(static_cast<void>(back.index("nope")), std::invalid_argument);
}

TEST(Csv, CompareLeadsWithVariant) {
    CompareRow row{"pg_w0.5", {}};
    row.report.guidance = {Method::pg, 1.0, 0.5};
    const std::vector<CompareRow> rows{row};
    const std::string csv = compare_csv(rows, echo());
    EXPECT_EQ(first_line(csv).substr(0, 28), "variant,method,lambda,omega,");
    EXPECT_EQ(parse_csv(csv).strings("variant")[0], "pg_w0.5");
}

TEST(Csv, LossAndTrajectory) {
    const std::vector<double> losses{1.0, 0.5};
    EXPECT_EQ(loss_csv(losses), "step,loss\n0,1\n1,0.5\n");
    Trajectory tr;
    tr.sigmas = {2.0, 1.0};
    tr.states = {Vec2(0, 0), Vec2(1, 1)};
    const std::vector<Trajectory> trs{tr};
    const CsvTable t = parse_csv(trajectory_csv(trs));
    EXPECT_EQ(t.header, std::vector<std::string>({"sample_id", "step", "sigma", "x0", "x1"}));
    EXPECT_EQ(t.rows.size(), 2u);
}

TEST(Csv, FullPrecisionRoundTrip) {
    const double v = 0.1 + 0.2;
    const std::vector<Vec2> pts{Vec2(v, 1.0 / 3.0)};
    const CsvTable t = parse_csv(samples_csv(pts, Condition::token(0, 0), {}, 0));
    EXPECT_EQ(t.numbers("x0")[0], v);
    EXPECT_EQ(t.numbers("x1")[0], 1.0 / 3.0);
}

TEST(Svg, ChartsAreWellFormed) {
    Panel p{"fidelity", "omega", "value", {{"pg", {0, 0.5, 1}, {1, 2, 1.5}}}};
    const std::vector<Panel> panels{p};
    const std::string svg = svg_line_charts("sweep", panels);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("polyline"), std::string::npos);
    const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1, 2)};
    const std::vector<GmmSpec> specs{make_pretrain_spec(DataConfig{})};
    const std::string sc = svg_scatter("samples", pts, specs);
    EXPECT_NE(sc.find("</svg>"), std::string::npos);
    EXPECT_NE(sc.find("ellipse"), std::string::npos);
}

}  // namespace
}  // namespace pglab

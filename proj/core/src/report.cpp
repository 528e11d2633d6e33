// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/report.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pglab {

namespace {

std::string num(double v) {
    return fmt::format("{:.17g}", v);
}

constexpr const char* kReportColumns =
    "subject_fidelity,attribute_fidelity,energy_distance,subject_rate,n,"
    "seed,reference_seed,solver,steps,sigma_max,sigma_min,rho,concept,attribute";

std::string report_fields(const EvalReport& r, const RunEcho& e) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", num(r.subject_fidelity), num(r.attribute_fidelity),
                       num(r.energy_distance), num(r.subject_rate), r.n, e.seed, e.reference_seed, e.solver, e.steps,
                       num(e.sigma_max), num(e.sigma_min), num(e.rho), e.concept_id, e.attribute);
}

std::string guidance_fields(const GuidanceConfig& g) {
    return fmt::format("{},{},{}", to_string(g.method), num(g.lambda), num(g.omega));
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '&':
                out += "&amp;";
                break;
            default:
                out.push_back(c);
        }
    }
    return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double m = 0.05 * (hi - lo);
        lo -= m;
        hi += m;
    }
};

}  // namespace

std::string samples_csv(std::span<const Vec2> samples, const Condition& cond, const GuidanceConfig& guidance,
                        std::uint64_t seed) {
    std::string out = "sample_id,x0,x1,concept,attribute,method,lambda,omega,seed\n";
    const int c = cond.is_null() ? -1 : cond.concept_id();
    const int a = cond.is_null() ? -1 : cond.attribute();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out += fmt::format("{},{},{},{},{},{},{}\n", i, num(samples[i].x()), num(samples[i].y()), c, a,
                           guidance_fields(guidance), seed);
    }
    return out;
}

std::string trajectory_csv(std::span<const Trajectory> trajectories) {
    std::string out = "sample_id,step,sigma,x0,x1\n";
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const auto& t = trajectories[i];
        for (std::size_t k = 0; k < t.states.size(); ++k) {
            out += fmt::format("{},{},{},{},{}\n", i, k, num(t.sigmas[k]), num(t.states[k].x()),
                               num(t.states[k].y()));
        }
    }
    return out;
}

std::string loss_csv(std::span<const double> losses) {
    std::string out = "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) {
        out += fmt::format("{},{}\n", i, num(losses[i]));
    }
    return out;
}

std::string sweep_csv(std::span<const SweepTable> tables, const RunEcho& echo) {
    std::string out = fmt::format("swept,value,method,lambda,omega,{}\n", kReportColumns);
    for (const auto& table : tables) {
        for (const auto& row : table.rows) {
            out += fmt::format("{},{},{},{}\n", table.swept, num(row.value), guidance_fields(row.report.guidance),
                               report_fields(row.report, echo));
        }
    }
    return out;
}

std::string compare_csv(std::span<const CompareRow> rows, const RunEcho& echo) {
    std::string out = fmt::format("variant,method,lambda,omega,{}\n", kReportColumns);
    for (const auto& row : rows) {
        out += fmt::format("{},{},{}\n", row.variant, guidance_fields(row.report.guidance),
                           report_fields(row.report, echo));
    }
    return out;
}

std::size_t CsvTable::index(const std::string& column) const {
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) {
        throw std::invalid_argument(fmt::format("csv has no column '{}'", column));
    }
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<std::string> CsvTable::strings(const std::string& column) const {
    const std::size_t i = index(column);
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r.at(i));
    }
    return out;
}

std::vector<double> CsvTable::numbers(const std::string& column) const {
    std::vector<double> out;
    for (const auto& s : strings(column)) {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(fmt::format("bad number '{}' in column '{}'", s, column));
        }
        out.push_back(v);
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) {
            end = text.size();
        }
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t a = 0;
        while (true) {
            const std::size_t b = line.find(',', a);
            cells.push_back(line.substr(a, b == std::string::npos ? std::string::npos : b - a));
            if (b == std::string::npos) {
                break;
            }
            a = b + 1;
        }
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size()) {
                throw std::invalid_argument(fmt::format("csv row has {} cells, header has {}", cells.size(),
                                                        t.header.size()));
            }
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

std::string svg_line_charts(const std::string& title, std::span<const Panel> panels) {
    constexpr double kW = 420.0;
    constexpr double kH = 320.0;
    constexpr double kL = 60.0;
    constexpr double kR = 20.0;
    constexpr double kT = 50.0;
    constexpr double kB = 50.0;
    const double width = kW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
        "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        width, kH + 40, width / 2, escape(title));
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const Panel& panel = panels[p];
        const double ox = kW * static_cast<double>(p);
        Range rx;
        Range ry;
        for (const auto& ser : panel.series) {
            for (double v : ser.x) {
                rx.add(v);
            }
            for (double v : ser.y) {
                ry.add(v);
            }
        }
        rx.pad();
        ry.pad();
        const double pw = kW - kL - kR;
        const double ph = kH - kT - kB + 40;
        auto px = [&](double v) { return ox + kL + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
        auto py = [&](double v) { return kT + (1.0 - (v - ry.lo) / (ry.hi - ry.lo)) * ph; };
        s += fmt::format("<text x=\"{}\" y=\"40\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                         ox + kL + pw / 2, escape(panel.title));
        s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
                         ox + kL, kT, pw, ph);
        for (int k = 0; k <= 4; ++k) {
            const double vx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
            const double vy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
            s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n", px(vx),
                             kT + ph + 14, vx);
            s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n", ox + kL - 4,
                             py(vy) + 4, vy);
            s += fmt::format(
                "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", ox + kL, py(vy),
                ox + kL + pw, py(vy));
        }
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", ox + kL + pw / 2,
                         kT + ph + 30, escape(panel.x_label));
        s += fmt::format(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n", ox + 14,
            kT + ph / 2, ox + 14, kT + ph / 2, escape(panel.y_label));
        for (std::size_t k = 0; k < panel.series.size(); ++k) {
            const Series& ser = panel.series[k];
            const char* color = kPalette[k % std::size(kPalette)];
            std::string pts;
            for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
                if (std::isfinite(ser.y[i])) {
                    pts += fmt::format("{:.2f},{:.2f} ", px(ser.x[i]), py(ser.y[i]));
                }
            }
            s += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n", pts,
                             color);
            for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
                if (std::isfinite(ser.y[i])) {
                    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(ser.x[i]),
                                     py(ser.y[i]), color);
                }
            }
            s += fmt::format(
                "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" height=\"10\" fill=\"{}\"/>"
                "<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n",
                ox + kL + 8, kT + 8 + 14.0 * static_cast<double>(k), color, ox + kL + 22,
                kT + 17 + 14.0 * static_cast<double>(k), escape(ser.name));
        }
    }
    s += "</svg>\n";
    return s;
}

std::string svg_sweep(const std::string& title, std::span<const SweepTable> tables,
                      std::span<const std::string> names) {
    std::vector<Panel> panels(2);
    const std::string swept = tables.empty() ? std::string("value") : tables.front().swept;
    panels[0] = {"subject fidelity", swept, "mean log-likelihood", {}};
    panels[1] = {"attribute fidelity", swept, "accuracy", {}};
    for (std::size_t t = 0; t < tables.size(); ++t) {
        const std::string name = t < names.size() ? names[t] : fmt::format("series {}", t);
        panels[0].series.push_back({name, tables[t].values(), tables[t].column(&EvalReport::subject_fidelity)});
        panels[1].series.push_back({name, tables[t].values(), tables[t].column(&EvalReport::attribute_fidelity)});
    }
    return svg_line_charts(title, panels);
}

std::string svg_scatter(const std::string& title, std::span<const Vec2> samples, std::span<const GmmSpec> specs) {
    constexpr double kSize = 480.0;
    constexpr double kPad = 30.0;
    Range rx;
    Range ry;
    for (const auto& p : samples) {
        rx.add(p.x());
        ry.add(p.y());
    }
    for (const auto& spec : specs) {
        for (const auto& c : spec.components()) {
            const double sx = 2.0 * std::sqrt(c.covariance(0, 0));
            const double sy = 2.0 * std::sqrt(c.covariance(1, 1));
            rx.add(c.mean.x() - sx);
            rx.add(c.mean.x() + sx);
            ry.add(c.mean.y() - sy);
            ry.add(c.mean.y() + sy);
        }
    }
    rx.pad();
    ry.pad();
    const double span = std::max(rx.hi - rx.lo, ry.hi - ry.lo);
    const double cx = 0.5 * (rx.lo + rx.hi);
    const double cy = 0.5 * (ry.lo + ry.hi);
    const double scale = (kSize - 2 * kPad) / span;
    auto px = [&](double v) { return kSize / 2 + (v - cx) * scale; };
    auto py = [&](double v) { return kSize / 2 + 10 - (v - cy) * scale; };

    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" font-family=\"sans-serif\" "
        "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
        kSize, kSize + 20, kSize / 2, escape(title));
    for (const auto& p : samples) {
        s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.6\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n",
                         px(p.x()), py(p.y()));
    }
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const char* color = k == 0 ? "#555" : "#d62728";
        for (const auto& c : specs[k].components()) {
            Eigen::SelfAdjointEigenSolver<Mat2> es(c.covariance);
            const Vec2 ev = es.eigenvalues();
            const Mat2 vecs = es.eigenvectors();
            const double angle = std::atan2(vecs(1, 1), vecs(0, 1)) * 180.0 / std::numbers::pi;
            s += fmt::format(
                "<ellipse cx=\"{:.2f}\" cy=\"{:.2f}\" rx=\"{:.2f}\" ry=\"{:.2f}\" transform=\"rotate({:.2f} {:.2f} "
                "{:.2f})\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                px(c.mean.x()), py(c.mean.y()), 2.0 * std::sqrt(ev(1)) * scale, 2.0 * std::sqrt(ev(0)) * scale,
                -angle, px(c.mean.x()), py(c.mean.y()), color);
            s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"{}\">{}</text>\n", px(c.mean.x()) + 4,
                             py(c.mean.y()) - 4, color, escape(c.condition.to_string()));
        }
    }
    s += "</svg>\n";
    return s;
}

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/evaluation.hpp"

#include "pglab/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pglab {

namespace {

struct Points {
    std::vector<double> x;
    std::vector<double> y;
};

// Sum of pairwise distances between two point blocks, row by row.
// Distances from (px, py) to points [begin, end), summed in four fixed lanes
// (j mod 4) so the loop vectorizes without reassociation.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
__attribute__((target_clones("avx2", "default")))
#endif
double row_sum(double px, double py, const double* bx, const double* by, std::size_t begin, std::size_t end) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t j = begin;
    for (; j + 4 <= end; j += 4) {
        for (std::size_t k = 0; k < 4; ++k) {
            const double dx = px - bx[j + k];
            const double dy = py - by[j + k];
            lane[k] += std::sqrt(dx * dx + dy * dy);
        }
    }
    double tail = 0.0;
    for (; j < end; ++j) {
        const double dx = px - bx[j];
        const double dy = py - by[j];
        tail += std::sqrt(dx * dx + dy * dy);
    }
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + tail;
}

double cross_sum(const double* ax, const double* ay, std::size_t na, const double* bx, const double* by,
                 std::size_t nb) {
    double total = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        total += row_sum(ax[i], ay[i], bx, by, 0, nb);
    }
    return total;
}

// Sum over ordered pairs i != j within one block (twice the unordered sum).
double self_sum(const double* ax, const double* ay, std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        total += row_sum(ax[i], ay[i], ax, ay, i + 1, n);
    }
    return 2.0 * total;
}

Points to_soa(std::span<const Vec2> p) {
    Points out;
    out.x.reserve(p.size());
    out.y.reserve(p.size());
    for (const auto& v : p) {
        out.x.push_back(v.x());
        out.y.push_back(v.y());
    }
    return out;
}

double energy_from_sums(double s_ab, double s_aa, double s_bb, std::size_t n, std::size_t m) {
    const auto dn = static_cast<double>(n);
    const auto dm = static_cast<double>(m);
    return 2.0 * s_ab / (dn * dm) - s_aa / (dn * dn) - s_bb / (dm * dm);
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    return r;
}

void check_grid(std::span<const double> grid, const char* name) {
    if (grid.empty()) {
        throw std::invalid_argument(fmt::format("{} grid is empty", name));
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument(fmt::format("{} grid must be strictly increasing", name));
        }
    }
}

}  // namespace

EvalReport evaluate(std::span<const Vec2> samples, const Condition& requested, const GmmSpec& target,
                    const GmmSpec& pretrain, std::uint64_t reference_seed) {
    if (samples.empty()) {
        throw std::invalid_argument("evaluate needs at least one sample");
    }
    if (requested.is_null()) {
        throw std::invalid_argument("evaluate needs a token condition");
    }
    const GmmComponent& want = target_component(target, requested.attribute());
    if (want.condition.concept_id() != requested.concept_id()) {
        throw std::invalid_argument(
            fmt::format("requested concept {} is not the target concept {}", requested.concept_id(),
                        want.condition.concept_id()));
    }

    const GmmSpec pool = adapted_spec(pretrain, target);
    const std::size_t first_target = pretrain.size();

    double loglik = 0.0;
    std::size_t attribute_hits = 0;
    std::size_t subject_hits = 0;
    for (const auto& x : samples) {
        loglik += gaussian_log_pdf(x, want.mean, want.covariance);

        double best = -std::numeric_limits<double>::infinity();
        int best_attr = -1;
        for (const auto& c : target.components()) {
            const double lp = std::log(c.weight) + gaussian_log_pdf(x, c.mean, c.covariance);
            if (lp > best) {
                best = lp;
                best_attr = c.condition.attribute();
            }
        }
        attribute_hits += best_attr == requested.attribute() ? 1 : 0;

        best = -std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < pool.size(); ++k) {
            const auto& c = pool.components()[k];
            const double lp = std::log(c.weight) + gaussian_log_pdf(x, c.mean, c.covariance);
            if (lp > best) {
                best = lp;
                best_k = k;
            }
        }
        subject_hits += best_k >= first_target ? 1 : 0;
    }

    const auto reference = sample_gaussian(want.mean, want.covariance, samples.size(), reference_seed);

    EvalReport r;
    const auto n = static_cast<double>(samples.size());
    r.subject_fidelity = loglik / n;
    r.attribute_fidelity = static_cast<double>(attribute_hits) / n;
    r.subject_rate = static_cast<double>(subject_hits) / n;
    r.energy_distance = energy_distance(samples, reference);
    r.n = samples.size();
    r.seed = reference_seed;
    return r;
}

double energy_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("energy_distance needs nonempty samples");
    }
    const Points pa = to_soa(a);
    const Points pb = to_soa(b);
    const double s_ab = cross_sum(pa.x.data(), pa.y.data(), a.size(), pb.x.data(), pb.y.data(), b.size());
    const double s_aa = self_sum(pa.x.data(), pa.y.data(), a.size());
    const double s_bb = self_sum(pb.x.data(), pb.y.data(), b.size());
    return std::max(0.0, energy_from_sums(s_ab, s_aa, s_bb, a.size(), b.size()));
}

PermutationTest energy_permutation_test(std::span<const Vec2> a, std::span<const Vec2> b, int permutations,
                                        std::uint64_t seed, int stop_at) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("permutation test needs nonempty samples");
    }
    if (permutations < 1) {
        throw std::invalid_argument("permutation test needs at least one permutation");
    }
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<Vec2> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    Points p = to_soa(pooled);
    const double total = self_sum(p.x.data(), p.y.data(), n + m);

    // With the pooled total fixed, each labelling needs only the two
    // within-group sums; the cross sum follows by subtraction.
    auto stat = [&](const Points& q) {
        const double s_aa = self_sum(q.x.data(), q.y.data(), n);
        const double s_bb = self_sum(q.x.data() + n, q.y.data() + n, m);
        const double s_ab = 0.5 * (total - s_aa - s_bb);
        return energy_from_sums(s_ab, s_aa, s_bb, n, m);
    };

    PermutationTest out;
    out.permutations = permutations;
    out.statistic = stat(p);
    RandomStream rs(seed);
    int at_least = 0;
    for (int k = 0; k < permutations; ++k) {
        for (std::size_t i = n + m - 1; i > 0; --i) {
            const std::size_t j = rs.below(i + 1);
            std::swap(p.x[i], p.x[j]);
            std::swap(p.y[i], p.y[j]);
        }
        ++out.evaluated;
        if (stat(p) >= out.statistic) {
            ++at_least;
            if (stop_at > 0 && at_least >= stop_at) {
                break;
            }
        }
    }
    out.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
    return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("spearman needs two equal-length series of length >= 2");
    }
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

EpsFn make_guided_eps_fn(const ModelPair& pair, const GuidanceConfig& cfg) {
    cfg.validate();
    const double lambda = cfg.lambda;
    const ParamVector& strong = pair.finetuned();
    auto finish = [lambda](const Vec2& weak, const Vec2& s) -> Vec2 {
        if (lambda == 1.0) {
            return s;
        }
        return combine({weak, s}, lambda);
    };
    switch (cfg.method) {
        case Method::cfg:
            return [&strong, finish](const Vec2& x, double sigma, const Condition& c) {
                const Vec2 w = forward(strong, x, sigma, Condition::null());
                return finish(w, forward(strong, x, sigma, c));
            };
        case Method::ag: {
            const ParamVector& base = pair.pretrained();
            return [&base, &strong, finish](const Vec2& x, double sigma, const Condition& c) {
                const Vec2 w = forward(base, x, sigma, c);
                return finish(w, forward(strong, x, sigma, c));
            };
        }
        case Method::pg: {
            auto weak = pair.interpolated(cfg.omega);
            return [weak, &strong, finish](const Vec2& x, double sigma, const Condition& c) {
                const Vec2 w = forward(*weak, x, sigma, Condition::null());
                return finish(w, forward(strong, x, sigma, c));
            };
        }
    }
    throw std::logic_error("unhandled guidance method");
}

EvalReport run_config(const ModelPair& pair, const GuidanceConfig& cfg, const EvalInputs& inputs) {
    const EpsFn fn = make_guided_eps_fn(pair, cfg);
    SampleOptions opts;
    opts.solver = inputs.solver;
    const SampleRun run = ode_sample(fn, inputs.schedule, inputs.samples, inputs.requested, inputs.seed, opts);
    EvalReport r = evaluate(run.samples, inputs.requested, inputs.target, inputs.pretrain, inputs.reference_seed);
    r.guidance = cfg;
    r.seed = inputs.seed;
    return r;
}

std::vector<double> SweepTable::values() const {
    std::vector<double> v;
    for (const auto& r : rows) {
        v.push_back(r.value);
    }
    return v;
}

std::vector<double> SweepTable::column(double EvalReport::*field) const {
    std::vector<double> v;
    for (const auto& r : rows) {
        v.push_back(r.report.*field);
    }
    return v;
}

SweepTable sweep_omega(const ModelPair& pair, double lambda, std::span<const double> grid, const EvalInputs& inputs) {
    check_grid(grid, "omega");
    if (grid.front() < 0.0 || grid.back() > 1.0) {
        throw std::invalid_argument("omega grid must lie in [0, 1]");
    }
    SweepTable t;
    t.swept = "omega";
    for (double w : grid) {
        const GuidanceConfig cfg{Method::pg, lambda, w};
        t.rows.push_back({w, run_config(pair, cfg, inputs)});
    }
    return t;
}

SweepTable sweep_lambda(const ModelPair& pair, Method method, double omega, std::span<const double> grid,
                        const EvalInputs& inputs) {
    check_grid(grid, "lambda");
    if (grid.front() < 1.0) {
        throw std::invalid_argument("lambda grid values must be >= 1");
    }
    SweepTable t;
    t.swept = "lambda";
    for (double l : grid) {
        const GuidanceConfig cfg{method, l, omega};
        t.rows.push_back({l, run_config(pair, cfg, inputs)});
    }
    return t;
}

double select_best_omega(const SweepTable& table) {
    if (table.rows.empty()) {
        throw std::invalid_argument("empty sweep table");
    }
    const SweepRow* best = &table.rows.front();
    for (const auto& r : table.rows) {
        if (r.report.subject_fidelity > best->report.subject_fidelity ||
            (r.report.subject_fidelity == best->report.subject_fidelity && r.value > best->value)) {
            best = &r;
        }
    }
    return best->value;
}

std::vector<double> default_omega_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) {
        g.push_back(i / 10.0);
    }
    return g;
}

}  // namespace pglab

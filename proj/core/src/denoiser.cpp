// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/denoiser.hpp"

#include "pglab/rng.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>

namespace pglab {

namespace {

thread_local std::uint64_t g_forward_count = 0;

// Weights are stored input-major (in x out) so the inner loop of the
// matrix-vector product runs over independent outputs. Each output then
// accumulates its inputs in a fixed order whether or not the loop is
// vectorized, which keeps results bitwise reproducible.
void dense_forward(const double* w, const double* b, int in, int out, const double* x, double* y) {
    for (int o = 0; o < out; ++o) {
        y[o] = b[o];
    }
    for (int i = 0; i < in; ++i) {
        const double xi = x[i];
        const double* row = w + static_cast<std::size_t>(i) * out;
        for (int o = 0; o < out; ++o) {
            y[o] += row[o] * xi;
        }
    }
}

inline double act(Activation a, double z) {
    if (a == Activation::tanh) {
        return std::tanh(z);
    }
    return z / (1.0 + std::exp(-z));
}

// Derivative from the pre-activation z and the activation value y.
inline double act_grad(Activation a, double z, double y) {
    if (a == Activation::tanh) {
        return 1.0 - y * y;
    }
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s + z * s * (1.0 - s);
}

void check_condition(const Architecture& arch, const Condition& cond) {
    if (cond.is_null()) {
        return;
    }
    if (cond.concept_id() < 0 || cond.concept_id() >= arch.concept_slots || cond.attribute() < 0 ||
        cond.attribute() >= arch.attributes) {
        throw ArchitectureError(fmt::format("condition {} is out of the embedding table range ({} concepts, {} attributes)",
                                            cond.to_string(), arch.concept_slots, arch.attributes));
    }
}

void write_features(const Architecture& arch, const ParamLayout& layout, std::span<const double> params,
                    const Vec2& x, double sigma, const Condition& cond, double* f) {
    const double c_in = 1.0 / std::sqrt(sigma * sigma + arch.sigma_data * arch.sigma_data);
    const double ls = std::log(sigma);
    f[0] = x.x() * c_in;
    f[1] = x.y() * c_in;
    f[2] = 0.25 * ls;
    int k = 3;
    double freq = 0.5;
    for (int j = 0; j < arch.sigma_features / 2; ++j) {
        f[k++] = std::sin(freq * ls);
        f[k++] = std::cos(freq * ls);
        freq *= 2.0;
    }
    double* code = f + k;
    const int E = arch.embedding_width;
    if (E == 0) {
        std::fill(code, code + arch.condition_width(), 0.0);
        if (cond.is_null()) {
            code[arch.concept_slots + arch.attributes] = 1.0;
        } else {
            code[cond.concept_id()] = 1.0;
            code[arch.concept_slots + cond.attribute()] = 1.0;
        }
        return;
    }
    if (cond.is_null()) {
        const double* row = params.data() + layout.null_row;
        std::copy(row, row + E, code);
    } else {
        const double* cr = params.data() + layout.concept_rows + static_cast<std::size_t>(cond.concept_id()) * E;
        const double* ar = params.data() + layout.attribute_rows + static_cast<std::size_t>(cond.attribute()) * E;
        for (int e = 0; e < E; ++e) {
            code[e] = cr[e] + ar[e];
        }
    }
}

// Per-thread activation storage: [features | z_1 | y_1 | ... | z_L(out)].
struct Tape {
    std::vector<double> buf;
    std::vector<std::size_t> z_at;
    std::vector<std::size_t> y_at;
};

Tape& tape_for(const ParamLayout& layout, int feature_width) {
    thread_local Tape tape;
    std::size_t need = static_cast<std::size_t>(feature_width);
    tape.z_at.resize(layout.layers.size());
    tape.y_at.resize(layout.layers.size());
    for (std::size_t l = 0; l < layout.layers.size(); ++l) {
        tape.z_at[l] = need;
        need += static_cast<std::size_t>(layout.layers[l].out);
        tape.y_at[l] = need;
        need += static_cast<std::size_t>(layout.layers[l].out);
    }
    if (tape.buf.size() < need) {
        tape.buf.resize(need);
    }
    return tape;
}

Vec2 run_forward(const Architecture& arch, const ParamLayout& layout, std::span<const double> params,
                 const Vec2& x, double sigma, const Condition& cond, Tape& tape) {
    double* base = tape.buf.data();
    write_features(arch, layout, params, x, sigma, cond, base);
    const double* in = base;
    const std::size_t L = layout.layers.size();
    for (std::size_t l = 0; l < L; ++l) {
        const auto& d = layout.layers[l];
        double* z = base + tape.z_at[l];
        double* y = base + tape.y_at[l];
        dense_forward(params.data() + d.weight, params.data() + d.bias, d.in, d.out, in, z);
        if (l + 1 < L) {
            for (int o = 0; o < d.out; ++o) {
                y[o] = act(arch.activation, z[o]);
            }
        } else {
            std::copy(z, z + d.out, y);
        }
        in = y;
    }
    ++g_forward_count;
    return {in[0], in[1]};
}

}  // namespace

std::string to_string(Activation a) {
    return a == Activation::tanh ? "tanh" : "silu";
}

Activation parse_activation(const std::string& s) {
    if (s == "tanh") {
        return Activation::tanh;
    }
    if (s == "silu") {
        return Activation::silu;
    }
    throw ArchitectureError(fmt::format("unknown activation '{}'", s));
}

void Architecture::validate() const {
    for (int w : hidden) {
        if (w < 1) {
            throw ArchitectureError("hidden widths must be at least 1");
        }
    }
    if (sigma_features < 0 || sigma_features % 2 != 0) {
        throw ArchitectureError("sigma_features must be a non-negative even number");
    }
    if (embedding_width < 0) {
        throw ArchitectureError("embedding_width must be non-negative");
    }
    if (concept_slots < 1 || attributes < 1) {
        throw ArchitectureError("embedding table needs at least one concept and one attribute");
    }
    if (!(sigma_data > 0.0)) {
        throw ArchitectureError("sigma_data must be positive");
    }
}

int Architecture::condition_width() const {
    return embedding_width > 0 ? embedding_width : concept_slots + attributes + 1;
}

int Architecture::feature_width() const {
    return kInputDim + 1 + sigma_features + condition_width();
}

std::size_t Architecture::embedding_parameter_count() const {
    if (embedding_width == 0) {
        return 0;
    }
    return static_cast<std::size_t>(concept_slots + attributes + 1) * static_cast<std::size_t>(embedding_width);
}

std::size_t Architecture::parameter_count() const {
    std::size_t n = embedding_parameter_count();
    int in = feature_width();
    for (int w : hidden) {
        n += static_cast<std::size_t>(in) * w + w;
        in = w;
    }
    n += static_cast<std::size_t>(in) * kOutputDim + kOutputDim;
    return n;
}

std::string Architecture::to_yaml() const {
    std::string widths;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        widths += (i ? ", " : "") + std::to_string(hidden[i]);
    }
    return fmt::format(
        "hidden: [{}]\nactivation: {}\nsigma_features: {}\nembedding_width: {}\nconcept_slots: {}\nattributes: "
        "{}\nsigma_data: {:.17g}\n",
        widths, to_string(activation), sigma_features, embedding_width, concept_slots, attributes, sigma_data);
}

Architecture Architecture::from_yaml(const std::string& text) {
    const YAML::Node n = YAML::Load(text);
    Architecture a;
    a.hidden = n["hidden"].as<std::vector<int>>();
    a.activation = parse_activation(n["activation"].as<std::string>());
    a.sigma_features = n["sigma_features"].as<int>();
    a.embedding_width = n["embedding_width"].as<int>();
    a.concept_slots = n["concept_slots"].as<int>();
    a.attributes = n["attributes"].as<int>();
    a.sigma_data = n["sigma_data"].as<double>();
    a.validate();
    return a;
}

ParamLayout ParamLayout::of(const Architecture& arch) {
    ParamLayout p;
    std::size_t at = 0;
    const auto E = static_cast<std::size_t>(arch.embedding_width);
    if (E > 0) {
        p.concept_rows = at;
        at += static_cast<std::size_t>(arch.concept_slots) * E;
        p.attribute_rows = at;
        at += static_cast<std::size_t>(arch.attributes) * E;
        p.null_row = at;
        at += E;
    }
    int in = arch.feature_width();
    auto add = [&](int out) {
        DenseLayer d;
        d.in = in;
        d.out = out;
        d.weight = at;
        at += static_cast<std::size_t>(in) * out;
        d.bias = at;
        at += static_cast<std::size_t>(out);
        p.layers.push_back(d);
        in = out;
    };
    for (int w : arch.hidden) {
        add(w);
    }
    add(Architecture::kOutputDim);
    p.total = at;
    return p;
}

ParamVector::ParamVector(Architecture arch, std::vector<double> values)
    : arch_(std::move(arch)), values_(std::move(values)) {
    arch_.validate();
    layout_ = ParamLayout::of(arch_);
    if (values_.size() != arch_.parameter_count()) {
        throw ArchitectureError(fmt::format("parameter vector has {} entries, architecture needs {}", values_.size(),
                                            arch_.parameter_count()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ArchitectureError(fmt::format("parameter {} is not finite", i));
        }
    }
}

ParamVector ParamVector::zeros(const Architecture& arch) {
    return ParamVector(arch, std::vector<double>(arch.parameter_count(), 0.0));
}

ParamVector init_params(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    const ParamLayout layout = ParamLayout::of(arch);
    std::vector<double> v(layout.total, 0.0);
    const RandomStream root(seed);

    RandomStream emb = root.split("embedding");
    for (std::size_t i = 0; i < arch.embedding_parameter_count(); ++i) {
        v[i] = 0.01 * emb.normal();
    }
    for (std::size_t l = 0; l < layout.layers.size(); ++l) {
        const auto& d = layout.layers[l];
        RandomStream rs = root.split("layer").split(l);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d.in));
        for (std::size_t k = 0; k < static_cast<std::size_t>(d.in) * d.out; ++k) {
            v[d.weight + k] = scale * rs.normal();
        }
    }
    return ParamVector(arch, std::move(v));
}

Vec2 forward(const Architecture& arch, std::span<const double> params, const Vec2& x, double sigma,
             const Condition& cond) {
    check_condition(arch, cond);
    const ParamLayout layout = ParamLayout::of(arch);
    if (params.size() != layout.total) {
        throw ArchitectureError("parameter span does not match the architecture");
    }
    Tape& tape = tape_for(layout, arch.feature_width());
    return run_forward(arch, layout, params, x, sigma, cond, tape);
}

Vec2 forward(const ParamVector& params, const Vec2& x, double sigma, const Condition& cond) {
    const Architecture& arch = params.arch();
    check_condition(arch, cond);
    Tape& tape = tape_for(params.layout(), arch.feature_width());
    return run_forward(arch, params.layout(), params.values(), x, sigma, cond, tape);
}

std::uint64_t forward_evaluations() {
    return g_forward_count;
}

LossAndGrad loss_and_grad(const Architecture& arch, std::span<const double> params,
                          std::span<const TrainingExample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("loss_and_grad needs a nonempty batch");
    }
    const ParamLayout layout = ParamLayout::of(arch);
    if (params.size() != layout.total) {
        throw ArchitectureError("parameter span does not match the architecture");
    }
    LossAndGrad out;
    out.grad.assign(layout.total, 0.0);
    double* g = out.grad.data();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Tape& tape = tape_for(layout, arch.feature_width());

    std::size_t max_width = static_cast<std::size_t>(arch.feature_width());
    for (const auto& d : layout.layers) {
        max_width = std::max(max_width, static_cast<std::size_t>(d.out));
    }
    std::vector<double> delta(max_width);
    std::vector<double> delta_in(max_width);

    const std::size_t L = layout.layers.size();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& ex = batch[b];
        if (!(ex.sigma > 0.0)) {
            throw std::invalid_argument(fmt::format("batch item {} has non-positive sigma", b));
        }
        check_condition(arch, ex.cond);
        const Vec2 xt = ex.x + ex.sigma * ex.noise;
        const Vec2 y = run_forward(arch, layout, params, xt, ex.sigma, ex.cond, tape);
        const Vec2 r = y - ex.noise;
        const double term = r.squaredNorm();
        if (!std::isfinite(term)) {
            throw std::runtime_error(fmt::format("non-finite loss at batch index {}", b));
        }
        loss_sum += term;

        delta[0] = 2.0 * r.x() * inv_n;
        delta[1] = 2.0 * r.y() * inv_n;
        const double* base = tape.buf.data();
        for (std::size_t l = L; l-- > 0;) {
            const auto& d = layout.layers[l];
            const double* in = l == 0 ? base : base + tape.y_at[l - 1];
            double* gw = g + d.weight;
            double* gb = g + d.bias;
            for (int o = 0; o < d.out; ++o) {
                gb[o] += delta[o];
            }
            for (int i = 0; i < d.in; ++i) {
                const double xi = in[i];
                double* row = gw + static_cast<std::size_t>(i) * d.out;
                for (int o = 0; o < d.out; ++o) {
                    row[o] += xi * delta[o];
                }
            }
            const double* w = params.data() + d.weight;
            for (int i = 0; i < d.in; ++i) {
                const double* row = w + static_cast<std::size_t>(i) * d.out;
                double s = 0.0;
                for (int o = 0; o < d.out; ++o) {
                    s += row[o] * delta[o];
                }
                delta_in[i] = s;
            }
            if (l > 0) {
                const double* z = base + tape.z_at[l - 1];
                const double* a = base + tape.y_at[l - 1];
                for (int i = 0; i < d.in; ++i) {
                    delta[i] = delta_in[i] * act_grad(arch.activation, z[i], a[i]);
                }
            }
        }
        // delta_in now holds d loss / d features.
        const int E = arch.embedding_width;
        if (E > 0) {
            const double* dcode = delta_in.data() + (arch.feature_width() - E);
            if (ex.cond.is_null()) {
                double* gr = g + layout.null_row;
                for (int e = 0; e < E; ++e) {
                    gr[e] += dcode[e];
                }
            } else {
                double* gc = g + layout.concept_rows + static_cast<std::size_t>(ex.cond.concept_id()) * E;
                double* ga = g + layout.attribute_rows + static_cast<std::size_t>(ex.cond.attribute()) * E;
                for (int e = 0; e < E; ++e) {
                    gc[e] += dcode[e];
                    ga[e] += dcode[e];
                }
            }
        }
    }
    out.loss = loss_sum * inv_n;
    return out;
}

LossAndGrad loss_and_grad(const ParamVector& params, std::span<const TrainingExample> batch) {
    return loss_and_grad(params.arch(), params.values(), batch);
}

double batch_loss(const ParamVector& params, std::span<const TrainingExample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("batch_loss needs a nonempty batch");
    }
    double s = 0.0;
    for (const auto& ex : batch) {
        const Vec2 y = forward(params, ex.x + ex.sigma * ex.noise, ex.sigma, ex.cond);
        s += (y - ex.noise).squaredNorm();
    }
    return s / static_cast<double>(batch.size());
}

ParamVector interpolate(const ParamVector& theta, const ParamVector& theta_prime, double omega) {
    if (!(theta.arch() == theta_prime.arch())) {
        throw ArchitectureError("cannot interpolate parameters of different architectures");
    }
    if (!(omega >= 0.0 && omega <= 1.0)) {
        throw std::invalid_argument(fmt::format("interpolation scale {} outside [0, 1]", omega));
    }
    const auto a = theta.values();
    const auto b = theta_prime.values();
    std::vector<double> v(a.size());
    const double keep = 1.0 - omega;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = omega * b[i] + keep * a[i];
    }
    return ParamVector(theta.arch(), std::move(v));
}

LowRankAdapter LowRankAdapter::init(const Architecture& arch, int rank, std::uint64_t seed) {
    if (rank < 1) {
        throw ArchitectureError("adapter rank must be at least 1");
    }
    arch.validate();
    LowRankAdapter ad;
    ad.arch_ = arch;
    ad.layout_ = ParamLayout::of(arch);
    ad.rank_ = rank;
    std::size_t at = 0;
    for (const auto& d : ad.layout_.layers) {
        Factor f;
        f.a = at;
        at += static_cast<std::size_t>(rank) * d.in;
        f.b = at;
        at += static_cast<std::size_t>(d.out) * rank;
        ad.factors_.push_back(f);
    }
    ad.values_.assign(at, 0.0);
    const RandomStream root(seed);
    for (std::size_t l = 0; l < ad.layout_.layers.size(); ++l) {
        const auto& d = ad.layout_.layers[l];
        RandomStream rs = root.split(l);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d.in));
        for (std::size_t k = 0; k < static_cast<std::size_t>(rank) * d.in; ++k) {
            ad.values_[ad.factors_[l].a + k] = scale * rs.normal();
        }
    }
    return ad;
}

ParamVector LowRankAdapter::materialize(const ParamVector& base) const {
    if (!(base.arch() == arch_)) {
        throw ArchitectureError("adapter and base parameters have different architectures");
    }
    std::vector<double> v = base.to_vector();
    for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
        const auto& d = layout_.layers[l];
        const double* A = values_.data() + factors_[l].a;  // r x in
        const double* B = values_.data() + factors_[l].b;  // out x r
        for (int i = 0; i < d.in; ++i) {
            for (int o = 0; o < d.out; ++o) {
                double s = 0.0;
                for (int r = 0; r < rank_; ++r) {
                    s += B[static_cast<std::size_t>(o) * rank_ + r] * A[static_cast<std::size_t>(r) * d.in + i];
                }
                v[d.weight + static_cast<std::size_t>(i) * d.out + o] += s;
            }
        }
    }
    return ParamVector(arch_, std::move(v));
}

std::vector<double> LowRankAdapter::chain_gradient(std::span<const double> full_grad) const {
    if (full_grad.size() != layout_.total) {
        throw ArchitectureError("gradient does not match the adapter's architecture");
    }
    std::vector<double> g(values_.size(), 0.0);
    for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
        const auto& d = layout_.layers[l];
        const double* G = full_grad.data() + d.weight;  // in x out
        const double* A = values_.data() + factors_[l].a;
        const double* B = values_.data() + factors_[l].b;
        double* gA = g.data() + factors_[l].a;
        double* gB = g.data() + factors_[l].b;
        // dW[o][i] = G[i][o];  dB = dW A^T,  dA = B^T dW.
        for (int o = 0; o < d.out; ++o) {
            for (int r = 0; r < rank_; ++r) {
                double s = 0.0;
                for (int i = 0; i < d.in; ++i) {
                    s += G[static_cast<std::size_t>(i) * d.out + o] * A[static_cast<std::size_t>(r) * d.in + i];
                }
                gB[static_cast<std::size_t>(o) * rank_ + r] = s;
            }
        }
        for (int r = 0; r < rank_; ++r) {
            for (int i = 0; i < d.in; ++i) {
                double s = 0.0;
                for (int o = 0; o < d.out; ++o) {
                    s += B[static_cast<std::size_t>(o) * rank_ + r] * G[static_cast<std::size_t>(i) * d.out + o];
                }
                gA[static_cast<std::size_t>(r) * d.in + i] = s;
            }
        }
    }
    return g;
}

}  // namespace pglab

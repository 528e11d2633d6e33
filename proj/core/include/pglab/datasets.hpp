// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pglab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Conditioning token: either the null token or a (concept, attribute) pair.
class Condition {
public:
    constexpr Condition() = default;

    static constexpr Condition null() { return Condition{}; }
    static constexpr Condition token(int concept_id, int attribute) {
        Condition c;
        c.concept_ = concept_id;
        c.attribute_ = attribute;
        return c;
    }

    [[nodiscard]] constexpr bool is_null() const { return concept_ < 0; }
    [[nodiscard]] constexpr int concept_id() const { return concept_; }
    [[nodiscard]] constexpr int attribute() const { return attribute_; }

    friend constexpr bool operator==(const Condition&, const Condition&) = default;

    [[nodiscard]] std::string to_string() const;

private:
    int concept_ = -1;
    int attribute_ = -1;
};

struct GmmComponent {
    double weight = 0.0;
    Vec2 mean = Vec2::Zero();
    Mat2 covariance = Mat2::Identity();
    Condition condition;
};

/// Conditional Gaussian mixture in two dimensions. Constructed only through
/// GmmSpec::create, which enforces positive normalized weights and SPD
/// covariances.
class GmmSpec {
public:
    static GmmSpec create(std::vector<GmmComponent> components);

    [[nodiscard]] const std::vector<GmmComponent>& components() const { return components_; }
    [[nodiscard]] std::size_t size() const { return components_.size(); }

    /// Indices of components whose condition matches `cond`; null matches all.
    [[nodiscard]] std::vector<std::size_t> matching(const Condition& cond) const;

    /// Weighted mean of component means.
    [[nodiscard]] Vec2 mean() const;

    [[nodiscard]] std::string to_yaml() const;

private:
    std::vector<GmmComponent> components_;
};

struct LabeledSamples {
    std::vector<Vec2> points;
    std::vector<Condition> conditions;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Geometry of the toy world: generic concepts, attribute translations and
/// the novel target concept.
struct DataConfig {
    std::vector<Vec2> concept_means{Vec2(-3.0, 0.0), Vec2(3.0, 0.0)};
    std::vector<Vec2> attribute_shifts{Vec2(0.0, 0.0), Vec2(0.0, 4.0)};
    Mat2 covariance = Mat2::Identity();

    int target_concept = 2;
    Vec2 target_mean = Vec2(0.0, -3.0);
    Mat2 target_covariance = (Mat2() << 0.35, 0.1, 0.1, 0.3).finished();
    int target_points = 6;
    int base_attribute = 0;

    [[nodiscard]] int num_concepts() const { return static_cast<int>(concept_means.size()); }
    [[nodiscard]] int num_attributes() const { return static_cast<int>(attribute_shifts.size()); }
    /// Size of the concept id space; covers the pretrain concepts and the target id.
    [[nodiscard]] int concept_slots() const { return std::max(num_concepts(), target_concept + 1); }
};

class DataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

GmmSpec make_pretrain_spec(const DataConfig& config);
GmmSpec make_target_spec(const DataConfig& config);

/// Component of the target spec used to draw fine-tuning data.
const GmmComponent& target_component(const GmmSpec& target, int attribute);

LabeledSamples sample_dataset(const GmmSpec& spec, std::size_t n, std::uint64_t seed,
                              const std::optional<Condition>& filter = std::nullopt);

/// Draws from a single Gaussian; used for reference sets in evaluation.
std::vector<Vec2> sample_gaussian(const Vec2& mean, const Mat2& covariance, std::size_t n,
                                  std::uint64_t seed);

/// Exact noise prediction -sigma * grad log p_sigma(x | cond), where p_sigma
/// convolves every matching component with N(0, sigma^2 I).
Vec2 analytic_eps(const GmmSpec& spec, const Vec2& x, double sigma, const Condition& cond);

/// log p_sigma(x | cond) of the same noisy mixture.
double noisy_log_density(const GmmSpec& spec, const Vec2& x, double sigma, const Condition& cond);

double gaussian_log_pdf(const Vec2& x, const Vec2& mean, const Mat2& covariance);

double mahalanobis(const Vec2& x, const Vec2& mean, const Mat2& covariance);

}  // namespace pglab

// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace pglab {

/// SplitMix64 finalizer. Used both as the stream generator and to derive
/// child keys, so every random draw in the project is a pure function of
/// (key, counter).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Counter-based random stream. Splitting never advances the parent, so
/// per-sample streams can be handed out in any order and still reproduce.
class RandomStream {
public:
    constexpr explicit RandomStream(std::uint64_t key) noexcept : key_(mix64(key)) {}

    [[nodiscard]] constexpr RandomStream split(std::uint64_t index) const noexcept {
        return RandomStream(key_ ^ mix64(index + 0x632BE59BD9B4E019ULL), Raw{});
    }
    [[nodiscard]] constexpr RandomStream split(std::string_view name) const noexcept {
        return split(hash_name(name));
    }

    constexpr std::uint64_t next_u64() noexcept { return mix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; both variates are used.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's multiply-shift; bias is < n / 2^64, irrelevant here.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
    struct Raw {};
    constexpr RandomStream(std::uint64_t key, Raw) noexcept : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pglab

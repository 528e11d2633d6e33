// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pglab/denoiser.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace pglab {

/// Training provenance kept next to a checkpoint in a `.meta` text file.
struct CheckpointMeta {
    std::uint64_t seed = 0;
    int steps = 0;
    std::string data_hash;
    std::string mode;

    friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
    ParamVector params;
    CheckpointMeta meta;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: "PGLABCKP", u32 version, u32 n + n bytes of architecture
/// YAML, u64 count, count little-endian float64 values.
std::string encode_checkpoint(const ParamVector& params);
ParamVector decode_checkpoint(const std::string& bytes);

std::string encode_meta(const CheckpointMeta& meta);
CheckpointMeta decode_meta(const std::string& text);

std::filesystem::path meta_path(const std::filesystem::path& checkpoint);

void save_checkpoint(const std::filesystem::path& path, const ParamVector& params, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pglab

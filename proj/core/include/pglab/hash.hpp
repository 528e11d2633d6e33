// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pglab {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's full contents. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Incremental hasher for keys built from several parts.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    /// Appends a length-prefixed field, so ("ab","c") and ("a","bc") differ.
    Sha256& field(std::string_view data);
    std::string hex();

private:
    void* ctx_;
};

}  // namespace pglab

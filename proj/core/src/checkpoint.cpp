// Copyright 2026 The pglab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pglab/checkpoint.hpp"

#include "pglab/io.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <bit>
#include <cstring>
#include <string_view>

namespace pglab {

namespace {

constexpr std::string_view kMagic = "PGLABCKP";

template <class U>
void put(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <class U>
    U take() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
        }
        at_ += sizeof(U);
        return v;
    }

    std::string take_bytes(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(at_, n);
        at_ += n;
        return s;
    }

    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - at_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - at_ < n) {
            throw CheckpointError("checkpoint is truncated");
        }
    }

    const std::string& bytes_;
    std::size_t at_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParamVector& params) {
    const std::string arch = params.arch().to_yaml();
    std::string out(kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.size()));
    out += arch;
    put<std::uint64_t>(out, params.size());
    for (double v : params.values()) {
        put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

ParamVector decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.take_bytes(kMagic.size()) != kMagic) {
        throw CheckpointError("not a checkpoint (bad magic)");
    }
    const auto version = r.take<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw CheckpointError(fmt::format("unsupported checkpoint version {}", version));
    }
    const auto arch_len = r.take<std::uint32_t>();
    Architecture arch;
    try {
        arch = Architecture::from_yaml(r.take_bytes(arch_len));
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(fmt::format("bad architecture header: {}", e.what()));
    }
    const auto count = r.take<std::uint64_t>();
    if (count != arch.parameter_count()) {
        throw CheckpointError(
            fmt::format("parameter count {} does not match architecture ({})", count, arch.parameter_count()));
    }
    if (r.remaining() != count * 8) {
        throw CheckpointError("checkpoint payload size mismatch");
    }
    std::vector<double> values(count);
    for (auto& v : values) {
        v = std::bit_cast<double>(r.take<std::uint64_t>());
    }
    try {
        return ParamVector(arch, std::move(values));
    } catch (const std::exception& e) {
        throw CheckpointError(fmt::format("invalid parameters: {}", e.what()));
    }
}

std::string encode_meta(const CheckpointMeta& m) {
    return fmt::format("seed: {}\nsteps: {}\ndata_hash: \"{}\"\nmode: \"{}\"\n", m.seed, m.steps, m.data_hash, m.mode);
}

CheckpointMeta decode_meta(const std::string& text) {
    try {
        const YAML::Node n = YAML::Load(text);
        CheckpointMeta m;
        m.seed = n["seed"].as<std::uint64_t>();
        m.steps = n["steps"].as<int>();
        m.data_hash = n["data_hash"].as<std::string>();
        m.mode = n["mode"].as<std::string>();
        return m;
    } catch (const YAML::Exception& e) {
        throw CheckpointError(fmt::format("bad checkpoint sidecar: {}", e.msg));
    }
}

std::filesystem::path meta_path(const std::filesystem::path& checkpoint) {
    std::filesystem::path p = checkpoint;
    p += ".meta";
    return p;
}

void save_checkpoint(const std::filesystem::path& path, const ParamVector& params, const CheckpointMeta& meta) {
    write_file_atomic(path, encode_checkpoint(params));
    write_file_atomic(meta_path(path), encode_meta(meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::string bytes;
    std::string meta;
    try {
        bytes = read_file(path);
        meta = read_file(meta_path(path));
    } catch (const std::runtime_error& e) {
        throw CheckpointError(e.what());
    }
    return {decode_checkpoint(bytes), decode_meta(meta)};
}

}  // namespace pglab

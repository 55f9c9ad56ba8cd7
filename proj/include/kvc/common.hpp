// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kvc {

/// Error categories. The CLI maps these onto process exit codes.
enum class ErrorCode {
    InvalidArgument,     // bad input or usage (exit 2)
    MissingArtifact,     // file not found (exit 3)
    Incompatible,        // stale fingerprint, version mismatch (exit 4)
    Malformed,           // corrupted or truncated container
    Overflow,            // position beyond max_position
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), m_code(code) {}
    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

#define KVC_CHECK(cond, code, msg)                                    \
    do {                                                              \
        if (!(cond)) {                                                \
            throw ::kvc::Error((code), (msg));                        \
        }                                                             \
    } while (0)

/// SHA-256 digest used for model, guidance and corpus fingerprints.
using Digest = std::array<std::uint8_t, 32>;

class Hasher {
public:
    Hasher();
    ~Hasher();
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;

    Hasher& update(const void* data, std::size_t size);
    Hasher& update(std::string_view text) { return update(text.data(), text.size()); }
    template <typename T>
    Hasher& update_pod(const T& value) {
        return update(&value, sizeof(T));
    }
    Digest finish();

private:
    void* m_ctx;
};

Digest sha256(std::string_view text);
std::string to_hex(const Digest& digest);

/// Deterministic random helpers on top of mt19937_64. The standard
/// distributions are implementation-defined, so anything that feeds a
/// byte-reproducible artifact goes through these instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : m_engine(seed) {}

    std::uint64_t next() { return m_engine(); }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

    /// Uniform float in [lo, hi).
    float uniform(float lo, float hi) {
        return static_cast<float>(lo + (hi - lo) * uniform());
    }

    /// Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// `count` distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample(std::size_t n, std::size_t count);

private:
    std::mt19937_64 m_engine;
};

// Little-endian binary helpers shared by the weight, cache and index containers.
class BinaryWriter {
public:
    void bytes(const void* data, std::size_t size);
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32s(std::span<const float> values);
    void u32s(std::span<const std::uint32_t> values);
    const std::vector<std::uint8_t>& buffer() const { return m_buf; }
    void write_file(const std::string& path) const;

private:
    std::vector<std::uint8_t> m_buf;
};

class BinaryReader {
public:
    explicit BinaryReader(std::vector<std::uint8_t> data) : m_data(std::move(data)) {}
    static BinaryReader from_file(const std::string& path);

    void bytes(void* out, std::size_t size);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    void f32s(std::span<float> out);
    void u32s(std::span<std::uint32_t> out);
    std::size_t remaining() const { return m_data.size() - m_pos; }

private:
    std::vector<std::uint8_t> m_data;
    std::size_t m_pos = 0;
};

}  // namespace kvc

// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/common.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <limits>

static_assert(std::endian::native == std::endian::little, "containers assume a little-endian host");

namespace kvc {

Hasher::Hasher() : m_ctx(EVP_MD_CTX_new()) {
    KVC_CHECK(m_ctx != nullptr, ErrorCode::Internal, "EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(m_ctx), EVP_sha256(), nullptr);
}

Hasher::~Hasher() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(m_ctx)); }

Hasher& Hasher::update(const void* data, std::size_t size) {
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(m_ctx), data, size);
    return *this;
}

Digest Hasher::finish() {
    Digest out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(m_ctx), out.data(), &len);
    return out;
}

Digest sha256(std::string_view text) { return Hasher().update(text).finish(); }

std::string to_hex(const Digest& digest) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : digest) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xF]);
    }
    return out;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    KVC_CHECK(bound > 0, ErrorCode::InvalidArgument, "Rng::below requires a positive bound");
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = m_engine();
    } while (x >= limit);
    return x % bound;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> Rng::sample(std::size_t n, std::size_t count) {
    KVC_CHECK(count <= n, ErrorCode::InvalidArgument, "cannot sample more items than available");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

void BinaryWriter::bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    m_buf.insert(m_buf.end(), p, p + size);
}

void BinaryWriter::u32(std::uint32_t v) { bytes(&v, sizeof v); }
void BinaryWriter::u64(std::uint64_t v) { bytes(&v, sizeof v); }
void BinaryWriter::f32s(std::span<const float> values) { bytes(values.data(), values.size_bytes()); }
void BinaryWriter::u32s(std::span<const std::uint32_t> values) {
    bytes(values.data(), values.size_bytes());
}

void BinaryWriter::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    KVC_CHECK(out.good(), ErrorCode::MissingArtifact, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(m_buf.data()), static_cast<std::streamsize>(m_buf.size()));
    KVC_CHECK(out.good(), ErrorCode::Internal, "write failed: " + path);
}

BinaryReader BinaryReader::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    KVC_CHECK(in.good(), ErrorCode::MissingArtifact, "file not found: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return BinaryReader(std::move(data));
}

void BinaryReader::bytes(void* out, std::size_t size) {
    KVC_CHECK(size <= remaining(), ErrorCode::Malformed, "unexpected end of container");
    std::memcpy(out, m_data.data() + m_pos, size);
    m_pos += size;
}

std::uint8_t BinaryReader::u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
}

std::uint32_t BinaryReader::u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
}

std::uint64_t BinaryReader::u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
}

void BinaryReader::f32s(std::span<float> out) { bytes(out.data(), out.size_bytes()); }
void BinaryReader::u32s(std::span<std::uint32_t> out) { bytes(out.data(), out.size_bytes()); }

}  // namespace kvc

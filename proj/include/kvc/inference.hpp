// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kvc/model.hpp"
#include "kvc/tensor.hpp"
#include "kvc/vocabulary.hpp"

namespace kvc {

/// One layer of cached keys/values. Keys are stored unrotated; rotary is applied at
/// attention time from `positions`, so survivors of compression can be renumbered.
struct LayerCache {
    Matrix keys;    // [len x d]
    Matrix values;  // [len x d]
    std::vector<std::uint32_t> positions;

    std::size_t size() const { return positions.size(); }
};

struct KvCache {
    std::vector<LayerCache> layers;

    static KvCache empty(const ModelConfig& config);

    /// Row count shared by all layers.
    std::size_t length() const { return layers.empty() ? 0 : layers.front().size(); }

    /// First position a new token may take.
    std::uint32_t next_position() const;

    /// Throws Internal if layer lengths disagree or positions are not strictly increasing.
    void validate() const;

    /// Renumbers every layer to positions start, start+1, ...
    void assign_contiguous_positions(std::uint32_t start = 0);
};

/// Post-softmax attention rows of the observer tokens.
///
/// weights[layer][head] is [observer_count x columns]; column j is cache row j after the
/// prefill that produced the capture, so context columns come first and the observer
/// tokens themselves sit at [observer_begin, observer_begin + observer_count).
struct AttentionCapture {
    std::size_t observer_begin = 0;
    std::size_t observer_count = 0;
    std::size_t columns = 0;
    std::vector<std::vector<Matrix>> weights;
    /// Rotated query vectors of the observer rows, [observer_count x head_dim] per layer/head.
    /// Filled only when requested.
    std::vector<std::vector<Matrix>> queries;
};

struct PrefillOptions {
    /// Observer rows, as offsets into the tokens of this call: [observer_begin, observer_end).
    std::size_t observer_begin = 0;
    std::size_t observer_end = 0;
    bool capture_queries = false;
};

struct PrefillResult {
    std::vector<float> logits;  // next-token logits after the last token of the call
    std::optional<AttentionCapture> capture;
};

/// Appends `tokens` at positions start_position, start_position + 1, ... to `cache`.
/// start_position must exceed the last cached position; overflow past max_position throws.
PrefillResult prefill(const Model& model, KvCache& cache, std::span<const TokenId> tokens,
                      std::uint32_t start_position, const PrefillOptions& options = {});

/// Convenience overload continuing at cache.next_position().
PrefillResult prefill(const Model& model, KvCache& cache, std::span<const TokenId> tokens,
                      const PrefillOptions& options = {});

std::vector<float> decode_step(const Model& model, KvCache& cache, TokenId token);

struct GenerationParams {
    std::size_t max_new_tokens = 16;
    std::vector<TokenId> stop_tokens;
};

/// Lowest id among the maximal logits.
TokenId argmax(std::span<const float> logits);

/// Greedy decoding after prefilling `prompt` on top of `cache`. The stop token, if hit,
/// is not included in the output.
TokenSequence generate_greedy(const Model& model, KvCache& cache, const TokenSequence& prompt,
                              const GenerationParams& params);

/// Rotates every head of `vec` ([n_heads x head_dim]) to `position`; no-op without rotary.
void apply_rotary(const Model& model, std::span<float> vec, std::uint32_t position);

/// exp() used by the attention softmax; vectorizable, ~2 ulp on [-87, 88].
float attention_exp(float x);

}  // namespace kvc

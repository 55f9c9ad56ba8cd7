// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kvc/common.hpp"
#include "kvc/inference.hpp"
#include "kvc/model.hpp"
#include "kvc/vocabulary.hpp"

namespace kvc {

/// Split of a context of n tokens into s chunks of m = ceil(n/s) tokens.
struct ChunkPlan {
    std::size_t total_len = 0;
    std::size_t segment_count = 0;
    std::size_t chunk_len = 0;
    std::vector<std::pair<std::size_t, std::size_t>> boundaries;  // [start, end)
    std::vector<std::string> warnings;
};

/// Throws InvalidArgument for n == 0 or s == 0. s > n degrades to one-token chunks
/// and records a warning.
ChunkPlan plan_chunks(std::size_t n, std::size_t s);

enum class GuidanceKind : std::uint8_t { ZeroShot, FewShot, FewShotPlusQuery };

struct QaExample {
    std::string question;
    std::string answer;
};

/// Task conditioning text appended after each chunk during compression.
struct GuidancePrompt {
    GuidanceKind kind = GuidanceKind::ZeroShot;
    std::string task_description = "answer factual questions about this corpus";
    std::vector<QaExample> examples;
    std::optional<std::string> query;

    /// ZeroShot: no examples, no query. FewShotPlusQuery: query present.
    void validate() const;

    /// "<sep> task : ... question : ... answer : ... [question : <query>]"
    std::string render() const;

    Digest fingerprint() const;
};

const char* to_string(GuidanceKind kind);
GuidanceKind guidance_kind_from_string(const std::string& name);

enum class BudgetSchedule : std::uint8_t { Proportional, Flat };

struct CompressionBudget {
    std::size_t target_len = 512;
    BudgetSchedule schedule = BudgetSchedule::Proportional;
};

/// Survivors allowed after iteration i (1-based) of a plan.
std::size_t iteration_budget(const CompressionBudget& budget, const ChunkPlan& plan, std::size_t i);

enum class HeadAggregation : std::uint8_t { Mean };
enum class RowAggregation : std::uint8_t { Mean };

struct SelectionPolicy {
    HeadAggregation heads = HeadAggregation::Mean;
    RowAggregation rows = RowAggregation::Mean;
};

enum class CompressionMethod : std::uint8_t { Iterative, Oracle, StreamingLlm, SnapKv, ExpectedAttention };

struct CompressionMeta {
    Digest model_fingerprint{};
    Digest guidance_fingerprint{};
    Digest corpus_fingerprint{};
    std::uint32_t n = 0;
    std::uint32_t k = 0;
    std::uint32_t s = 0;
    BudgetSchedule schedule = BudgetSchedule::Proportional;
    CompressionMethod method = CompressionMethod::Iterative;
};

/// Compressed cache: survivors sit at positions 0..len-1 in every layer, and
/// kept[l] lists their original context positions.
struct CompressedCache {
    KvCache cache;
    std::vector<std::vector<std::uint32_t>> kept;
    CompressionMeta meta;

    std::size_t length() const { return cache.length(); }
};

/// SHA-256 over the token ids; used as the corpus fingerprint of a context.
Digest fingerprint_tokens(std::span<const TokenId> ids);

/// Per-layer candidate scores, averaged over heads and observer rows.
/// Candidates are capture columns; guidance columns must not be passed.
std::vector<std::vector<double>> score_tokens(const AttentionCapture& capture, const SelectionPolicy& policy,
                                              std::span<const std::size_t> candidate_columns);

/// Indices of the r highest scores, ties toward the lower index, sorted ascending.
std::vector<std::size_t> select_top(std::span<const double> scores, std::size_t r);

CompressedCache compress_iterative(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                   const GuidancePrompt& guidance, const CompressionBudget& budget,
                                   const ChunkPlan& plan, const SelectionPolicy& policy = {});

/// Single-pass referee: one prefill of [context; guidance], one full sort per layer.
CompressedCache compress_oracle(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                const GuidancePrompt& guidance, const CompressionBudget& budget,
                                const SelectionPolicy& policy = {});

/// Keeps the first `sink` and last `recent` positions.
CompressedCache compress_streaming_llm(const Model& model, const TokenSequence& context, std::size_t sink,
                                       std::size_t recent);

/// The last `window` context tokens observe the rest; scores are max-pooled along
/// position over pool_width columns.
CompressedCache compress_snapkv_agnostic(const Model& model, const TokenSequence& context, std::size_t window,
                                         const CompressionBudget& budget, std::size_t pool_width);

/// Gaussian surrogate for the attention that future queries would pay each key.
CompressedCache compress_expected_attention(const Model& model, const TokenSequence& context,
                                            const CompressionBudget& budget, std::size_t sample_size);

/// Per-layer expected-attention scores (head mean) for the keys of `cache`, given the
/// rotated query samples of each layer/head ([samples x head_dim]).
std::vector<std::vector<double>> expected_attention_scores(const Model& model, const KvCache& cache,
                                                           const std::vector<std::vector<Matrix>>& queries,
                                                           std::size_t columns);

/// Total compression calls made by this process.
std::uint64_t compression_calls();
void reset_compression_calls();

/// "<sep> question : {question} answer :"
std::string question_prompt(const std::string& question);

/// Greedy answer on a private copy of the cache. Throws Incompatible when the cache
/// was built by a different model.
TokenSequence answer_with_cache(const Model& model, const Vocabulary& vocab, const CompressedCache& cc,
                                const std::string& question, const GenerationParams& params);

/// Reference answer from the uncompressed context.
TokenSequence answer_full_context(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                  const std::string& question, const GenerationParams& params);

inline constexpr std::uint32_t kCacheVersion = 1;

void save_cache(const CompressedCache& cc, const std::string& path);
std::vector<std::uint8_t> serialize_cache(const CompressedCache& cc);

/// Throws MissingArtifact, Malformed (truncated or inconsistent payload) or
/// Incompatible (version, shape or model mismatch when `model` is given).
CompressedCache load_cache(const std::string& path, const Model* model = nullptr);

struct Retention {
    double layer0 = 0.0;
    std::vector<double> per_layer;
};

/// Fraction of gold positions present among the kept positions. An empty gold set
/// counts as fully retained.
Retention retention(const CompressedCache& cc, std::span<const std::uint32_t> gold_positions);

}  // namespace kvc

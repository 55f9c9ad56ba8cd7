// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kvc/common.hpp"
#include "kvc/corpus.hpp"
#include "kvc/vocabulary.hpp"

namespace kvc {

/// Lexical features of a text: "w:<word>" for every lowercased word plus
/// "g:<abc>" for every character trigram of "#word#".
std::vector<std::string> lexical_features(const std::string& text);

/// TF-IDF vectors of a chunk collection, L2-normalized, stored as CSR rows.
struct ChunkIndex {
    std::vector<std::string> terms;  // sorted
    std::vector<std::uint32_t> df;
    std::vector<float> idf;
    std::vector<std::uint32_t> row_ptr;  // N + 1 entries
    std::vector<std::uint32_t> cols;
    std::vector<float> vals;
    Digest vocab_fingerprint{};
    Digest corpus_fingerprint{};

    std::size_t size() const { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }
    /// Term id or -1.
    std::int64_t term_id(const std::string& term) const;
};

/// idf = ln(1 + N / (1 + df)). Throws InvalidArgument on an empty collection.
ChunkIndex index_chunks(const std::vector<std::string>& texts, const Digest& vocab_fingerprint = {});
/// Also records the bundle's corpus fingerprint.
ChunkIndex index_chunks(const CorpusBundle& bundle);

struct RetrievalResult {
    std::vector<std::pair<std::size_t, double>> ranked;  // (chunk id, cosine)
    bool no_known_terms = false;

    std::vector<std::size_t> ids(std::size_t limit = SIZE_MAX) const;
};

/// Cosine ranking, ties toward the lower chunk id.
RetrievalResult retrieve(const ChunkIndex& index, const std::string& query, std::size_t top_k);

/// Gold chunks first (in the given order), then the remaining ids ascending.
RetrievalResult oracle_ranking(std::span<const std::size_t> gold, std::size_t chunk_count);

/// Number of whole chunks that fit: floor(budget / 256).
std::size_t chunks_in_budget(std::size_t budget_tokens);

/// Concatenated tokens of the first floor(budget/256) ranked chunks. Throws for budget < 256.
TokenSequence assemble_context(const RetrievalResult& result, const std::vector<ChunkDoc>& chunks,
                               std::size_t budget_tokens);

/// |prefix ∩ gold| / |gold|. Throws on an empty gold set.
double evidence_recall(std::span<const std::size_t> retrieved_prefix, std::span<const std::size_t> gold);

inline constexpr std::uint32_t kIndexVersion = 1;

void save_index(const ChunkIndex& index, const std::string& path);

/// Throws MissingArtifact, Malformed, or Incompatible when the version or the
/// expected vocabulary fingerprint differs.
ChunkIndex load_index(const std::string& path, const Digest* expected_vocab = nullptr);

}  // namespace kvc

// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kvc {

namespace {

constexpr char kIndexMagic[4] = {'K', 'V', 'C', 'I'};

std::map<std::uint32_t, double> weigh(const ChunkIndex& index, const std::string& text) {
    std::map<std::uint32_t, double> tf;
    for (const auto& f : lexical_features(text)) {
        const auto id = index.term_id(f);
        if (id >= 0) tf[static_cast<std::uint32_t>(id)] += 1.0;
    }
    double norm = 0.0;
    for (auto& [t, w] : tf) {
        w *= index.idf[t];
        norm += w * w;
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (auto& kv : tf) kv.second /= norm;
    }
    return tf;
}

}  // namespace

std::vector<std::string> lexical_features(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& word : split_whitespace(to_lower(text))) {
        out.push_back("w:" + word);
        const std::string padded = "#" + word + "#";
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) out.push_back("g:" + padded.substr(i, 3));
    }
    return out;
}

std::int64_t ChunkIndex::term_id(const std::string& term) const {
    auto it = std::lower_bound(terms.begin(), terms.end(), term);
    if (it == terms.end() || *it != term) return -1;
    return it - terms.begin();
}

ChunkIndex index_chunks(const std::vector<std::string>& texts, const Digest& vocab_fingerprint) {
    KVC_CHECK(!texts.empty(), ErrorCode::InvalidArgument, "cannot index an empty corpus");
    ChunkIndex index;
    index.vocab_fingerprint = vocab_fingerprint;

    std::vector<std::map<std::string, std::uint32_t>> counts(texts.size());
    std::map<std::string, std::uint32_t> df;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        for (const auto& f : lexical_features(texts[i])) counts[i][f] += 1;
        for (const auto& kv : counts[i]) df[kv.first] += 1;
    }
    const double n = static_cast<double>(texts.size());
    for (const auto& [term, d] : df) {
        index.terms.push_back(term);
        index.df.push_back(d);
        index.idf.push_back(static_cast<float>(std::log(1.0 + n / (1.0 + d))));
    }

    index.row_ptr.push_back(0);
    for (const auto& row : counts) {
        std::vector<std::pair<std::uint32_t, double>> entries;
        double norm = 0.0;
        for (const auto& [term, c] : row) {
            const auto id = static_cast<std::uint32_t>(index.term_id(term));
            const double w = c * static_cast<double>(index.idf[id]);
            entries.emplace_back(id, w);
            norm += w * w;
        }
        norm = norm > 0.0 ? std::sqrt(norm) : 1.0;
        for (const auto& [id, w] : entries) {
            index.cols.push_back(id);
            index.vals.push_back(static_cast<float>(w / norm));
        }
        index.row_ptr.push_back(static_cast<std::uint32_t>(index.cols.size()));
    }
    return index;
}

ChunkIndex index_chunks(const CorpusBundle& bundle) {
    std::vector<std::string> texts;
    texts.reserve(bundle.chunks.size());
    for (const auto& c : bundle.chunks) texts.push_back(c.text);
    auto index = index_chunks(texts, bundle.vocab.fingerprint());
    index.corpus_fingerprint = bundle.fingerprint();
    return index;
}

std::vector<std::size_t> RetrievalResult::ids(std::size_t limit) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) out.push_back(ranked[i].first);
    return out;
}

RetrievalResult retrieve(const ChunkIndex& index, const std::string& query, std::size_t top_k) {
    KVC_CHECK(top_k >= 1, ErrorCode::InvalidArgument, "top_k must be at least 1");
    const auto q = weigh(index, query);
    RetrievalResult result;
    result.no_known_terms = q.empty();
    std::vector<std::pair<std::size_t, double>> scored(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
        double dot = 0.0;
        for (std::uint32_t p = index.row_ptr[r]; p < index.row_ptr[r + 1]; ++p) {
            auto it = q.find(index.cols[p]);
            if (it != q.end()) dot += it->second * index.vals[p];
        }
        scored[r] = {r, dot};
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    scored.resize(std::min(top_k, scored.size()));
    result.ranked = std::move(scored);
    return result;
}

RetrievalResult oracle_ranking(std::span<const std::size_t> gold, std::size_t chunk_count) {
    RetrievalResult r;
    std::vector<bool> used(chunk_count, false);
    for (auto g : gold) {
        KVC_CHECK(g < chunk_count, ErrorCode::InvalidArgument, "gold chunk id outside the corpus");
        if (used[g]) continue;
        used[g] = true;
        r.ranked.emplace_back(g, 1.0);
    }
    for (std::size_t i = 0; i < chunk_count; ++i)
        if (!used[i]) r.ranked.emplace_back(i, 0.0);
    return r;
}

std::size_t chunks_in_budget(std::size_t budget_tokens) { return budget_tokens / kChunkTokens; }

TokenSequence assemble_context(const RetrievalResult& result, const std::vector<ChunkDoc>& chunks,
                               std::size_t budget_tokens) {
    KVC_CHECK(budget_tokens >= kChunkTokens, ErrorCode::InvalidArgument,
              "retrieval budget must be at least 256 tokens, got " + std::to_string(budget_tokens));
    const std::size_t b = chunks_in_budget(budget_tokens);
    TokenSequence out;
    for (std::size_t i = 0; i < result.ranked.size() && i < b; ++i) {
        const auto& c = chunks.at(result.ranked[i].first);
        out.ids.insert(out.ids.end(), c.tokens.begin(), c.tokens.end());
    }
    return out;
}

double evidence_recall(std::span<const std::size_t> retrieved_prefix, std::span<const std::size_t> gold) {
    KVC_CHECK(!gold.empty(), ErrorCode::InvalidArgument, "evidence recall needs a nonempty gold set");
    std::size_t hit = 0;
    for (auto g : gold) {
        if (std::find(retrieved_prefix.begin(), retrieved_prefix.end(), g) != retrieved_prefix.end()) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

void save_index(const ChunkIndex& index, const std::string& path) {
    BinaryWriter w;
    w.bytes(kIndexMagic, 4);
    w.u32(kIndexVersion);
    w.u32(static_cast<std::uint32_t>(index.size()));
    w.bytes(index.vocab_fingerprint.data(), index.vocab_fingerprint.size());
    w.bytes(index.corpus_fingerprint.data(), index.corpus_fingerprint.size());
    w.u32(static_cast<std::uint32_t>(index.terms.size()));
    for (const auto& t : index.terms) {
        w.u32(static_cast<std::uint32_t>(t.size()));
        w.bytes(t.data(), t.size());
    }
    w.u32s(index.df);
    w.f32s(index.idf);
    w.u32s(index.row_ptr);
    w.u32(static_cast<std::uint32_t>(index.cols.size()));
    w.u32s(index.cols);
    w.f32s(index.vals);
    w.write_file(path);
}

ChunkIndex load_index(const std::string& path, const Digest* expected_vocab) {
    auto r = BinaryReader::from_file(path);
    char magic[4];
    r.bytes(magic, 4);
    KVC_CHECK(std::equal(magic, magic + 4, kIndexMagic), ErrorCode::Malformed, "bad magic in index file " + path);
    const auto version = r.u32();
    KVC_CHECK(version == kIndexVersion, ErrorCode::Incompatible,
              "index version " + std::to_string(version) + " is not supported");
    ChunkIndex index;
    const auto n = r.u32();
    r.bytes(index.vocab_fingerprint.data(), index.vocab_fingerprint.size());
    r.bytes(index.corpus_fingerprint.data(), index.corpus_fingerprint.size());
    if (expected_vocab) {
        KVC_CHECK(index.vocab_fingerprint == *expected_vocab, ErrorCode::Incompatible,
                  "index was built for a different vocabulary");
    }
    const auto n_terms = r.u32();
    KVC_CHECK(n_terms <= r.remaining(), ErrorCode::Malformed, "index term count exceeds file size");
    index.terms.resize(n_terms);
    for (auto& t : index.terms) {
        const auto len = r.u32();
        KVC_CHECK(len <= r.remaining(), ErrorCode::Malformed, "unexpected end of container");
        t.resize(len);
        r.bytes(t.data(), len);
    }
    index.df.resize(n_terms);
    r.u32s(index.df);
    index.idf.resize(n_terms);
    r.f32s(index.idf);
    index.row_ptr.resize(static_cast<std::size_t>(n) + 1);
    r.u32s(index.row_ptr);
    const auto nnz = r.u32();
    KVC_CHECK(index.row_ptr.back() == nnz && 8ull * nnz == r.remaining(), ErrorCode::Malformed,
              "index payload length does not match its header");
    index.cols.resize(nnz);
    r.u32s(index.cols);
    index.vals.resize(nnz);
    r.f32s(index.vals);
    for (auto c : index.cols) KVC_CHECK(c < n_terms, ErrorCode::Malformed, "index column outside term table");
    return index;
}

}  // namespace kvc

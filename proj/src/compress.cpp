// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/compress.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

namespace kvc {

namespace {

std::atomic<std::uint64_t> g_compressions{0};

constexpr char kCacheMagic[4] = {'K', 'V', 'C', 'C'};

std::vector<TokenId> guidance_tokens(const GuidancePrompt& guidance, const Vocabulary& vocab) {
    return tokenize(guidance.render(), vocab).ids;
}

void check_vocab(const Model& model, const Vocabulary& vocab) {
    KVC_CHECK(vocab.size() == model.config().vocab_size, ErrorCode::Incompatible,
              "vocabulary size " + std::to_string(vocab.size()) + " does not match model vocab_size " +
                  std::to_string(model.config().vocab_size));
}

std::vector<std::size_t> iota_columns(std::size_t count) {
    std::vector<std::size_t> cols(count);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return cols;
}

// Rebuilds `layer` from the given source rows, positions renumbered 0..len-1.
LayerCache gather_layer(const LayerCache& src, std::span<const std::size_t> rows) {
    LayerCache out;
    out.keys = src.keys.gather_rows(rows);
    out.values = src.values.gather_rows(rows);
    out.positions.resize(rows.size());
    std::iota(out.positions.begin(), out.positions.end(), std::uint32_t{0});
    return out;
}

CompressionMeta base_meta(const Model& model, const TokenSequence& context, std::size_t k, CompressionMethod method) {
    CompressionMeta meta;
    meta.model_fingerprint = model.fingerprint();
    meta.corpus_fingerprint = fingerprint_tokens(context.ids);
    meta.n = static_cast<std::uint32_t>(context.ids.size());
    meta.k = static_cast<std::uint32_t>(k);
    meta.s = 1;
    meta.method = method;
    return meta;
}

// Same kept rows in every layer; used by the position-only policies.
CompressedCache keep_rows(const KvCache& full, std::span<const std::size_t> rows, CompressionMeta meta) {
    CompressedCache cc;
    cc.meta = meta;
    for (const auto& layer : full.layers) {
        cc.cache.layers.push_back(gather_layer(layer, rows));
        cc.kept.emplace_back(rows.begin(), rows.end());
    }
    return cc;
}

CompressedCache keep_rows_per_layer(const KvCache& full, const std::vector<std::vector<std::size_t>>& rows,
                                    CompressionMeta meta) {
    CompressedCache cc;
    cc.meta = meta;
    for (std::size_t l = 0; l < full.layers.size(); ++l) {
        cc.cache.layers.push_back(gather_layer(full.layers[l], rows[l]));
        cc.kept.emplace_back(rows[l].begin(), rows[l].end());
    }
    return cc;
}

std::vector<double> max_pool(std::span<const double> scores, std::size_t width) {
    const std::size_t n = scores.size();
    const std::size_t left = (width - 1) / 2;
    const std::size_t right = width / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(n - 1, i + right);
        double m = scores[lo];
        for (std::size_t j = lo + 1; j <= hi; ++j) m = std::max(m, scores[j]);
        out[i] = m;
    }
    return out;
}

}  // namespace

ChunkPlan plan_chunks(std::size_t n, std::size_t s) {
    KVC_CHECK(n >= 1, ErrorCode::InvalidArgument, "chunk plan needs n >= 1");
    KVC_CHECK(s >= 1, ErrorCode::InvalidArgument, "chunk plan needs s >= 1");
    ChunkPlan plan;
    plan.total_len = n;
    if (s > n) {
        plan.warnings.push_back("segment count " + std::to_string(s) + " exceeds context length " +
                                std::to_string(n) + "; using one-token chunks");
        s = n;
    }
    plan.segment_count = s;
    plan.chunk_len = (n + s - 1) / s;
    for (std::size_t start = 0; start < n; start += plan.chunk_len) {
        plan.boundaries.emplace_back(start, std::min(n, start + plan.chunk_len));
    }
    plan.segment_count = plan.boundaries.size();
    return plan;
}

const char* to_string(GuidanceKind kind) {
    switch (kind) {
        case GuidanceKind::ZeroShot: return "zs";
        case GuidanceKind::FewShot: return "fs";
        case GuidanceKind::FewShotPlusQuery: return "fsq";
    }
    return "?";
}

GuidanceKind guidance_kind_from_string(const std::string& name) {
    if (name == "zs") return GuidanceKind::ZeroShot;
    if (name == "fs") return GuidanceKind::FewShot;
    if (name == "fsq") return GuidanceKind::FewShotPlusQuery;
    throw Error(ErrorCode::InvalidArgument, "unknown guidance mode '" + name + "' (expected zs, fs or fsq)");
}

void GuidancePrompt::validate() const {
    if (kind == GuidanceKind::ZeroShot) {
        KVC_CHECK(examples.empty() && !query, ErrorCode::InvalidArgument,
                  "zero-shot guidance takes neither examples nor a query");
    }
    if (kind == GuidanceKind::FewShot) {
        KVC_CHECK(!query, ErrorCode::InvalidArgument, "few-shot guidance takes no query");
    }
    if (kind == GuidanceKind::FewShotPlusQuery) {
        KVC_CHECK(query && !query->empty(), ErrorCode::InvalidArgument, "few-shot plus query guidance needs a query");
    }
}

std::string GuidancePrompt::render() const {
    std::string text = "<sep> task : " + task_description;
    for (const auto& ex : examples) text += " question : " + ex.question + " answer : " + ex.answer;
    if (query) text += " question : " + *query;
    return text;
}

Digest GuidancePrompt::fingerprint() const {
    Hasher h;
    h.update(to_string(kind));
    h.update("\n");
    h.update(render());
    return h.finish();
}

std::size_t iteration_budget(const CompressionBudget& budget, const ChunkPlan& plan, std::size_t i) {
    if (budget.schedule == BudgetSchedule::Flat) return budget.target_len;
    const std::size_t n = plan.total_len;
    const std::size_t seen = std::min(i * plan.chunk_len, n);
    const std::size_t k = std::min(budget.target_len, n);
    return (k * seen + n - 1) / n;
}

Digest fingerprint_tokens(std::span<const TokenId> ids) {
    Hasher h;
    h.update("kvc-tokens");
    for (TokenId id : ids) h.update_pod(id);
    return h.finish();
}

std::vector<std::vector<double>> score_tokens(const AttentionCapture& capture, const SelectionPolicy& policy,
                                              std::span<const std::size_t> candidate_columns) {
    (void)policy;  // mean/mean is the only reduction
    KVC_CHECK(capture.observer_count > 0, ErrorCode::InvalidArgument, "guidance produced no observer rows");
    for (auto c : candidate_columns) {
        KVC_CHECK(c < capture.columns, ErrorCode::InvalidArgument, "candidate column outside the capture");
        KVC_CHECK(c < capture.observer_begin || c >= capture.observer_begin + capture.observer_count,
                  ErrorCode::InvalidArgument, "guidance columns cannot be candidates");
    }
    std::vector<std::vector<double>> out;
    out.reserve(capture.weights.size());
    for (const auto& heads : capture.weights) {
        std::vector<double> acc(candidate_columns.size(), 0.0);
        for (const auto& w : heads) {
            for (std::size_t o = 0; o < w.rows(); ++o) {
                auto row = w.row(o);
                for (std::size_t i = 0; i < candidate_columns.size(); ++i) acc[i] += row[candidate_columns[i]];
            }
        }
        const double denom = static_cast<double>(heads.size() * capture.observer_count);
        for (auto& a : acc) a /= denom;
        out.push_back(std::move(acc));
    }
    return out;
}

std::vector<std::size_t> select_top(std::span<const double> scores, std::size_t r) {
    std::vector<std::size_t> idx = iota_columns(scores.size());
    if (r >= idx.size()) return idx;
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(r), idx.end(), better);
    idx.resize(r);
    std::sort(idx.begin(), idx.end());
    return idx;
}

CompressedCache compress_iterative(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                   const GuidancePrompt& guidance, const CompressionBudget& budget,
                                   const ChunkPlan& plan, const SelectionPolicy& policy) {
    g_compressions.fetch_add(1);
    const auto& cfg = model.config();
    check_vocab(model, vocab);
    guidance.validate();
    const std::size_t n = context.ids.size();
    KVC_CHECK(n >= 1, ErrorCode::InvalidArgument, "context must not be empty");
    KVC_CHECK(plan.total_len == n, ErrorCode::InvalidArgument, "chunk plan does not match the context length");
    KVC_CHECK(budget.target_len >= 1, ErrorCode::InvalidArgument, "budget must be at least one token");
    const std::size_t k = std::min(budget.target_len, n);
    const auto g_ids = guidance_tokens(guidance, vocab);
    KVC_CHECK(k + plan.chunk_len < cfg.max_position && g_ids.size() <= cfg.max_position - k - plan.chunk_len,
              ErrorCode::InvalidArgument,
              "guidance of " + std::to_string(g_ids.size()) + " tokens does not fit beside budget and chunk");

    KvCache survivors = KvCache::empty(cfg);
    std::vector<std::vector<std::uint32_t>> kept(cfg.n_layers);

    for (std::size_t i = 0; i < plan.boundaries.size(); ++i) {
        const auto [start, end] = plan.boundaries[i];
        const std::size_t prev = survivors.length();
        const std::size_t chunk = end - start;

        std::vector<TokenId> tokens(context.ids.begin() + static_cast<std::ptrdiff_t>(start),
                                    context.ids.begin() + static_cast<std::ptrdiff_t>(end));
        tokens.insert(tokens.end(), g_ids.begin(), g_ids.end());

        KvCache work = survivors;
        PrefillOptions opts;
        opts.observer_begin = chunk;
        opts.observer_end = tokens.size();
        auto res = prefill(model, work, tokens, static_cast<std::uint32_t>(prev), opts);

        const auto candidates = iota_columns(prev + chunk);
        const auto scores = score_tokens(*res.capture, policy, candidates);
        const std::size_t r = std::min(iteration_budget(budget, plan, i + 1), candidates.size());

        KvCache next;
        std::vector<std::vector<std::uint32_t>> next_kept(cfg.n_layers);
        for (std::size_t l = 0; l < cfg.n_layers; ++l) {
            const auto sel = select_top(scores[l], r);
            next.layers.push_back(gather_layer(work.layers[l], sel));
            next_kept[l].reserve(sel.size());
            for (auto c : sel) {
                next_kept[l].push_back(c < prev ? kept[l][c] : static_cast<std::uint32_t>(start + (c - prev)));
            }
        }
        survivors = std::move(next);
        kept = std::move(next_kept);
    }

    CompressedCache cc;
    cc.cache = std::move(survivors);
    cc.kept = std::move(kept);
    cc.meta = base_meta(model, context, budget.target_len, CompressionMethod::Iterative);
    cc.meta.guidance_fingerprint = guidance.fingerprint();
    cc.meta.s = static_cast<std::uint32_t>(plan.segment_count);
    cc.meta.schedule = budget.schedule;
    return cc;
}

CompressedCache compress_oracle(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                const GuidancePrompt& guidance, const CompressionBudget& budget,
                                const SelectionPolicy& policy) {
    g_compressions.fetch_add(1);
    const auto& cfg = model.config();
    check_vocab(model, vocab);
    guidance.validate();
    const std::size_t n = context.ids.size();
    KVC_CHECK(n >= 1, ErrorCode::InvalidArgument, "context must not be empty");
    KVC_CHECK(budget.target_len >= 1, ErrorCode::InvalidArgument, "budget must be at least one token");
    const auto g_ids = guidance_tokens(guidance, vocab);

    std::vector<TokenId> tokens = context.ids;
    tokens.insert(tokens.end(), g_ids.begin(), g_ids.end());
    KvCache full = KvCache::empty(cfg);
    PrefillOptions opts;
    opts.observer_begin = n;
    opts.observer_end = tokens.size();
    auto res = prefill(model, full, tokens, 0, opts);
    const auto scores = score_tokens(*res.capture, policy, iota_columns(n));

    const std::size_t k = std::min(budget.target_len, n);
    std::vector<std::vector<std::size_t>> rows(cfg.n_layers);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        std::vector<std::size_t> order = iota_columns(n);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[l][a] > scores[l][b]; });
        order.resize(k);
        std::sort(order.begin(), order.end());
        rows[l] = std::move(order);
    }
    auto meta = base_meta(model, context, budget.target_len, CompressionMethod::Oracle);
    meta.guidance_fingerprint = guidance.fingerprint();
    meta.schedule = budget.schedule;
    return keep_rows_per_layer(full, rows, meta);
}

CompressedCache compress_streaming_llm(const Model& model, const TokenSequence& context, std::size_t sink,
                                       std::size_t recent) {
    g_compressions.fetch_add(1);
    const std::size_t n = context.ids.size();
    KVC_CHECK(n >= 1, ErrorCode::InvalidArgument, "context must not be empty");
    KvCache full = KvCache::empty(model.config());
    prefill(model, full, context.ids, 0);

    std::vector<std::size_t> rows;
    if (sink + recent >= n) {
        rows = iota_columns(n);
    } else {
        for (std::size_t i = 0; i < sink; ++i) rows.push_back(i);
        for (std::size_t i = n - recent; i < n; ++i) rows.push_back(i);
    }
    auto meta = base_meta(model, context, std::min(sink + recent, n), CompressionMethod::StreamingLlm);
    return keep_rows(full, rows, meta);
}

CompressedCache compress_snapkv_agnostic(const Model& model, const TokenSequence& context, std::size_t window,
                                         const CompressionBudget& budget, std::size_t pool_width) {
    g_compressions.fetch_add(1);
    const auto& cfg = model.config();
    const std::size_t n = context.ids.size();
    KVC_CHECK(window >= 1 && window < n, ErrorCode::InvalidArgument, "snapkv window must be in [1, n)");
    KVC_CHECK(pool_width >= 1, ErrorCode::InvalidArgument, "pool width must be at least 1");
    const std::size_t k = std::min(budget.target_len, n);
    auto meta = base_meta(model, context, budget.target_len, CompressionMethod::SnapKv);
    meta.schedule = budget.schedule;

    KvCache full = KvCache::empty(cfg);
    if (k <= window) {
        prefill(model, full, context.ids, 0);
        std::vector<std::size_t> rows;
        for (std::size_t i = n - k; i < n; ++i) rows.push_back(i);
        return keep_rows(full, rows, meta);
    }

    PrefillOptions opts;
    opts.observer_begin = n - window;
    opts.observer_end = n;
    auto res = prefill(model, full, context.ids, 0, opts);
    const std::size_t prefix = n - window;
    const auto scores = score_tokens(*res.capture, SelectionPolicy{}, iota_columns(prefix));

    std::vector<std::vector<std::size_t>> rows(cfg.n_layers);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto pooled = max_pool(scores[l], pool_width);
        rows[l] = select_top(pooled, k - window);
        for (std::size_t i = prefix; i < n; ++i) rows[l].push_back(i);
    }
    return keep_rows_per_layer(full, rows, meta);
}

std::vector<std::vector<double>> expected_attention_scores(const Model& model, const KvCache& cache,
                                                           const std::vector<std::vector<Matrix>>& queries,
                                                           std::size_t columns) {
    const auto& cfg = model.config();
    const std::size_t hd = cfg.head_dim;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    const double inv_d = 1.0 / static_cast<double>(hd);
    std::vector<std::vector<double>> out(cfg.n_layers, std::vector<double>(columns, 0.0));
    std::vector<float> key(cfg.hidden_size);

    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto& lc = cache.layers[l];
        std::vector<std::vector<double>> mu(cfg.n_heads, std::vector<double>(hd, 0.0));
        std::vector<std::vector<double>> var(cfg.n_heads, std::vector<double>(hd, 0.0));
        std::vector<bool> degenerate(cfg.n_heads, true);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            const Matrix& q = queries[l][h];
            const double count = static_cast<double>(q.rows());
            for (std::size_t s = 0; s < q.rows(); ++s)
                for (std::size_t t = 0; t < hd; ++t) mu[h][t] += q(s, t);
            for (auto& m : mu[h]) m /= count;
            for (std::size_t s = 0; s < q.rows(); ++s) {
                for (std::size_t t = 0; t < hd; ++t) {
                    const double dlt = q(s, t) - mu[h][t];
                    var[h][t] += dlt * dlt;
                }
            }
            for (auto& v : var[h]) {
                v /= count;
                if (v > 0.0) degenerate[h] = false;
            }
        }
        for (std::size_t j = 0; j < columns; ++j) {
            auto src = lc.keys.row(j);
            std::copy(src.begin(), src.end(), key.begin());
            apply_rotary(model, key, lc.positions[j]);
            double total = 0.0;
            for (std::size_t h = 0; h < cfg.n_heads; ++h) {
                const float* kh = key.data() + h * hd;
                double lin = 0.0, quad = 0.0;
                for (std::size_t t = 0; t < hd; ++t) {
                    lin += mu[h][t] * kh[t];
                    quad += var[h][t] * static_cast<double>(kh[t]) * kh[t];
                }
                total += lin * inv_sqrt + (degenerate[h] ? 0.0 : 0.5 * quad * inv_d);
            }
            out[l][j] = total / static_cast<double>(cfg.n_heads);
        }
    }
    return out;
}

CompressedCache compress_expected_attention(const Model& model, const TokenSequence& context,
                                            const CompressionBudget& budget, std::size_t sample_size) {
    g_compressions.fetch_add(1);
    const auto& cfg = model.config();
    const std::size_t n = context.ids.size();
    KVC_CHECK(sample_size >= 2, ErrorCode::InvalidArgument, "expected attention needs sample_size >= 2");
    KVC_CHECK(sample_size <= n, ErrorCode::InvalidArgument, "sample_size exceeds the context length");

    KvCache full = KvCache::empty(cfg);
    PrefillOptions opts;
    opts.observer_begin = n - sample_size;
    opts.observer_end = n;
    opts.capture_queries = true;
    auto res = prefill(model, full, context.ids, 0, opts);
    const auto scores = expected_attention_scores(model, full, res.capture->queries, n);

    const std::size_t k = std::min(budget.target_len, n);
    std::vector<std::vector<std::size_t>> rows(cfg.n_layers);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) rows[l] = select_top(scores[l], k);
    auto meta = base_meta(model, context, budget.target_len, CompressionMethod::ExpectedAttention);
    meta.schedule = budget.schedule;
    return keep_rows_per_layer(full, rows, meta);
}

std::uint64_t compression_calls() { return g_compressions.load(); }
void reset_compression_calls() { g_compressions.store(0); }

std::string question_prompt(const std::string& question) { return "<sep> question : " + question + " answer :"; }

TokenSequence answer_with_cache(const Model& model, const Vocabulary& vocab, const CompressedCache& cc,
                                const std::string& question, const GenerationParams& params) {
    KVC_CHECK(cc.meta.model_fingerprint == model.fingerprint(), ErrorCode::Incompatible,
              "stale cache: built with model " + to_hex(cc.meta.model_fingerprint).substr(0, 12) +
                  ", current model is " + to_hex(model.fingerprint()).substr(0, 12));
    KVC_CHECK(!split_whitespace(question).empty(), ErrorCode::InvalidArgument, "question must not be empty");
    KvCache work = cc.cache;
    if (work.layers.empty()) work = KvCache::empty(model.config());
    return generate_greedy(model, work, tokenize(question_prompt(question), vocab), params);
}

TokenSequence answer_full_context(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                  const std::string& question, const GenerationParams& params) {
    KVC_CHECK(!split_whitespace(question).empty(), ErrorCode::InvalidArgument, "question must not be empty");
    KvCache cache = KvCache::empty(model.config());
    if (!context.ids.empty()) prefill(model, cache, context.ids, 0);
    return generate_greedy(model, cache, tokenize(question_prompt(question), vocab), params);
}

std::vector<std::uint8_t> serialize_cache(const CompressedCache& cc) {
    BinaryWriter w;
    w.bytes(kCacheMagic, 4);
    w.u32(kCacheVersion);
    w.bytes(cc.meta.model_fingerprint.data(), 32);
    w.bytes(cc.meta.guidance_fingerprint.data(), 32);
    w.bytes(cc.meta.corpus_fingerprint.data(), 32);
    w.u32(cc.meta.n);
    w.u32(cc.meta.k);
    w.u32(cc.meta.s);
    w.u8(static_cast<std::uint8_t>(cc.meta.schedule));
    w.u8(static_cast<std::uint8_t>(cc.meta.method));
    const std::size_t width = cc.cache.layers.empty() ? 0 : cc.cache.layers.front().keys.cols();
    w.u32(static_cast<std::uint32_t>(cc.cache.layers.size()));
    w.u32(static_cast<std::uint32_t>(cc.length()));
    w.u32(static_cast<std::uint32_t>(width));
    for (std::size_t l = 0; l < cc.cache.layers.size(); ++l) {
        w.u32s(cc.kept[l]);
        w.f32s(cc.cache.layers[l].keys.data());
        w.f32s(cc.cache.layers[l].values.data());
    }
    return w.buffer();
}

void save_cache(const CompressedCache& cc, const std::string& path) {
    KVC_CHECK(cc.kept.size() == cc.cache.layers.size(), ErrorCode::Internal, "kept lists do not match cache layers");
    BinaryWriter w;
    const auto bytes = serialize_cache(cc);
    w.bytes(bytes.data(), bytes.size());
    w.write_file(path);
}

CompressedCache load_cache(const std::string& path, const Model* model) {
    auto r = BinaryReader::from_file(path);
    char magic[4];
    r.bytes(magic, 4);
    KVC_CHECK(std::equal(magic, magic + 4, kCacheMagic), ErrorCode::Malformed, "bad magic in cache file " + path);
    const std::uint32_t version = r.u32();
    KVC_CHECK(version == kCacheVersion, ErrorCode::Incompatible,
              "cache version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kCacheVersion) + ")");
    CompressedCache cc;
    r.bytes(cc.meta.model_fingerprint.data(), 32);
    r.bytes(cc.meta.guidance_fingerprint.data(), 32);
    r.bytes(cc.meta.corpus_fingerprint.data(), 32);
    cc.meta.n = r.u32();
    cc.meta.k = r.u32();
    cc.meta.s = r.u32();
    const auto schedule = r.u8();
    const auto method = r.u8();
    KVC_CHECK(schedule <= static_cast<std::uint8_t>(BudgetSchedule::Flat), ErrorCode::Malformed,
              "unknown budget schedule tag");
    KVC_CHECK(method <= static_cast<std::uint8_t>(CompressionMethod::ExpectedAttention), ErrorCode::Malformed,
              "unknown compression method tag");
    cc.meta.schedule = static_cast<BudgetSchedule>(schedule);
    cc.meta.method = static_cast<CompressionMethod>(method);
    const std::uint32_t layers = r.u32();
    const std::uint32_t len = r.u32();
    const std::uint32_t width = r.u32();
    const std::uint64_t per_layer = 4ull * len + 8ull * len * width;
    KVC_CHECK(per_layer * layers == r.remaining(), ErrorCode::Malformed,
              "cache payload length does not match its header");

    if (model) {
        KVC_CHECK(cc.meta.model_fingerprint == model->fingerprint(), ErrorCode::Incompatible,
                  "stale cache: model fingerprint mismatch");
        KVC_CHECK(layers == model->config().n_layers && width == model->config().hidden_size,
                  ErrorCode::Incompatible, "cache shape does not match the model");
    }

    for (std::uint32_t l = 0; l < layers; ++l) {
        std::vector<std::uint32_t> kept(len);
        r.u32s(kept);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            KVC_CHECK(kept[i] < cc.meta.n && (i == 0 || kept[i] > kept[i - 1]), ErrorCode::Malformed,
                      "kept positions are not strictly increasing within the context");
        }
        LayerCache lc;
        lc.keys = Matrix(len, width);
        lc.values = Matrix(len, width);
        r.f32s(lc.keys.data());
        r.f32s(lc.values.data());
        lc.positions.resize(len);
        std::iota(lc.positions.begin(), lc.positions.end(), std::uint32_t{0});
        cc.cache.layers.push_back(std::move(lc));
        cc.kept.push_back(std::move(kept));
    }
    return cc;
}

Retention retention(const CompressedCache& cc, std::span<const std::uint32_t> gold_positions) {
    Retention out;
    for (const auto& kept : cc.kept) {
        if (gold_positions.empty()) {
            out.per_layer.push_back(1.0);
            continue;
        }
        std::size_t hit = 0;
        for (auto g : gold_positions) {
            if (std::binary_search(kept.begin(), kept.end(), g)) ++hit;
        }
        out.per_layer.push_back(static_cast<double>(hit) / static_cast<double>(gold_positions.size()));
    }
    out.layer0 = out.per_layer.empty() ? (gold_positions.empty() ? 1.0 : 0.0) : out.per_layer.front();
    return out;
}

}  // namespace kvc

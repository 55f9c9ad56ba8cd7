// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace kvc {

namespace {

// Query rows are processed in fixed-width blocks; short blocks are padded by repeating
// the last row so every inner loop has a constant trip count.
constexpr std::size_t kRowBlock = 16;
constexpr std::size_t kTile = 8;
constexpr float kNormEps = 1e-5f;

inline float exp_inline(float x) {
    x = x < -87.3f ? -87.3f : x;
    x = x > 88.7f ? 88.7f : x;
    const float t = x * 1.44269504088896341f;
    const float fx = (t + 12582912.0f) - 12582912.0f;
    float r = x - fx * 0.693359375f;
    r = r - fx * -2.12194440e-4f;
    float y = 1.9875691500e-4f;
    y = y * r + 1.3981999507e-3f;
    y = y * r + 8.3334519073e-3f;
    y = y * r + 4.1665795894e-2f;
    y = y * r + 1.6666665459e-1f;
    y = y * r + 5.0000001201e-1f;
    y = y * r * r + r + 1.0f;
    const std::int32_t bits = (static_cast<std::int32_t>(fx) + 127) << 23;
    return y * std::bit_cast<float>(bits);
}

void rms_norm(std::span<const float> x, std::span<const float> weight, std::span<float> out) {
    double ss = 0.0;
    for (float v : x) ss += static_cast<double>(v) * v;
    const float inv = static_cast<float>(1.0 / std::sqrt(ss / static_cast<double>(x.size()) + kNormEps));
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * weight[i];
}

void rotate_heads(const Model& model, std::span<float> vec, std::uint32_t position) {
    const auto& c = model.config();
    if (!c.rotary_enabled) return;
    const std::size_t half = c.head_dim / 2;
    const float* cs = model.rope_cos(position);
    const float* sn = model.rope_sin(position);
    for (std::size_t h = 0; h < c.n_heads; ++h) {
        float* v = vec.data() + h * c.head_dim;
        for (std::size_t i = 0; i < half; ++i) {
            const float a = v[i];
            const float b = v[i + half];
            v[i] = a * cs[i] - b * sn[i];
            v[i + half] = a * sn[i] + b * cs[i];
        }
    }
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

struct RowBlock {
    std::size_t rows[kRowBlock];   // indices into the query matrix
    std::size_t limit[kRowBlock];  // last key column each row may attend to
    std::size_t real = 0;          // rows that are not padding
};

// Attention for one head over one block of query rows. `scores` is scratch sized
// [(limit_max + 1) x kRowBlock], column-major in the row index.
void attend_block(const RowBlock& block, const Matrix& queries, const Matrix& keys, const Matrix& values,
                  std::size_t head, std::size_t head_dim, std::vector<float>& scores, Matrix& out,
                  std::vector<std::vector<float>*>& probs_out) {
    const std::size_t head_off = head * head_dim;
    const std::size_t lim_min = block.limit[0];
    const std::size_t lim_max = block.limit[kRowBlock - 1];
    const std::size_t ncols = lim_max + 1;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    scores.resize(ncols * kRowBlock);

    float qt[256 * kRowBlock];  // head_dim <= 256
    for (std::size_t t = 0; t < head_dim; ++t) {
        for (std::size_t r = 0; r < kRowBlock; ++r) qt[t * kRowBlock + r] = queries(block.rows[r], head_off + t);
    }

    const float* kbase = keys.data().data() + head_off;
    const std::size_t kstride = keys.cols();
    std::size_t j = 0;
    for (; j + 4 <= ncols; j += 4) {
        const float* k0 = kbase + j * kstride;
        const float* k1 = k0 + kstride;
        const float* k2 = k1 + kstride;
        const float* k3 = k2 + kstride;
        float a0[kRowBlock] = {}, a1[kRowBlock] = {}, a2[kRowBlock] = {}, a3[kRowBlock] = {};
        for (std::size_t t = 0; t < head_dim; ++t) {
            const float* q = qt + t * kRowBlock;
            for (std::size_t r = 0; r < kRowBlock; ++r) {
                a0[r] += q[r] * k0[t];
                a1[r] += q[r] * k1[t];
                a2[r] += q[r] * k2[t];
                a3[r] += q[r] * k3[t];
            }
        }
        float* s = scores.data() + j * kRowBlock;
        for (std::size_t r = 0; r < kRowBlock; ++r) {
            s[r] = a0[r] * scale;
            s[kRowBlock + r] = a1[r] * scale;
            s[2 * kRowBlock + r] = a2[r] * scale;
            s[3 * kRowBlock + r] = a3[r] * scale;
        }
    }
    for (; j < ncols; ++j) {
        const float* k = kbase + j * kstride;
        float acc[kRowBlock] = {};
        for (std::size_t t = 0; t < head_dim; ++t) {
            const float kt = k[t];
            for (std::size_t r = 0; r < kRowBlock; ++r) acc[r] += qt[t * kRowBlock + r] * kt;
        }
        float* s = scores.data() + j * kRowBlock;
        for (std::size_t r = 0; r < kRowBlock; ++r) s[r] = acc[r] * scale;
    }

    // Rows are sorted by limit, so columns past lim_min are masked per row.
    float mask[kRowBlock];
    float mx[kRowBlock];
    std::fill(std::begin(mx), std::end(mx), -std::numeric_limits<float>::infinity());
    for (std::size_t j = 0; j <= lim_min; ++j) {
        const float* s = scores.data() + j * kRowBlock;
        for (std::size_t r = 0; r < kRowBlock; ++r) mx[r] = s[r] > mx[r] ? s[r] : mx[r];
    }
    for (std::size_t j = lim_min + 1; j < ncols; ++j) {
        const float* s = scores.data() + j * kRowBlock;
        for (std::size_t r = 0; r < kRowBlock; ++r) {
            const float v = j <= block.limit[r] ? s[r] : -std::numeric_limits<float>::infinity();
            mx[r] = v > mx[r] ? v : mx[r];
        }
    }

    float sum[kRowBlock] = {};
    for (std::size_t j = 0; j <= lim_min; ++j) {
        float* s = scores.data() + j * kRowBlock;
        for (std::size_t r = 0; r < kRowBlock; ++r) {
            s[r] = exp_inline(s[r] - mx[r]);
            sum[r] += s[r];
        }
    }
    for (std::size_t j = lim_min + 1; j < ncols; ++j) {
        float* s = scores.data() + j * kRowBlock;
        for (std::size_t r = 0; r < kRowBlock; ++r) mask[r] = j <= block.limit[r] ? 1.0f : 0.0f;
        for (std::size_t r = 0; r < kRowBlock; ++r) {
            s[r] = exp_inline(s[r] - mx[r]) * mask[r];
            sum[r] += s[r];
        }
    }
    float inv[kRowBlock];
    for (std::size_t r = 0; r < kRowBlock; ++r) inv[r] = 1.0f / sum[r];

    float acc[256][kRowBlock];
    const float* vbase = values.data().data() + head_off;
    const std::size_t vstride = values.cols();
    std::size_t t0 = 0;
    for (; t0 + kTile <= head_dim; t0 += kTile) {
        float tile[kTile][kRowBlock] = {};
        for (std::size_t jj = 0; jj < ncols; ++jj) {
            const float* v = vbase + jj * vstride + t0;
            const float* s = scores.data() + jj * kRowBlock;
            for (std::size_t t = 0; t < kTile; ++t) {
                for (std::size_t r = 0; r < kRowBlock; ++r) tile[t][r] += s[r] * v[t];
            }
        }
        for (std::size_t t = 0; t < kTile; ++t) std::copy_n(tile[t], kRowBlock, acc[t0 + t]);
    }
    for (; t0 < head_dim; ++t0) {
        float col[kRowBlock] = {};
        for (std::size_t jj = 0; jj < ncols; ++jj) {
            const float v = vbase[jj * vstride + t0];
            const float* s = scores.data() + jj * kRowBlock;
            for (std::size_t r = 0; r < kRowBlock; ++r) col[r] += s[r] * v;
        }
        std::copy_n(col, kRowBlock, acc[t0]);
    }

    for (std::size_t r = 0; r < block.real; ++r) {
        float* o = out.data().data() + block.rows[r] * out.cols() + head_off;
        for (std::size_t t = 0; t < head_dim; ++t) o[t] = acc[t][r] * inv[r];
        if (auto* dst = probs_out[r]) {
            dst->assign(block.limit[r] + 1, 0.0f);
            for (std::size_t j = 0; j <= block.limit[r]; ++j) (*dst)[j] = scores[j * kRowBlock + r] * inv[r];
        }
    }
}

}  // namespace

float attention_exp(float x) { return exp_inline(x); }

void apply_rotary(const Model& model, std::span<float> vec, std::uint32_t position) {
    rotate_heads(model, vec, position);
}

KvCache KvCache::empty(const ModelConfig& config) {
    KvCache cache;
    cache.layers.resize(config.n_layers);
    for (auto& l : cache.layers) {
        l.keys = Matrix(0, config.hidden_size);
        l.values = Matrix(0, config.hidden_size);
    }
    return cache;
}

std::uint32_t KvCache::next_position() const {
    if (length() == 0) return 0;
    return layers.front().positions.back() + 1;
}

void KvCache::validate() const {
    for (const auto& l : layers) {
        KVC_CHECK(l.keys.rows() == l.positions.size() && l.values.rows() == l.positions.size(), ErrorCode::Internal,
                  "cache layer row counts disagree");
        KVC_CHECK(l.positions.size() == length(), ErrorCode::Internal, "cache layers have different lengths");
        for (std::size_t i = 1; i < l.positions.size(); ++i) {
            KVC_CHECK(l.positions[i] > l.positions[i - 1], ErrorCode::Internal,
                      "cache positions must be strictly increasing");
        }
    }
}

void KvCache::assign_contiguous_positions(std::uint32_t start) {
    for (auto& l : layers) {
        for (std::size_t i = 0; i < l.positions.size(); ++i) l.positions[i] = start + static_cast<std::uint32_t>(i);
    }
}

PrefillResult prefill(const Model& model, KvCache& cache, std::span<const TokenId> tokens,
                      const PrefillOptions& options) {
    return prefill(model, cache, tokens, cache.next_position(), options);
}

PrefillResult prefill(const Model& model, KvCache& cache, std::span<const TokenId> tokens,
                      std::uint32_t start_position, const PrefillOptions& options) {
    const auto& cfg = model.config();
    const std::size_t d = cfg.hidden_size;
    const std::size_t hd = cfg.head_dim;
    const std::size_t n_tok = tokens.size();

    KVC_CHECK(n_tok > 0, ErrorCode::InvalidArgument, "prefill needs at least one token");
    KVC_CHECK(hd <= 256, ErrorCode::InvalidArgument, "head_dim above 256 is not supported");
    if (cache.layers.empty()) cache = KvCache::empty(cfg);
    KVC_CHECK(cache.layers.size() == cfg.n_layers, ErrorCode::InvalidArgument, "cache/model layer count mismatch");
    KVC_CHECK(cache.length() == 0 || start_position >= cache.next_position(), ErrorCode::InvalidArgument,
              "prefill positions collide with cached positions");
    KVC_CHECK(static_cast<std::size_t>(start_position) + n_tok <= cfg.max_position, ErrorCode::Overflow,
              "position overflow: " + std::to_string(static_cast<std::size_t>(start_position) + n_tok) +
                  " exceeds max_position " + std::to_string(cfg.max_position));
    KVC_CHECK(options.observer_begin <= options.observer_end && options.observer_end <= n_tok,
              ErrorCode::InvalidArgument, "observer span outside the prefilled tokens");
    for (auto t : tokens) {
        KVC_CHECK(t < cfg.vocab_size, ErrorCode::InvalidArgument, "token id outside vocabulary");
    }

    const std::size_t old_len = cache.length();
    const std::size_t total = old_len + n_tok;
    const std::size_t obs_count = options.observer_end - options.observer_begin;

    PrefillResult result;
    if (obs_count > 0) {
        AttentionCapture cap;
        cap.observer_begin = old_len + options.observer_begin;
        cap.observer_count = obs_count;
        cap.columns = total;
        cap.weights.assign(cfg.n_layers, std::vector<Matrix>(cfg.n_heads, Matrix(obs_count, total)));
        if (options.capture_queries) {
            cap.queries.assign(cfg.n_layers, std::vector<Matrix>(cfg.n_heads, Matrix(obs_count, hd)));
        }
        result.capture = std::move(cap);
    }

    Matrix x(n_tok, d);
    for (std::size_t i = 0; i < n_tok; ++i) {
        auto src = model.embedding().row(tokens[i]);
        std::copy(src.begin(), src.end(), x.row(i).begin());
    }

    // The last layer only needs outputs for the final row and the observer rows.
    std::vector<std::size_t> all_rows(n_tok);
    for (std::size_t i = 0; i < n_tok; ++i) all_rows[i] = i;
    std::vector<std::size_t> last_rows;
    for (std::size_t i = options.observer_begin; i < options.observer_end; ++i) last_rows.push_back(i);
    if (last_rows.empty() || last_rows.back() != n_tok - 1) last_rows.push_back(n_tok - 1);

    std::vector<float> normed(d), tmp(d), gate(cfg.ffn_size), up(cfg.ffn_size);
    std::vector<float> scores;
    std::vector<float> probs_scratch;

    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto& w = model.layers()[l];
        auto& lc = cache.layers[l];
        const bool is_last = l + 1 == cfg.n_layers;
        const auto& rows = is_last ? last_rows : all_rows;

        // Project and append K/V for every new row (unrotated).
        Matrix k_new(n_tok, d), v_new(n_tok, d);
        Matrix q(n_tok, d);
        std::vector<bool> need_q(n_tok, false);
        for (auto r : rows) need_q[r] = true;
        for (std::size_t i = 0; i < n_tok; ++i) {
            rms_norm(x.row(i), w.attention_norm, normed);
            matvec(w.wk, normed, k_new.row(i));
            matvec(w.wv, normed, v_new.row(i));
            if (need_q[i]) {
                matvec(w.wq, normed, q.row(i));
                rotate_heads(model, q.row(i), start_position + static_cast<std::uint32_t>(i));
            }
        }
        lc.keys.append_rows(k_new);
        lc.values.append_rows(v_new);
        for (std::size_t i = 0; i < n_tok; ++i) lc.positions.push_back(start_position + static_cast<std::uint32_t>(i));

        Matrix rotated_storage;
        const Matrix* keys = &lc.keys;
        if (cfg.rotary_enabled) {
            rotated_storage = lc.keys;
            for (std::size_t j = 0; j < total; ++j) rotate_heads(model, rotated_storage.row(j), lc.positions[j]);
            keys = &rotated_storage;
        }

        if (result.capture && !result.capture->queries.empty()) {
            for (std::size_t o = 0; o < obs_count; ++o) {
                auto qrow = q.row(options.observer_begin + o);
                for (std::size_t h = 0; h < cfg.n_heads; ++h) {
                    auto dst = result.capture->queries[l][h].row(o);
                    std::copy_n(qrow.begin() + h * hd, hd, dst.begin());
                }
            }
        }

        Matrix attn(n_tok, d);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            for (std::size_t b = 0; b < rows.size(); b += kRowBlock) {
                RowBlock block;
                block.real = std::min(kRowBlock, rows.size() - b);
                std::vector<std::vector<float>*> probs_out(kRowBlock, nullptr);
                std::vector<std::vector<float>> probs(kRowBlock);
                for (std::size_t r = 0; r < kRowBlock; ++r) {
                    const std::size_t src = b + std::min(r, block.real - 1);
                    block.rows[r] = rows[src];
                    block.limit[r] = old_len + rows[src];
                    const bool observer = r < block.real && rows[src] >= options.observer_begin &&
                                          rows[src] < options.observer_end;
                    if (observer) probs_out[r] = &probs[r];
                }
                attend_block(block, q, *keys, lc.values, h, hd, scores, attn, probs_out);
                for (std::size_t r = 0; r < block.real; ++r) {
                    if (!probs_out[r]) continue;
                    auto dst = result.capture->weights[l][h].row(block.rows[r] - options.observer_begin);
                    std::copy(probs[r].begin(), probs[r].end(), dst.begin());
                }
            }
        }

        for (auto i : rows) {
            matvec(w.wo, attn.row(i), tmp);
            auto xi = x.row(i);
            for (std::size_t c = 0; c < d; ++c) xi[c] += tmp[c];
            rms_norm(xi, w.ffn_norm, normed);
            matvec(w.w_gate, normed, gate);
            matvec(w.w_up, normed, up);
            for (std::size_t f = 0; f < cfg.ffn_size; ++f) gate[f] = silu(gate[f]) * up[f];
            matvec(w.w_down, gate, tmp);
            for (std::size_t c = 0; c < d; ++c) xi[c] += tmp[c];
        }
    }

    rms_norm(x.row(n_tok - 1), model.final_norm(), normed);
    result.logits.resize(cfg.vocab_size);
    matvec(model.lm_head(), normed, result.logits);
    return result;
}

std::vector<float> decode_step(const Model& model, KvCache& cache, TokenId token) {
    const TokenId one[1] = {token};
    return prefill(model, cache, one).logits;
}

TokenId argmax(std::span<const float> logits) {
    KVC_CHECK(!logits.empty(), ErrorCode::InvalidArgument, "argmax of empty logits");
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return static_cast<TokenId>(best);
}

TokenSequence generate_greedy(const Model& model, KvCache& cache, const TokenSequence& prompt,
                              const GenerationParams& params) {
    KVC_CHECK(!prompt.empty(), ErrorCode::InvalidArgument, "prompt must not be empty");
    KVC_CHECK(params.max_new_tokens >= 1, ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
    auto logits = prefill(model, cache, prompt.ids).logits;
    TokenSequence out;
    while (out.ids.size() < params.max_new_tokens) {
        const TokenId next = argmax(logits);
        if (std::find(params.stop_tokens.begin(), params.stop_tokens.end(), next) != params.stop_tokens.end()) break;
        out.ids.push_back(next);
        logits = decode_step(model, cache, next);
    }
    return out;
}

}  // namespace kvc

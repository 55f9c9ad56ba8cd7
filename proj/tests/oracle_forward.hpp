// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

// Reference transformer forward used only by tests. Written for clarity, in double
// precision, recomputing everything from scratch with keys rotated directly at their
// positions. It shares no code with src/inference.cpp.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "kvc/model.hpp"

namespace kvc::oracle {

using Vec = std::vector<double>;

inline Vec mat_vec(const Matrix& w, const Vec& x) {
    Vec y(w.rows(), 0.0);
    for (std::size_t o = 0; o < w.rows(); ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.cols(); ++i) acc += static_cast<double>(w(o, i)) * x[i];
        y[o] = acc;
    }
    return y;
}

inline Vec rms(const Vec& x, const std::vector<float>& weight) {
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + 1e-5);
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * weight[i];
    return out;
}

inline void rotate(const ModelConfig& c, Vec& v, std::uint32_t pos) {
    if (!c.rotary_enabled) return;
    const std::size_t half = c.head_dim / 2;
    for (std::size_t h = 0; h < c.n_heads; ++h) {
        for (std::size_t i = 0; i < half; ++i) {
            const double inv_freq = std::pow(static_cast<double>(c.rotary_base),
                                             -2.0 * static_cast<double>(i) / static_cast<double>(c.head_dim));
            const double ang = pos * inv_freq;
            const double a = v[h * c.head_dim + i];
            const double b = v[h * c.head_dim + i + half];
            v[h * c.head_dim + i] = a * std::cos(ang) - b * std::sin(ang);
            v[h * c.head_dim + i + half] = a * std::sin(ang) + b * std::cos(ang);
        }
    }
}

struct Forward {
    std::vector<double> logits;                                   // last row
    std::vector<std::vector<std::vector<Vec>>> probs;             // [layer][head][row] -> weights over cols <= row
};

/// Full causal forward over `tokens` with explicit positions (strictly increasing).
inline Forward forward(const Model& model, const std::vector<TokenId>& tokens, const std::vector<std::uint32_t>& pos) {
    const auto& c = model.config();
    const std::size_t n = tokens.size(), d = c.hidden_size, hd = c.head_dim;
    std::vector<Vec> x(n, Vec(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x[i][j] = model.embedding()(tokens[i], j);

    Forward out;
    out.probs.assign(c.n_layers, std::vector<std::vector<Vec>>(c.n_heads, std::vector<Vec>(n)));
    for (std::size_t l = 0; l < c.n_layers; ++l) {
        const auto& w = model.layers()[l];
        std::vector<Vec> q(n), k(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec hn = rms(x[i], w.attention_norm);
            q[i] = mat_vec(w.wq, hn);
            k[i] = mat_vec(w.wk, hn);
            v[i] = mat_vec(w.wv, hn);
            rotate(c, q[i], pos[i]);
            rotate(c, k[i], pos[i]);
        }
        std::vector<Vec> attn(n, Vec(d, 0.0));
        for (std::size_t h = 0; h < c.n_heads; ++h) {
            for (std::size_t i = 0; i < n; ++i) {
                Vec s(i + 1);
                double mx = -1e300;
                for (std::size_t j = 0; j <= i; ++j) {
                    double dot = 0.0;
                    for (std::size_t t = 0; t < hd; ++t) dot += q[i][h * hd + t] * k[j][h * hd + t];
                    s[j] = dot / std::sqrt(static_cast<double>(hd));
                    mx = std::max(mx, s[j]);
                }
                double z = 0.0;
                for (auto& e : s) z += (e = std::exp(e - mx));
                for (auto& e : s) e /= z;
                for (std::size_t j = 0; j <= i; ++j)
                    for (std::size_t t = 0; t < hd; ++t) attn[i][h * hd + t] += s[j] * v[j][h * hd + t];
                out.probs[l][h][i] = std::move(s);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            Vec o = mat_vec(w.wo, attn[i]);
            for (std::size_t j = 0; j < d; ++j) x[i][j] += o[j];
            Vec hn = rms(x[i], w.ffn_norm);
            Vec g = mat_vec(w.w_gate, hn), u = mat_vec(w.w_up, hn);
            for (std::size_t f = 0; f < g.size(); ++f) g[f] = g[f] / (1.0 + std::exp(-g[f])) * u[f];
            Vec dn = mat_vec(w.w_down, g);
            for (std::size_t j = 0; j < d; ++j) x[i][j] += dn[j];
        }
    }
    Vec hn = rms(x[n - 1], model.final_norm());
    out.logits = mat_vec(model.lm_head(), hn);
    return out;
}

inline Forward forward(const Model& model, const std::vector<TokenId>& tokens) {
    std::vector<std::uint32_t> pos(tokens.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<std::uint32_t>(i);
    return forward(model, tokens, pos);
}

}  // namespace kvc::oracle

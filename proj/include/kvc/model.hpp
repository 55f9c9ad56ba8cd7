// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kvc/common.hpp"
#include "kvc/tensor.hpp"
#include "kvc/vocabulary.hpp"

namespace kvc {

struct ModelConfig {
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t hidden_size = 32;
    std::size_t head_dim = 16;
    std::size_t ffn_size = 64;
    std::size_t vocab_size = 0;
    std::size_t max_position = 81920;
    bool rotary_enabled = true;
    float rotary_base = 10000.0f;

    /// Throws InvalidArgument when hidden_size != n_heads * head_dim, vocab_size < 2,
    /// max_position < 1, or head_dim is odd while rotary is enabled.
    void validate() const;

    /// The small reference model every experiment defaults to.
    static ModelConfig reference(std::size_t vocab_size);

    /// Diagnostic model shape: one head wide enough for the token codes, no rotary.
    static ModelConfig diagnostic(std::size_t vocab_size, std::size_t n_layers = 1);

    bool operator==(const ModelConfig&) const = default;
};

struct LayerWeights {
    std::vector<float> attention_norm;  // [d]
    Matrix wq, wk, wv, wo;              // [d x d]
    std::vector<float> ffn_norm;        // [d]
    Matrix w_gate;                      // [ffn x d]
    Matrix w_up;                        // [ffn x d]
    Matrix w_down;                      // [d x ffn]
};

/// Immutable decoder-only transformer (pre-norm, RMSNorm, SwiGLU MLP, rotary on q/k).
///
/// Tensor names in the weight container:
///   tok_embeddings.weight             [vocab, d]
///   layers.{i}.attention_norm.weight  [d]
///   layers.{i}.attention.w{q,k,v,o}.weight [d, d]
///   layers.{i}.ffn_norm.weight        [d]
///   layers.{i}.feed_forward.w1.weight [ffn, d]   (gate)
///   layers.{i}.feed_forward.w3.weight [ffn, d]   (up)
///   layers.{i}.feed_forward.w2.weight [d, ffn]   (down)
///   norm.weight                       [d]
///   output.weight                     [vocab, d]
class Model {
public:
    Model(ModelConfig config, Matrix embedding, std::vector<LayerWeights> layers, std::vector<float> final_norm,
          Matrix lm_head);

    const ModelConfig& config() const { return m_config; }
    const Matrix& embedding() const { return m_embedding; }
    const std::vector<LayerWeights>& layers() const { return m_layers; }
    const std::vector<float>& final_norm() const { return m_final_norm; }
    const Matrix& lm_head() const { return m_lm_head; }

    /// SHA-256 over the config and every tensor payload.
    const Digest& fingerprint() const { return m_fingerprint; }

    /// Rotary table lookups; only valid when rotary is enabled.
    const float* rope_cos(std::uint32_t position) const { return m_rope_cos.data() + position * (m_config.head_dim / 2); }
    const float* rope_sin(std::uint32_t position) const { return m_rope_sin.data() + position * (m_config.head_dim / 2); }

private:
    ModelConfig m_config;
    Matrix m_embedding;
    std::vector<LayerWeights> m_layers;
    std::vector<float> m_final_norm;
    Matrix m_lm_head;
    Digest m_fingerprint{};
    std::vector<float> m_rope_cos;
    std::vector<float> m_rope_sin;
};

/// Weights uniform in [-1/sqrt(d), 1/sqrt(d)], norms set to one. Deterministic per seed.
Model init_random_model(const ModelConfig& config, std::uint64_t seed);

/// Number of code dimensions the diagnostic model uses per token.
std::size_t diagnostic_code_width(const ModelConfig& config);

/// Hand-built model whose attention from a token peaks on cached tokens with the same id.
///
/// Every ordinary token embeds as [code_t, 1, 0] where code_t is a unit-norm +-1/sqrt(w)
/// sign vector (pairwise |cos| <= 0.45); <bos> and <sep> embed as [0, 0, sqrt(2)] and act
/// as attention sinks. q.k / sqrt(d_k) is 24 * cos(code_t, code_u) between ordinary tokens
/// and 24 * 0.7 against a sink. Output and MLP projections are zero so the residual stream
/// stays equal to the embedding in every layer; the lm head is tied to the embedding.
/// Requires n_heads == 1, head_dim >= 34 and rotary disabled.
Model init_diagnostic_model(const ModelConfig& config, const Vocabulary& vocab);

void save_weights(const Model& model, const std::string& path);

/// Loads a KVCW container. Errors name the offending tensor.
Model load_weights(const std::string& path, const ModelConfig& config);

}  // namespace kvc

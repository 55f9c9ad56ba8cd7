// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/model.hpp"

#include <cmath>
#include <map>

namespace kvc {

namespace {

constexpr char kWeightMagic[4] = {'K', 'V', 'C', 'W'};
constexpr std::uint32_t kWeightVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

// Diagnostic model constants (see init_diagnostic_model).
constexpr float kDiagMatchLogit = 24.0f;
constexpr float kDiagSinkFraction = 0.7f;
constexpr double kDiagMaxCoherence = 0.45;
constexpr std::uint64_t kDiagCodeSeed = 0x6b7663646961ULL;

std::string layer_name(std::size_t i, const char* suffix) {
    return "layers." + std::to_string(i) + "." + suffix;
}

void fill_uniform(std::span<float> values, Rng& rng, float bound) {
    for (auto& v : values) v = rng.uniform(-bound, bound);
}

}  // namespace

void ModelConfig::validate() const {
    KVC_CHECK(n_layers >= 1, ErrorCode::InvalidArgument, "n_layers must be >= 1");
    KVC_CHECK(n_heads >= 1, ErrorCode::InvalidArgument, "n_heads must be >= 1");
    KVC_CHECK(hidden_size == n_heads * head_dim, ErrorCode::InvalidArgument,
              "hidden_size must equal n_heads * head_dim");
    KVC_CHECK(vocab_size >= 2, ErrorCode::InvalidArgument, "vocab_size must be >= 2");
    KVC_CHECK(max_position >= 1, ErrorCode::InvalidArgument, "max_position must be >= 1");
    KVC_CHECK(ffn_size >= 1, ErrorCode::InvalidArgument, "ffn_size must be >= 1");
    KVC_CHECK(!rotary_enabled || head_dim % 2 == 0, ErrorCode::InvalidArgument,
              "rotary requires an even head_dim");
}

ModelConfig ModelConfig::reference(std::size_t vocab_size) {
    ModelConfig c;
    c.vocab_size = vocab_size;
    return c;
}

ModelConfig ModelConfig::diagnostic(std::size_t vocab_size, std::size_t n_layers) {
    ModelConfig c;
    c.n_layers = n_layers;
    c.n_heads = 1;
    c.hidden_size = 64;
    c.head_dim = 64;
    c.ffn_size = 8;
    c.vocab_size = vocab_size;
    c.max_position = 40960;
    c.rotary_enabled = false;
    return c;
}

Model::Model(ModelConfig config, Matrix embedding, std::vector<LayerWeights> layers, std::vector<float> final_norm,
             Matrix lm_head)
    : m_config(config),
      m_embedding(std::move(embedding)),
      m_layers(std::move(layers)),
      m_final_norm(std::move(final_norm)),
      m_lm_head(std::move(lm_head)) {
    m_config.validate();
    const std::size_t d = m_config.hidden_size;
    KVC_CHECK(m_layers.size() == m_config.n_layers, ErrorCode::InvalidArgument, "layer count mismatch");
    KVC_CHECK(m_embedding.rows() == m_config.vocab_size && m_embedding.cols() == d, ErrorCode::InvalidArgument,
              "embedding shape mismatch");
    KVC_CHECK(m_lm_head.rows() == m_config.vocab_size && m_lm_head.cols() == d, ErrorCode::InvalidArgument,
              "lm head shape mismatch");

    Hasher h;
    for (auto v : {m_config.n_layers, m_config.n_heads, m_config.hidden_size, m_config.head_dim,
                   m_config.ffn_size, m_config.vocab_size, m_config.max_position}) {
        h.update_pod(static_cast<std::uint64_t>(v));
    }
    h.update_pod(static_cast<std::uint8_t>(m_config.rotary_enabled));
    h.update_pod(m_config.rotary_base);
    auto hash_span = [&h](std::span<const float> s) { h.update(s.data(), s.size_bytes()); };
    hash_span(m_embedding.data());
    for (const auto& l : m_layers) {
        hash_span(l.attention_norm);
        for (const Matrix* m : {&l.wq, &l.wk, &l.wv, &l.wo}) hash_span(m->data());
        hash_span(l.ffn_norm);
        for (const Matrix* m : {&l.w_gate, &l.w_up, &l.w_down}) hash_span(m->data());
    }
    hash_span(m_final_norm);
    hash_span(m_lm_head.data());
    m_fingerprint = h.finish();

    if (m_config.rotary_enabled) {
        const std::size_t half = m_config.head_dim / 2;
        m_rope_cos.resize(m_config.max_position * half);
        m_rope_sin.resize(m_config.max_position * half);
        for (std::size_t p = 0; p < m_config.max_position; ++p) {
            for (std::size_t i = 0; i < half; ++i) {
                double inv_freq = std::pow(static_cast<double>(m_config.rotary_base),
                                           -2.0 * static_cast<double>(i) / static_cast<double>(m_config.head_dim));
                double angle = static_cast<double>(p) * inv_freq;
                m_rope_cos[p * half + i] = static_cast<float>(std::cos(angle));
                m_rope_sin[p * half + i] = static_cast<float>(std::sin(angle));
            }
        }
    }
}

Model init_random_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t d = config.hidden_size;
    const float bound = 1.0f / std::sqrt(static_cast<float>(d));
    Rng rng(seed);

    Matrix embedding(config.vocab_size, d);
    fill_uniform(embedding.data(), rng, bound);
    std::vector<LayerWeights> layers(config.n_layers);
    for (auto& l : layers) {
        l.attention_norm.assign(d, 1.0f);
        l.ffn_norm.assign(d, 1.0f);
        for (Matrix* m : {&l.wq, &l.wk, &l.wv, &l.wo}) {
            *m = Matrix(d, d);
            fill_uniform(m->data(), rng, bound);
        }
        l.w_gate = Matrix(config.ffn_size, d);
        l.w_up = Matrix(config.ffn_size, d);
        l.w_down = Matrix(d, config.ffn_size);
        for (Matrix* m : {&l.w_gate, &l.w_up, &l.w_down}) fill_uniform(m->data(), rng, bound);
    }
    Matrix lm_head(config.vocab_size, d);
    fill_uniform(lm_head.data(), rng, bound);
    return Model(config, std::move(embedding), std::move(layers), std::vector<float>(d, 1.0f), std::move(lm_head));
}

std::size_t diagnostic_code_width(const ModelConfig& config) { return config.head_dim - 2; }

Model init_diagnostic_model(const ModelConfig& config, const Vocabulary& vocab) {
    config.validate();
    KVC_CHECK(config.n_heads == 1, ErrorCode::InvalidArgument, "diagnostic model needs a single head");
    KVC_CHECK(config.head_dim >= 34, ErrorCode::InvalidArgument, "diagnostic model needs head_dim >= 34");
    KVC_CHECK(!config.rotary_enabled, ErrorCode::InvalidArgument, "diagnostic model runs without rotary");
    KVC_CHECK(config.vocab_size == vocab.size(), ErrorCode::InvalidArgument, "vocab size mismatch");

    const std::size_t d = config.hidden_size;
    const std::size_t w = diagnostic_code_width(config);
    const std::size_t bias_dim = w;
    const std::size_t sink_dim = w + 1;
    const float sqrt2 = std::sqrt(2.0f);

    // Greedy rejection sampling of sign codes with bounded pairwise coherence.
    Rng rng(kDiagCodeSeed);
    std::vector<std::vector<int>> codes;
    codes.reserve(config.vocab_size);
    const int max_dot = static_cast<int>(std::floor(kDiagMaxCoherence * static_cast<double>(w)));
    while (codes.size() < config.vocab_size) {
        std::vector<int> c(w);
        for (auto& s : c) s = (rng.next() >> 63) ? 1 : -1;
        bool ok = true;
        for (const auto& other : codes) {
            int dot = 0;
            for (std::size_t i = 0; i < w; ++i) dot += c[i] * other[i];
            if (std::abs(dot) > max_dot) {
                ok = false;
                break;
            }
        }
        if (ok) codes.push_back(std::move(c));
    }

    Matrix embedding(config.vocab_size, d);
    const float code_scale = 1.0f / std::sqrt(static_cast<float>(w));
    for (std::size_t t = 0; t < config.vocab_size; ++t) {
        if (t == special::kBos || t == special::kSep) {
            embedding(t, sink_dim) = sqrt2;
            continue;
        }
        for (std::size_t i = 0; i < w; ++i) embedding(t, i) = static_cast<float>(codes[t][i]) * code_scale;
        embedding(t, bias_dim) = 1.0f;
    }

    // Every embedding has norm sqrt(2), so this norm weight makes RMSNorm the identity.
    const float norm_weight = std::sqrt(2.0f / static_cast<float>(d));
    const float proj = std::sqrt(kDiagMatchLogit * std::sqrt(static_cast<float>(config.head_dim)));

    std::vector<LayerWeights> layers(config.n_layers);
    for (auto& l : layers) {
        l.attention_norm.assign(d, norm_weight);
        l.ffn_norm.assign(d, 1.0f);
        l.wq = Matrix(d, d);
        l.wk = Matrix(d, d);
        l.wv = Matrix(d, d);
        l.wo = Matrix(d, d);
        for (std::size_t i = 0; i < w; ++i) {
            l.wq(i, i) = proj;
            l.wk(i, i) = proj;
        }
        l.wq(bias_dim, bias_dim) = proj;
        l.wk(bias_dim, sink_dim) = proj * kDiagSinkFraction / sqrt2;
        for (std::size_t i = 0; i < d; ++i) l.wv(i, i) = 1.0f;
        l.w_gate = Matrix(config.ffn_size, d);
        l.w_up = Matrix(config.ffn_size, d);
        l.w_down = Matrix(d, config.ffn_size);
    }
    Matrix lm_head = embedding;
    return Model(config, std::move(embedding), std::move(layers), std::vector<float>(d, norm_weight),
                 std::move(lm_head));
}

namespace {

void write_tensor(BinaryWriter& out, const std::string& name, std::span<const std::uint64_t> dims,
                  std::span<const float> payload) {
    out.u32(static_cast<std::uint32_t>(name.size()));
    out.bytes(name.data(), name.size());
    out.u8(kDtypeF32);
    out.u8(static_cast<std::uint8_t>(dims.size()));
    for (auto dim : dims) out.u64(dim);
    out.f32s(payload);
}

struct RawTensor {
    std::vector<std::uint64_t> dims;
    std::vector<float> payload;
};

}  // namespace

void save_weights(const Model& model, const std::string& path) {
    const auto& c = model.config();
    BinaryWriter out;
    out.bytes(kWeightMagic, 4);
    out.u32(kWeightVersion);
    out.u32(static_cast<std::uint32_t>(3 + 9 * c.n_layers));

    auto mat = [&](const std::string& name, const Matrix& m) {
        std::uint64_t dims[2] = {m.rows(), m.cols()};
        write_tensor(out, name, dims, m.data());
    };
    auto vec = [&](const std::string& name, const std::vector<float>& x) {
        std::uint64_t dims[1] = {x.size()};
        write_tensor(out, name, dims, x);
    };
    mat("tok_embeddings.weight", model.embedding());
    for (std::size_t i = 0; i < c.n_layers; ++i) {
        const auto& l = model.layers()[i];
        vec(layer_name(i, "attention_norm.weight"), l.attention_norm);
        mat(layer_name(i, "attention.wq.weight"), l.wq);
        mat(layer_name(i, "attention.wk.weight"), l.wk);
        mat(layer_name(i, "attention.wv.weight"), l.wv);
        mat(layer_name(i, "attention.wo.weight"), l.wo);
        vec(layer_name(i, "ffn_norm.weight"), l.ffn_norm);
        mat(layer_name(i, "feed_forward.w1.weight"), l.w_gate);
        mat(layer_name(i, "feed_forward.w3.weight"), l.w_up);
        mat(layer_name(i, "feed_forward.w2.weight"), l.w_down);
    }
    vec("norm.weight", model.final_norm());
    mat("output.weight", model.lm_head());
    out.write_file(path);
}

Model load_weights(const std::string& path, const ModelConfig& config) {
    config.validate();
    auto in = BinaryReader::from_file(path);
    char magic[4];
    in.bytes(magic, 4);
    KVC_CHECK(std::equal(magic, magic + 4, kWeightMagic), ErrorCode::Malformed, "bad magic in weight container");
    const auto version = in.u32();
    KVC_CHECK(version == kWeightVersion, ErrorCode::Incompatible,
              "unsupported weight container version " + std::to_string(version));
    const auto count = in.u32();

    std::map<std::string, RawTensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto name_len = in.u32();
        KVC_CHECK(name_len <= in.remaining(), ErrorCode::Malformed, "unexpected end of container");
        std::string name(name_len, '\0');
        in.bytes(name.data(), name_len);
        const auto dtype = in.u8();
        KVC_CHECK(dtype == kDtypeF32, ErrorCode::Malformed, "tensor " + name + ": unsupported dtype");
        const auto rank = in.u8();
        RawTensor raw;
        std::uint64_t numel = 1;
        for (std::uint8_t r = 0; r < rank; ++r) {
            raw.dims.push_back(in.u64());
            numel *= raw.dims.back();
        }
        KVC_CHECK(numel * sizeof(float) <= in.remaining(), ErrorCode::Malformed,
                  "unexpected end of container in tensor " + name);
        raw.payload.resize(numel);
        in.f32s(raw.payload);
        tensors.emplace(std::move(name), std::move(raw));
    }

    auto take = [&](const std::string& name, std::vector<std::uint64_t> dims) {
        auto it = tensors.find(name);
        KVC_CHECK(it != tensors.end(), ErrorCode::Malformed, "missing tensor " + name);
        if (it->second.dims != dims) {
            std::string got, want;
            for (auto x : it->second.dims) got += std::to_string(x) + " ";
            for (auto x : dims) want += std::to_string(x) + " ";
            throw Error(ErrorCode::Incompatible,
                        "shape mismatch for tensor " + name + ": file [" + got + "] expected [" + want + "]");
        }
        return std::move(it->second.payload);
    };
    auto mat = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        auto payload = take(name, {rows, cols});
        std::copy(payload.begin(), payload.end(), m.data().begin());
        return m;
    };
    auto vec = [&](const std::string& name, std::size_t n) { return take(name, {n}); };

    const std::size_t d = config.hidden_size, f = config.ffn_size, v = config.vocab_size;
    Matrix embedding = mat("tok_embeddings.weight", v, d);
    std::vector<LayerWeights> layers(config.n_layers);
    for (std::size_t i = 0; i < config.n_layers; ++i) {
        auto& l = layers[i];
        l.attention_norm = vec(layer_name(i, "attention_norm.weight"), d);
        l.wq = mat(layer_name(i, "attention.wq.weight"), d, d);
        l.wk = mat(layer_name(i, "attention.wk.weight"), d, d);
        l.wv = mat(layer_name(i, "attention.wv.weight"), d, d);
        l.wo = mat(layer_name(i, "attention.wo.weight"), d, d);
        l.ffn_norm = vec(layer_name(i, "ffn_norm.weight"), d);
        l.w_gate = mat(layer_name(i, "feed_forward.w1.weight"), f, d);
        l.w_up = mat(layer_name(i, "feed_forward.w3.weight"), f, d);
        l.w_down = mat(layer_name(i, "feed_forward.w2.weight"), d, f);
    }
    auto final_norm = vec("norm.weight", d);
    Matrix lm_head = mat("output.weight", v, d);
    return Model(config, std::move(embedding), std::move(layers), std::move(final_norm), std::move(lm_head));
}

}  // namespace kvc

// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/vocabulary.hpp"

#include <cctype>
#include <fstream>

namespace kvc {

Vocabulary::Vocabulary() {
    for (auto w : {"<pad>", "<bos>", "<sep>", "<unk>"}) add(w);
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
    Vocabulary v;
    for (const auto& w : words) v.add(to_lower(w));
    return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    KVC_CHECK(in.good(), ErrorCode::MissingArtifact, "vocabulary not found: " + path);
    Vocabulary v;
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        if (index < special::kCount) {
            KVC_CHECK(line == v.m_tokens[index], ErrorCode::Malformed,
                      "vocabulary special token mismatch at line " + std::to_string(index));
        } else {
            KVC_CHECK(!v.find(line).has_value(), ErrorCode::Malformed, "duplicate vocabulary token: " + line);
            v.add(line);
        }
        ++index;
    }
    return v;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    KVC_CHECK(out.good(), ErrorCode::MissingArtifact, "cannot write vocabulary: " + path);
    for (const auto& t : m_tokens) out << t << '\n';
}

TokenId Vocabulary::add(std::string_view word) {
    std::string key(word);
    if (auto it = m_ids.find(key); it != m_ids.end()) return it->second;
    auto id = static_cast<TokenId>(m_tokens.size());
    m_tokens.push_back(key);
    m_ids.emplace(std::move(key), id);
    return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
    if (auto it = m_ids.find(std::string(word)); it != m_ids.end()) return it->second;
    return std::nullopt;
}

TokenId Vocabulary::id(std::string_view word) const {
    auto found = find(word);
    KVC_CHECK(found.has_value(), ErrorCode::InvalidArgument, "unknown token: " + std::string(word));
    return *found;
}

const std::string& Vocabulary::token(TokenId id) const {
    KVC_CHECK(id < m_tokens.size(), ErrorCode::Malformed,
              "malformed sequence: token id " + std::to_string(id) + " outside vocabulary");
    return m_tokens[id];
}

Digest Vocabulary::fingerprint() const {
    Hasher h;
    for (const auto& t : m_tokens) {
        h.update(t);
        h.update("\n");
    }
    return h.finish();
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
    TokenSequence seq;
    seq.source_text = std::string(text);
    for (const auto& word : split_whitespace(to_lower(text))) {
        seq.ids.push_back(vocab.find(word).value_or(special::kUnk));
    }
    return seq;
}

std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
    std::string out;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
        if (i) out.push_back(' ');
        out += vocab.token(seq.ids[i]);
    }
    return out;
}

}  // namespace kvc

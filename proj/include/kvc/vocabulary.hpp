// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kvc/common.hpp"

namespace kvc {

using TokenId = std::uint32_t;

/// Special token ids. These are fixed for every vocabulary.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kSep = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kCount = 4;
}  // namespace special

struct TokenSequence {
    std::vector<TokenId> ids;
    std::optional<std::string> source_text;

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
};

/// Bijective word <-> id map. Ids 0..3 are <pad>, <bos>, <sep>, <unk>.
class Vocabulary {
public:
    Vocabulary();

    /// Builds a vocabulary from words in first-seen order after lowercasing.
    static Vocabulary from_words(const std::vector<std::string>& words);

    /// One token per line, line number = id.
    static Vocabulary load(const std::string& path);
    void save(const std::string& path) const;

    TokenId add(std::string_view word);
    std::optional<TokenId> find(std::string_view word) const;
    TokenId id(std::string_view word) const;  // throws if absent
    const std::string& token(TokenId id) const;

    std::size_t size() const { return m_tokens.size(); }
    const std::vector<std::string>& tokens() const { return m_tokens; }
    Digest fingerprint() const;

private:
    std::vector<std::string> m_tokens;
    std::unordered_map<std::string, TokenId> m_ids;
};

/// Lowercased whitespace-delimited word tokens; unknown words map to <unk>.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

/// Space-joined tokens. Throws Malformed on an out-of-range id.
std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab);

std::string to_lower(std::string_view text);
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace kvc

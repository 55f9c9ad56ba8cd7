// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kvc/common.hpp"
#include "kvc/vocabulary.hpp"

namespace kvc {

inline constexpr std::size_t kChunkTokens = 256;
inline constexpr std::size_t kCorpusTokens = 32768;
inline constexpr std::size_t kPeople = 32;
inline constexpr std::size_t kProjects = 32;
inline constexpr std::size_t kFillerChunks = 32;
inline constexpr std::size_t kChunkCount = kCorpusTokens / kChunkTokens;

enum class NameVariant : std::uint8_t { Distinct, Similar };

struct CorpusSpec {
    std::size_t connectivity = 2;
    std::uint64_t seed = 1;
    NameVariant variant = NameVariant::Distinct;
    std::size_t questions_per_kind = 25;

    /// Throws InvalidArgument when connectivity is outside [1, 8].
    void validate() const;
};

struct PersonRecord {
    std::string name;
    std::string age;
    std::string occupation;
    std::string city;
    std::vector<std::string> hobbies;
};

struct ProjectRecord {
    std::string title;
    std::string domain;
    std::string sponsor;
    std::string year_started;
    std::string summary;
};

struct MembershipLink {
    std::size_t project = 0;  // index into the project list
    std::string role;
    std::string department;
};

struct MembershipRecord {
    std::size_t person = 0;
    std::vector<MembershipLink> links;
};

enum class ChunkKind : std::uint8_t { Person, Project, Membership, Filler };

struct ChunkDoc {
    std::size_t id = 0;  // rank in corpus order; the chunk starts at token id * 256
    ChunkKind kind = ChunkKind::Filler;
    std::string text;
    std::vector<TokenId> tokens;
    std::vector<std::string> refs;  // "person:<name>", "project:<title>"
};

enum class QuestionKind : std::uint8_t { Direct, Join };

struct Question {
    std::string id;
    QuestionKind kind = QuestionKind::Direct;
    std::size_t template_id = 0;  // 0-2 direct, 3-5 join
    std::string text;
    std::string subject;  // the person name the question is about
    std::vector<std::string> answers;
    std::vector<std::size_t> evidence;  // chunk ids, membership chunk first
    std::vector<std::uint32_t> gold_positions;
};

struct CorpusBundle {
    CorpusSpec spec;
    std::vector<PersonRecord> people;
    std::vector<ProjectRecord> projects;
    std::vector<MembershipRecord> memberships;
    std::vector<ChunkDoc> chunks;  // corpus order
    std::vector<Question> questions;
    Vocabulary vocab;

    /// Concatenation of all chunk tokens (32,768 ids).
    TokenSequence corpus_tokens() const;

    /// SHA-256 over the corpus token ids.
    Digest fingerprint() const;

    const Question& question(const std::string& id) const;
};

const char* to_string(ChunkKind kind);
const char* to_string(QuestionKind kind);
const char* to_string(NameVariant variant);

/// The fixed vocabulary shared by every generated corpus, whatever the seed.
Vocabulary corpus_vocabulary();

/// Records and chunks for a CorpusSpec; questions are left empty.
CorpusBundle generate_corpus(const CorpusSpec& spec);

/// `per_kind` direct and `per_kind` join questions, templates used round-robin.
std::vector<Question> generate_questions(const CorpusBundle& bundle, std::size_t per_kind, std::uint64_t seed);

/// generate_corpus + generate_questions with spec.questions_per_kind and spec.seed.
CorpusBundle generate_bundle(const CorpusSpec& spec);

/// Same structure with people renamed Person_01..Person_32.
CorpusBundle generate_similar_names_variant(const CorpusSpec& spec);

/// Corpus offsets of every answer-token occurrence inside the evidence chunks.
/// Throws Internal when an answer token is missing from its evidence.
std::vector<std::uint32_t> compute_gold_token_positions(const CorpusBundle& bundle, const Question& question);

/// Corpus offsets of every occurrence of the word (lowercased) anywhere in the corpus.
std::vector<std::uint32_t> token_occurrences(const CorpusBundle& bundle, const std::string& word);

/// Writes corpus.jsonl, questions.jsonl, spec.json and vocab.txt.
void save_bundle(const CorpusBundle& bundle, const std::string& dir);

/// Reads a bundle directory. Record fields are not persisted and stay empty.
CorpusBundle load_bundle(const std::string& dir);

}  // namespace kvc

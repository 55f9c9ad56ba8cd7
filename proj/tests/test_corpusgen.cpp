// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "kvc/corpus.hpp"
#include "test_util.hpp"

using namespace kvc;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

CorpusSpec spec_for(std::size_t c, std::uint64_t seed = 1) {
    CorpusSpec s;
    s.connectivity = c;
    s.seed = seed;
    return s;
}

// Words of a chunk's text, lowercased, as a scan target independent of token ids.
std::vector<std::string> words_of(const ChunkDoc& c) { return split_whitespace(to_lower(c.text)); }

}  // namespace

TEST(Corpus, EveryLevelHasExactSize) {
    for (std::size_t c = 1; c <= 8; ++c) {
        auto b = generate_bundle(spec_for(c));
        ASSERT_EQ(b.chunks.size(), 128u);
        std::size_t total = 0;
        std::map<ChunkKind, int> kinds;
        for (const auto& ch : b.chunks) {
            EXPECT_EQ(ch.tokens.size(), 256u);
            EXPECT_EQ(words_of(ch).size(), 256u);
            total += ch.tokens.size();
            kinds[ch.kind]++;
        }
        EXPECT_EQ(total, 32768u);
        EXPECT_EQ(b.corpus_tokens().size(), 32768u);
        for (auto k : {ChunkKind::Person, ChunkKind::Project, ChunkKind::Membership, ChunkKind::Filler})
            EXPECT_EQ(kinds[k], 32);
    }
}

TEST(Corpus, ConnectivityControlsLinks) {
    for (std::size_t c : {1u, 2u, 5u, 8u}) {
        auto b = generate_corpus(spec_for(c, 3));
        for (const auto& m : b.memberships) {
            ASSERT_EQ(m.links.size(), c);
            std::set<std::size_t> projects;
            for (const auto& l : m.links) {
                EXPECT_LT(l.project, b.projects.size());
                projects.insert(l.project);
            }
            EXPECT_EQ(projects.size(), c);
        }
        for (const auto& ch : b.chunks) {
            if (ch.kind == ChunkKind::Membership) EXPECT_EQ(ch.refs.size(), 1 + c);
        }
    }
}

TEST(Corpus, InvalidConnectivity) {
    EXPECT_THROW(generate_corpus(spec_for(0)), Error);
    EXPECT_THROW(generate_corpus(spec_for(9)), Error);
}

TEST(Corpus, UniqueNamesAndTitles) {
    auto b = generate_corpus(spec_for(4, 9));
    std::set<std::string> names, titles, domains, sponsors, years;
    for (const auto& p : b.people) names.insert(p.name);
    for (const auto& p : b.projects) {
        titles.insert(p.title);
        domains.insert(p.domain);
        sponsors.insert(p.sponsor);
        years.insert(p.year_started);
    }
    EXPECT_EQ(names.size(), 32u);
    EXPECT_EQ(titles.size(), 32u);
    EXPECT_EQ(domains.size(), 32u);
    EXPECT_EQ(sponsors.size(), 32u);
    EXPECT_EQ(years.size(), 32u);
}

TEST(Corpus, SeedDeterminismOnDisk) {
    auto a = kvc::testing::temp_dir("corpus_a"), b = kvc::testing::temp_dir("corpus_b");
    save_bundle(generate_bundle(spec_for(2, 1)), a.string());
    save_bundle(generate_bundle(spec_for(2, 1)), b.string());
    for (auto f : {"corpus.jsonl", "questions.jsonl", "spec.json", "vocab.txt"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    auto c = kvc::testing::temp_dir("corpus_c");
    save_bundle(generate_bundle(spec_for(2, 2)), c.string());
    EXPECT_NE(slurp(a / "corpus.jsonl"), slurp(c / "corpus.jsonl"));
    EXPECT_EQ(slurp(a / "vocab.txt"), slurp(c / "vocab.txt"));
}

TEST(Corpus, SaveLoadRoundTrip) {
    auto dir = kvc::testing::temp_dir("corpus_rt");
    auto b = generate_bundle(spec_for(3, 4));
    save_bundle(b, dir.string());
    auto back = load_bundle(dir.string());
    EXPECT_EQ(back.fingerprint(), b.fingerprint());
    ASSERT_EQ(back.questions.size(), b.questions.size());
    for (std::size_t i = 0; i < b.questions.size(); ++i) {
        EXPECT_EQ(back.questions[i].text, b.questions[i].text);
        EXPECT_EQ(back.questions[i].gold_positions, b.questions[i].gold_positions);
        EXPECT_EQ(back.questions[i].evidence, b.questions[i].evidence);
    }
    EXPECT_EQ(back.spec.connectivity, 3u);
    EXPECT_THROW(load_bundle((dir / "nope").string()), Error);
}

TEST(Questions, CountsPerLevel) {
    std::size_t total = 0;
    std::set<std::string> ids;
    for (std::size_t c = 1; c <= 8; ++c) {
        auto b = generate_bundle(spec_for(c));
        std::size_t direct = 0, join = 0;
        std::set<std::string> texts;
        for (const auto& q : b.questions) {
            (q.kind == QuestionKind::Direct ? direct : join)++;
            texts.insert(q.text);
            ids.insert(q.id);
        }
        EXPECT_EQ(direct, 25u);
        EXPECT_EQ(join, 25u);
        EXPECT_EQ(texts.size(), 50u);
        total += b.questions.size();
    }
    EXPECT_EQ(total, 400u);
    EXPECT_EQ(ids.size(), 400u);
}

TEST(Questions, EvidenceSizeLaw) {
    for (std::size_t c = 1; c <= 8; ++c) {
        auto b = generate_bundle(spec_for(c, 5));
        for (const auto& q : b.questions) {
            const auto& mem = b.chunks.at(q.evidence.front());
            EXPECT_EQ(mem.kind, ChunkKind::Membership);
            auto subject = split_whitespace(to_lower(mem.refs.front().substr(7)));
            EXPECT_EQ(subject.front(), q.subject);
            if (q.kind == QuestionKind::Direct) {
                EXPECT_EQ(q.evidence.size(), 1u);
            } else {
                EXPECT_EQ(q.evidence.size(), 1 + c);
                for (std::size_t i = 1; i < q.evidence.size(); ++i)
                    EXPECT_EQ(b.chunks.at(q.evidence[i]).kind, ChunkKind::Project);
            }
        }
    }
}

TEST(Questions, SponsorJoinAtLevelThree) {
    auto b = generate_bundle(spec_for(3, 2));
    bool seen = false;
    for (const auto& q : b.questions) {
        if (q.template_id != 5) continue;
        seen = true;
        EXPECT_EQ(q.text.rfind("who sponsors ", 0), 0u);
        EXPECT_EQ(q.answers.size(), 3u);
        EXPECT_EQ(q.evidence.size(), 4u);
        // every sponsor sits in exactly one of the project chunks
        for (const auto& a : q.answers) {
            int hits = 0;
            for (std::size_t i = 1; i < q.evidence.size(); ++i) {
                auto w = words_of(b.chunks[q.evidence[i]]);
                hits += std::count(w.begin(), w.end(), to_lower(a)) > 0;
            }
            EXPECT_EQ(hits, 1) << a;
        }
    }
    EXPECT_TRUE(seen);
}

TEST(Questions, AnswersAppearVerbatimInEvidence) {
    for (std::size_t c : {1u, 4u, 8u}) {
        auto b = generate_bundle(spec_for(c, 7));
        for (const auto& q : b.questions) {
            for (const auto& a : q.answers) {
                bool found = false;
                for (auto e : q.evidence) {
                    auto w = words_of(b.chunks[e]);
                    found |= std::find(w.begin(), w.end(), to_lower(a)) != w.end();
                }
                EXPECT_TRUE(found) << q.id << " " << a;
            }
        }
    }
}

TEST(Questions, GoldPositionsMatchScan) {
    auto b = generate_bundle(spec_for(2, 8));
    for (const auto& q : b.questions) {
        std::vector<std::uint32_t> expect;
        for (auto e : q.evidence) {
            auto w = words_of(b.chunks[e]);
            for (std::size_t i = 0; i < w.size(); ++i) {
                for (const auto& a : q.answers)
                    if (w[i] == to_lower(a)) expect.push_back(static_cast<std::uint32_t>(e * 256 + i));
            }
        }
        std::sort(expect.begin(), expect.end());
        expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
        EXPECT_EQ(q.gold_positions, expect) << q.id;
        for (auto p : q.gold_positions) EXPECT_LT(p, 32768u);
        EXPECT_EQ(compute_gold_token_positions(b, q), q.gold_positions);
    }
}

TEST(Questions, JoinPositionsSpreadOverProjects) {
    auto b = generate_bundle(spec_for(2, 3));
    for (const auto& q : b.questions) {
        if (q.template_id != 3) continue;
        std::set<std::size_t> chunks;
        for (auto p : q.gold_positions) chunks.insert(p / 256);
        EXPECT_EQ(chunks.size(), 2u);
    }
}

TEST(Questions, TooManyRequested) {
    auto b = generate_corpus(spec_for(1));
    EXPECT_THROW(generate_questions(b, 97, 1), Error);
    EXPECT_EQ(generate_questions(b, 96, 1).size(), 192u);
}

TEST(Questions, FillerHoldsNoAnswers) {
    auto b = generate_bundle(spec_for(6, 2));
    std::set<std::string> answers;
    for (const auto& q : b.questions)
        for (const auto& a : q.answers) answers.insert(to_lower(a));
    for (const auto& ch : b.chunks) {
        if (ch.kind != ChunkKind::Filler) continue;
        for (const auto& w : words_of(ch)) EXPECT_EQ(answers.count(w), 0u) << w;
    }
}

TEST(SimilarNames, RenamesOnly) {
    auto base = generate_bundle(spec_for(2, 6));
    auto sim = generate_similar_names_variant(spec_for(2, 6));
    for (std::size_t i = 0; i < 32; ++i) {
        char expect[16];
        std::snprintf(expect, sizeof expect, "Person_%02zu", i + 1);
        EXPECT_EQ(sim.people[i].name, expect);
    }
    ASSERT_EQ(sim.chunks.size(), base.chunks.size());
    for (std::size_t i = 0; i < base.chunks.size(); ++i) {
        EXPECT_EQ(sim.chunks[i].kind, base.chunks[i].kind);
        EXPECT_EQ(sim.chunks[i].tokens.size(), 256u);
    }
    ASSERT_EQ(sim.questions.size(), 50u);
    EXPECT_EQ(sim.questions[0].subject.rfind("person_", 0), 0u);
    EXPECT_EQ(sim.questions[0].evidence, base.questions[0].evidence);
}

TEST(Corpus, TokenOccurrencesFindEveryMention) {
    auto b = generate_bundle(spec_for(2, 1));
    const auto& q = b.questions.front();
    auto occ = token_occurrences(b, q.subject);
    // profile chunk names the person three times, membership chunk once plus once per link
    EXPECT_EQ(occ.size(), 3u + 1u + 2u);
    EXPECT_TRUE(token_occurrences(b, "no_such_word").empty());
}

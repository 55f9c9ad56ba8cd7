// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "kvc/eval.hpp"
#include "test_util.hpp"

using namespace kvc;

namespace {

std::vector<std::string> lines_of(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

// Record JSON with the timing block blanked.
std::string without_timings(const RunRecord& r) {
    RunRecord c = r;
    c.timings = {};
    return record_to_json(c);
}

class SuiteFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        CorpusSpec spec;
        spec.connectivity = 2;
        spec.seed = 3;
        bundle_ = new CorpusBundle(generate_bundle(spec));
        model_ = new Model(init_diagnostic_model(ModelConfig::diagnostic(bundle_->vocab.size(), 1), bundle_->vocab));
    }
    static void TearDownTestSuite() {
        delete bundle_;
        delete model_;
    }
    static CorpusBundle* bundle_;
    static Model* model_;
};

CorpusBundle* SuiteFixture::bundle_ = nullptr;
Model* SuiteFixture::model_ = nullptr;

}  // namespace

TEST(Score, NormalizeExamples) {
    EXPECT_EQ(normalize("Alpha, Beta."), (std::vector<std::string>{"alpha", "beta"}));
    EXPECT_TRUE(normalize("").empty());
    EXPECT_EQ(normalize("R&D"), (std::vector<std::string>{"rd"}));
    EXPECT_EQ(normalize("  what 's  up ?"), (std::vector<std::string>{"what", "s", "up"}));
}

TEST(Score, WordOverlapExamples) {
    EXPECT_DOUBLE_EQ(word_overlap("alpha beta", {"Alpha", "Beta"}), 1.0);
    EXPECT_DOUBLE_EQ(word_overlap("alpha", {"Alpha", "Beta"}), 0.5);
    EXPECT_DOUBLE_EQ(word_overlap("", {"Alpha", "Beta"}), 0.0);
    EXPECT_DOUBLE_EQ(word_overlap("beta beta gamma", {"Alpha", "Beta", "Beta"}), 0.5);
    EXPECT_THROW(word_overlap("x", {}), Error);
    EXPECT_THROW(word_overlap("x", {"..."}), Error);
}

TEST(Score, GoldTextScoresOneForEveryQuestion) {
    for (std::size_t c = 1; c <= 8; ++c) {
        CorpusSpec spec;
        spec.connectivity = c;
        for (const auto& q : generate_bundle(spec).questions) {
            std::string text;
            for (const auto& a : q.answers) text += a + " , ";
            EXPECT_DOUBLE_EQ(word_overlap(text, q.answers), 1.0) << q.id;
        }
    }
}

TEST(Score, MethodTags) {
    const std::vector<std::string> names = {"full",      "rag",    "kvc_zs",  "kvc_fs", "kvc_fsq",
                                            "streaming", "snapkv", "expattn", "oracle"};
    ASSERT_EQ(all_methods().size(), names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        EXPECT_EQ(to_string(all_methods()[i]), names[i]);
        EXPECT_EQ(method_from_string(names[i]), all_methods()[i]);
    }
    EXPECT_THROW(method_from_string("kvc"), Error);
}

TEST(Score, RecordJsonRoundTrip) {
    RunRecord r;
    r.record_id = "rag/512/s1/c2-s1-d00";
    r.prediction = {"c2-s1-d00", MethodTag::Rag, 512, "Aurora , Borealis", {"aurora", "borealis"}};
    r.question_kind = QuestionKind::Direct;
    r.seed = 1;
    r.connectivity = 2;
    r.corpus_seed = 1;
    r.variant = NameVariant::Similar;
    r.corpus_fingerprint = "ab";
    r.model_fingerprint = "cd";
    r.score = 0.5;
    r.evidence_recall = 1.0;
    r.timings = {0.0, 0.25, 0.5, 0.75};
    const auto line = record_to_json(r);
    const auto back = record_from_json(line);
    EXPECT_EQ(record_to_json(back), line);
    EXPECT_FALSE(back.retention);
    EXPECT_EQ(back.variant, NameVariant::Similar);
    EXPECT_EQ(back.question_kind, QuestionKind::Direct);

    auto bad = line;
    bad.replace(bad.find("\"schema_version\":1"), 18, "\"schema_version\":7");
    try {
        record_from_json(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Malformed);
    }
    EXPECT_THROW(record_from_json("{\"schema_version\":1"), Error);
}

TEST(Score, FewShotIndicesAreSeeded) {
    CorpusSpec spec;
    auto b = generate_bundle(spec);
    auto a = few_shot_indices(b, 3, 1);
    EXPECT_EQ(a, few_shot_indices(b, 3, 1));
    EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 3u);
    EXPECT_NE(a, few_shot_indices(b, 3, 2));
    EXPECT_THROW(few_shot_indices(b, 50, 1), Error);
}

TEST_F(SuiteFixture, GridCountsReuseAndScores) {
    SuiteConfig cfg;
    cfg.methods = {MethodTag::Full, MethodTag::Rag, MethodTag::Oracle, MethodTag::KvcZs, MethodTag::KvcFs,
                   MethodTag::Streaming, MethodTag::SnapKv};
    cfg.budgets = {512, 1024};
    cfg.max_new_tokens = 4;
    reset_compression_calls();
    auto out = run_suite(*model_, *bundle_, cfg);
    const std::size_t eval_q = 47;
    EXPECT_EQ(out.records.size(), eval_q * (1 + 6 * 2));
    EXPECT_EQ(out.failures, 0u);
    EXPECT_EQ(out.compressions, 4u * 2u);
    EXPECT_EQ(compression_calls(), 8u);

    const auto fs = few_shot_indices(*bundle_, 3, 1);
    std::set<std::string> fs_ids;
    for (auto i : fs) fs_ids.insert(bundle_->questions[i].id);
    std::set<std::string> ids;
    for (const auto& r : out.records) {
        ids.insert(r.record_id);
        EXPECT_EQ(fs_ids.count(r.prediction.question_id), 0u);
        EXPECT_GE(r.score, 0.0);
        EXPECT_LE(r.score, 1.0);
        EXPECT_GE(r.timings.prefill_s, 0.0);
        EXPECT_GE(r.timings.first_token_s, r.timings.retrieve_s);
        EXPECT_LE(r.prediction.raw_text.empty() ? 0u : split_whitespace(r.prediction.raw_text).size(), 4u);
        const auto& q = bundle_->question(r.prediction.question_id);
        switch (r.prediction.method) {
            case MethodTag::Oracle: {
                ASSERT_TRUE(r.evidence_recall);
                const double b = static_cast<double>(chunks_in_budget(r.prediction.budget));
                EXPECT_DOUBLE_EQ(*r.evidence_recall, std::min(1.0, b / q.evidence.size()));
                break;
            }
            case MethodTag::Rag:
                ASSERT_TRUE(r.evidence_recall);
                EXPECT_LE(*r.evidence_recall, 1.0);
                break;
            case MethodTag::Full:
                EXPECT_EQ(r.prediction.budget, 32768u);
                EXPECT_FALSE(r.retention);
                break;
            default:
                ASSERT_TRUE(r.retention);
                EXPECT_GE(*r.retention, 0.0);
                EXPECT_LE(*r.retention, 1.0);
        }
    }
    EXPECT_EQ(ids.size(), out.records.size());
}

TEST_F(SuiteFixture, CachedAnswersMatchDirectAnswering) {
    SuiteConfig cfg;
    cfg.methods = {MethodTag::Full, MethodTag::KvcFs};
    cfg.budgets = {1024};
    cfg.max_new_tokens = 3;
    auto out = run_suite(*model_, *bundle_, cfg);
    GenerationParams params;
    params.max_new_tokens = 3;
    params.stop_tokens = {special::kSep};
    const auto ctx = bundle_->corpus_tokens();
    const auto fs = few_shot_indices(*bundle_, 3, 1);
    GuidancePrompt g;
    g.kind = GuidanceKind::FewShot;
    for (auto i : fs) {
        std::string a;
        for (const auto& s : bundle_->questions[i].answers) a += (a.empty() ? "" : " , ") + s;
        g.examples.push_back({bundle_->questions[i].text, a});
    }
    auto cc = compress_iterative(*model_, bundle_->vocab, ctx, g, {1024, BudgetSchedule::Proportional},
                                 plan_chunks(ctx.size(), 2));
    std::map<MethodTag, int> checked;
    for (const auto& r : out.records) {
        if (checked[r.prediction.method]++ >= 3) continue;
        const auto& q = bundle_->question(r.prediction.question_id);
        const auto expect = r.prediction.method == MethodTag::Full
                                ? answer_full_context(*model_, bundle_->vocab, ctx, q.text, params)
                                : answer_with_cache(*model_, bundle_->vocab, cc, q.text, params);
        EXPECT_EQ(r.prediction.raw_text, detokenize(expect, bundle_->vocab)) << r.record_id;
    }
    EXPECT_EQ(checked[MethodTag::Full], 47);
    EXPECT_EQ(checked[MethodTag::KvcFs], 47);
}

TEST_F(SuiteFixture, RerunIsIdenticalModuloTimings) {
    SuiteConfig cfg;
    cfg.methods = {MethodTag::Rag, MethodTag::KvcZs};
    cfg.budgets = {512};
    cfg.max_new_tokens = 2;
    auto dir = kvc::testing::temp_dir("suite_rerun");
    cfg.output_path = (dir / "a.jsonl").string();
    auto a = run_suite(*model_, *bundle_, cfg);
    cfg.output_path = (dir / "b.jsonl").string();
    auto b = run_suite(*model_, *bundle_, cfg);
    auto ra = read_records((dir / "a.jsonl").string());
    auto rb = read_records((dir / "b.jsonl").string());
    ASSERT_EQ(ra.size(), 94u);
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(without_timings(ra[i]), without_timings(rb[i]));
    for (const auto& l : lines_of(cfg.output_path)) EXPECT_NE(l.find("\"schema_version\":1"), std::string::npos);
}

TEST_F(SuiteFixture, ResumeSkipsDoneRecords) {
    SuiteConfig cfg;
    cfg.methods = {MethodTag::KvcZs, MethodTag::Streaming};
    cfg.budgets = {512, 1024};
    cfg.max_new_tokens = 2;
    auto dir = kvc::testing::temp_dir("suite_resume");
    cfg.output_path = (dir / "runs.jsonl").string();
    auto full = run_suite(*model_, *bundle_, cfg);
    ASSERT_EQ(full.records.size(), 188u);

    // simulate an interrupt: keep the first 60 lines and a torn 61st
    auto lines = lines_of(cfg.output_path);
    {
        std::ofstream out(cfg.output_path, std::ios::trunc);
        for (std::size_t i = 0; i < 60; ++i) out << lines[i] << '\n';
        out << lines[60].substr(0, 40);
    }
    cfg.resume = true;
    auto resumed = run_suite(*model_, *bundle_, cfg);
    EXPECT_EQ(resumed.skipped, 60u);
    EXPECT_EQ(resumed.records.size(), 128u);
    // kvc_zs@512 finished inside the first 47 lines; the other three pairs compress once
    EXPECT_EQ(resumed.compressions, 3u);
    auto all = read_records(cfg.output_path);
    ASSERT_EQ(all.size(), 188u);
    std::set<std::string> ids;
    for (const auto& r : all) ids.insert(r.record_id);
    EXPECT_EQ(ids.size(), 188u);
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(without_timings(all[i]), without_timings(full.records[i]));

    resumed = run_suite(*model_, *bundle_, cfg);
    EXPECT_EQ(resumed.records.size(), 0u);
    EXPECT_EQ(resumed.compressions, 0u);
}

TEST_F(SuiteFixture, FailuresAreRecordedNotThrown) {
    SuiteConfig cfg;
    cfg.methods = {MethodTag::Rag, MethodTag::Streaming};
    cfg.budgets = {100};
    cfg.max_new_tokens = 1;
    auto out = run_suite(*model_, *bundle_, cfg);
    EXPECT_EQ(out.records.size(), 94u);
    EXPECT_EQ(out.failures, 0u + 47u);  // rag needs one whole chunk; streaming fits in 100
    for (const auto& r : out.records) {
        if (r.prediction.method == MethodTag::Rag) {
            ASSERT_TRUE(r.error);
            EXPECT_NE(r.error->find("256"), std::string::npos);
            EXPECT_EQ(r.score, 0.0);
        } else {
            EXPECT_FALSE(r.error);
        }
    }
}

TEST_F(SuiteFixture, QueryAwareCompressesPerQuestion) {
    CorpusBundle small = *bundle_;
    small.questions.resize(10);
    SuiteConfig cfg;
    cfg.methods = {MethodTag::KvcFsq, MethodTag::KvcFs};
    cfg.budgets = {512};
    cfg.max_new_tokens = 1;
    auto out = run_suite(*model_, small, cfg);
    EXPECT_EQ(out.records.size(), 14u);
    EXPECT_EQ(out.compressions, 7u + 1u);
    for (const auto& r : out.records) {
        ASSERT_TRUE(r.retention);
        if (r.prediction.method == MethodTag::KvcFsq) {
            const auto& q = small.question(r.prediction.question_id);
            EXPECT_GT(r.timings.compress_s, 0.0);
            (void)q;
        }
    }
}

TEST_F(SuiteFixture, RejectsBadConfig) {
    SuiteConfig cfg;
    EXPECT_THROW(run_suite(*model_, *bundle_, cfg), Error);
    cfg.methods = {MethodTag::Rag};
    cfg.budgets.clear();
    EXPECT_THROW(run_suite(*model_, *bundle_, cfg), Error);
    auto other = init_random_model(kvc::testing::small_config(50), 1);
    cfg.budgets = {512};
    try {
        run_suite(other, *bundle_, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Incompatible);
    }
}

TEST_F(SuiteFixture, AttentionProfileConcentratesOnQueryEntities) {
    const auto ctx = bundle_->corpus_tokens();
    std::size_t checked = 0;
    for (const auto& q : bundle_->questions) {
        if (checked == 8) break;
        ++checked;
        GuidancePrompt g;
        g.kind = GuidanceKind::FewShotPlusQuery;
        g.query = q.text;
        auto prof = attention_profile(*model_, bundle_->vocab, ctx, g, q.text, q.answers.front());
        ASSERT_EQ(prof.mass.size(), ctx.size());
        for (double m : prof.row_mass_max) EXPECT_LE(m, 1.0 + 1e-6);
        const auto top = std::max_element(prof.mass.begin(), prof.mass.end()) - prof.mass.begin();
        // gold entities: every person or project the question names
        std::set<std::string> entities;
        for (const auto& p : bundle_->people) entities.insert(to_lower(p.name));
        for (const auto& p : bundle_->projects) entities.insert(to_lower(p.title));
        std::vector<std::uint32_t> gold;
        for (const auto& w : split_whitespace(q.text)) {
            if (!entities.count(w)) continue;
            auto occ = token_occurrences(*bundle_, w);
            gold.insert(gold.end(), occ.begin(), occ.end());
        }
        std::sort(gold.begin(), gold.end());
        EXPECT_TRUE(std::binary_search(gold.begin(), gold.end(), static_cast<std::uint32_t>(top)))
            << q.id << " top token " << bundle_->vocab.token(ctx.ids[top]);
        EXPECT_GT(prof.answer_perplexity, 1.0);
        EXPECT_TRUE(std::isfinite(prof.answer_perplexity));
    }
}

TEST(Profile, LosslessCachePerplexityMatchesFullContext) {
    auto vocab = kvc::testing::word_vocab(60);
    auto model = init_random_model(kvc::testing::small_config(vocab.size()), 11);
    Rng rng(4);
    TokenSequence ctx{kvc::testing::random_tokens(rng, 300, vocab.size()), std::nullopt};
    GuidancePrompt g;
    g.kind = GuidanceKind::FewShotPlusQuery;
    g.examples = {QaExample{vocab.token(10) + " " + vocab.token(11), vocab.token(12)}};
    g.query = vocab.token(13) + " " + vocab.token(14);
    const std::string question = vocab.token(20) + " " + vocab.token(21);
    const std::string answer = vocab.token(30) + " " + vocab.token(31) + " " + vocab.token(32);
    auto prof = attention_profile(model, vocab, ctx, g, question, answer);
    for (double m : prof.row_mass_max) EXPECT_LE(m, 1.0 + 1e-6);
    double total = 0;
    for (double m : prof.mass) total += m;
    EXPECT_LE(total, 1.0 + 1e-6);
    auto cc = compress_iterative(model, vocab, ctx, g, {300, BudgetSchedule::Proportional}, plan_chunks(300, 3));
    EXPECT_NEAR(answer_perplexity(model, vocab, cc.cache, question, answer), prof.answer_perplexity, 1e-3);
    auto small = compress_iterative(model, vocab, ctx, g, {40, BudgetSchedule::Proportional}, plan_chunks(300, 3));
    EXPECT_NE(answer_perplexity(model, vocab, small.cache, question, answer), prof.answer_perplexity);
    EXPECT_THROW(answer_perplexity(model, vocab, cc.cache, question, ""), Error);

    auto dir = kvc::testing::temp_dir("profile_csv");
    write_profile_csv(prof, ctx, vocab, {0, 5}, (dir / "p.csv").string());
    auto lines = lines_of((dir / "p.csv").string());
    ASSERT_EQ(lines.size(), 302u);
    EXPECT_EQ(lines[0], "position,token,mass,gold");
    EXPECT_EQ(lines[1].substr(lines[1].size() - 2), ",1");
    EXPECT_EQ(lines[2].substr(lines[2].size() - 2), ",0");
}

TEST(Ttft, RecordsAndInfeasibility) {
    auto vocab = corpus_vocabulary();
    auto cfg = ModelConfig::reference(vocab.size());
    auto model = init_random_model(cfg, 2);
    TtftOptions opts;
    opts.scratch_dir = kvc::testing::temp_dir("ttft").string();
    for (auto s : {TtftScenario::Full, TtftScenario::Rag, TtftScenario::Kvc}) {
        auto r = measure_ttft(model, vocab, s, 2048, 512, 64, opts);
        EXPECT_TRUE(r.feasible);
        EXPECT_EQ(r.repetitions, 5u);
        EXPECT_GT(r.median_s, 0.0);
        EXPECT_LE(r.min_s, r.median_s);
        EXPECT_LE(r.prefill_median_s, r.median_s);
        if (s == TtftScenario::Rag) EXPECT_GT(r.retrieve_median_s, 0.0);
        if (s == TtftScenario::Kvc) EXPECT_GT(r.compress_s, 0.0);
        if (s == TtftScenario::Full) EXPECT_EQ(r.budget_tokens, 2048u);
    }
    cfg.max_position = 4096;
    auto tiny = init_random_model(cfg, 2);
    auto r = measure_ttft(tiny, vocab, TtftScenario::Full, 4096, 512, 64, opts);
    EXPECT_FALSE(r.feasible);
    EXPECT_NE(r.note.find("max_position"), std::string::npos);
    opts.reps = 4;
    EXPECT_THROW(measure_ttft(model, vocab, TtftScenario::Rag, 2048, 512, 64, opts), Error);

    auto path = (std::filesystem::path(opts.scratch_dir) / "ttft.csv").string();
    write_ttft_csv({r}, path);
    auto lines = lines_of(path);
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0].rfind("scenario,corpus_tokens,budget,question_tokens,median_s,min_s", 0), 0u);
    EXPECT_EQ(lines[1].rfind("full,4096,4096,64,", 0), 0u);
}

TEST(Ttft, SweepCorpusAndQuestion) {
    auto c = build_sweep_corpus(40960, 2, 1);
    EXPECT_EQ(c.tokens.size(), 40960u);
    EXPECT_EQ(c.chunks.size(), 160u);
    CorpusSpec spec;
    auto first = generate_bundle(spec);
    EXPECT_TRUE(std::equal(first.chunks[0].tokens.begin(), first.chunks[0].tokens.end(), c.tokens.ids.begin()));
    spec.seed = 2;
    auto second = generate_bundle(spec);
    EXPECT_TRUE(std::equal(second.chunks[0].tokens.begin(), second.chunks[0].tokens.end(),
                           c.tokens.ids.begin() + 32768));
    EXPECT_THROW(build_sweep_corpus(1000, 2, 1), Error);
    auto q = padded_question(first.vocab, c.first_question, 512);
    EXPECT_EQ(q.size(), 512u);
    auto prompt = tokenize(question_prompt(c.first_question), first.vocab);
    EXPECT_TRUE(std::equal(prompt.ids.begin(), prompt.ids.end(), q.ids.end() - prompt.size()));
    for (auto id : q.ids) EXPECT_NE(id, special::kUnk);
    EXPECT_THROW(padded_question(first.vocab, c.first_question, 3), Error);
}

TEST(Report, RowsBoundsAndFiles) {
    std::vector<RunRecord> recs;
    for (std::size_t c = 1; c <= 2; ++c) {
        for (auto m : {MethodTag::Rag, MethodTag::KvcFs}) {
            for (std::size_t b : {512u, 1024u, 2048u, 4096u}) {
                for (int i = 0; i < 4; ++i) {
                    RunRecord r;
                    r.record_id = std::to_string(c) + to_string(m) + std::to_string(b) + std::to_string(i);
                    r.prediction = {"q" + std::to_string(i), m, b, "", {}};
                    r.connectivity = c;
                    r.corpus_seed = 1;
                    r.corpus_fingerprint = "fp" + std::to_string(c);
                    r.model_fingerprint = "m";
                    r.score = i * 0.25;
                    if (m == MethodTag::Rag) r.evidence_recall = i < 2 ? 1.0 : 0.25;
                    r.question_kind = i < 2 ? QuestionKind::Direct : QuestionKind::Join;
                    if (i == 3 && b == 512) r.error = "boom";
                    recs.push_back(r);
                }
            }
        }
    }
    auto dir = kvc::testing::temp_dir("report");
    auto rows = emit_report(recs, dir.string());
    ASSERT_EQ(rows.size(), 16u);
    std::size_t per_c1 = 0;
    for (const auto& r : rows) {
        per_c1 += r.connectivity == 1;
        EXPECT_DOUBLE_EQ(r.bound, std::min(1.0, double(r.budget / 256) / double(1 + r.connectivity)));
        if (r.budget == 512) {
            EXPECT_EQ(r.count, 3u);
            EXPECT_EQ(r.errors, 1u);
            EXPECT_DOUBLE_EQ(r.mean_score, 0.25);
        } else {
            EXPECT_DOUBLE_EQ(r.mean_score, 0.375);
        }
        EXPECT_EQ(r.mean_evidence_recall.has_value(), r.method == std::string("rag"));
        if (r.method == std::string("rag")) {
            EXPECT_DOUBLE_EQ(*r.mean_join_evidence_recall, 0.25);
            EXPECT_DOUBLE_EQ(*r.mean_evidence_recall, r.budget == 512 ? 2.25 / 3 : 2.5 / 4);
        }
    }
    EXPECT_EQ(per_c1, 8u);
    EXPECT_EQ(rows.front().method, "rag");
    EXPECT_DOUBLE_EQ(coverage_bound(2, 8), 2.0 / 9.0);
    EXPECT_DOUBLE_EQ(coverage_bound(16, 1), 1.0);
    EXPECT_EQ(lines_of((dir / "summary.csv").string()).size(), 17u);
    EXPECT_EQ(lines_of((dir / "bound.csv").string()).size(), 9u);
    EXPECT_EQ(lines_of((dir / "series" / "rag.csv").string()).size(), 9u);
    EXPECT_EQ(lines_of((dir / "series" / "kvc_fs.csv").string()).size(), 9u);

    EXPECT_THROW(emit_report({}, ""), Error);
    auto mixed = recs;
    mixed.back().corpus_fingerprint = "other";
    try {
        emit_report(mixed, "");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Incompatible);
    }
    mixed = recs;
    mixed.back().model_fingerprint = "other";
    EXPECT_THROW(emit_report(mixed, ""), Error);
}

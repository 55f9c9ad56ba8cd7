// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kvc/compress.hpp"
#include "kvc/corpus.hpp"
#include "kvc/model.hpp"
#include "kvc/retrieval.hpp"

namespace kvc {

inline constexpr int kRunSchemaVersion = 1;

enum class MethodTag : std::uint8_t { Full, Rag, KvcZs, KvcFs, KvcFsq, Streaming, SnapKv, ExpAttn, Oracle };

const char* to_string(MethodTag tag);
/// Throws InvalidArgument for an unknown tag.
MethodTag method_from_string(const std::string& name);
std::vector<MethodTag> all_methods();

/// Lowercase, drop punctuation characters, split on whitespace.
std::vector<std::string> normalize(const std::string& text);

/// Set recall of the gold words: |pred ∩ gold| / |gold| over normalized word sets.
/// Throws InvalidArgument when the gold list normalizes to nothing.
double word_overlap(const std::string& prediction, const std::vector<std::string>& gold);

struct Prediction {
    std::string question_id;
    MethodTag method = MethodTag::Full;
    std::size_t budget = 0;
    std::string raw_text;
    std::vector<std::string> normalized;
};

struct StageTimings {
    double compress_s = 0.0;
    double retrieve_s = 0.0;
    double prefill_s = 0.0;
    double first_token_s = 0.0;
};

struct RunRecord {
    std::string record_id;
    Prediction prediction;
    QuestionKind question_kind = QuestionKind::Direct;
    std::uint64_t seed = 0;
    std::size_t connectivity = 0;
    std::uint64_t corpus_seed = 0;
    NameVariant variant = NameVariant::Distinct;
    std::string corpus_fingerprint;
    std::string model_fingerprint;
    double score = 0.0;
    std::optional<double> retention;
    std::optional<double> evidence_recall;
    StageTimings timings;
    std::optional<std::string> error;
};

std::string record_to_json(const RunRecord& record);
/// Throws Malformed on an unparsable line or a schema_version mismatch.
RunRecord record_from_json(const std::string& line);

/// Reads every record of a runs file; a missing file yields no records.
std::vector<RunRecord> read_records(const std::string& path);

struct SuiteConfig {
    std::vector<MethodTag> methods;
    std::vector<std::size_t> budgets = {512, 1024, 2048, 4096};
    std::vector<std::uint64_t> seeds = {1};
    std::size_t segments = 2;
    std::size_t few_shot_examples = 3;
    std::size_t max_new_tokens = 16;
    std::size_t streaming_sink = 4;
    std::size_t snapkv_window = 64;
    std::size_t snapkv_pool = 7;
    std::size_t expattn_samples = 256;
    std::string output_path;  // runs JSONL; empty keeps records in memory only
    bool resume = false;
};

struct SuiteOutcome {
    std::vector<RunRecord> records;  // the records produced by this call
    std::size_t skipped = 0;         // already present when resuming
    std::size_t failures = 0;
    std::uint64_t compressions = 0;
};

/// Few-shot examples for a seed: `count` questions drawn at random from the bundle.
std::vector<std::size_t> few_shot_indices(const CorpusBundle& bundle, std::size_t count, std::uint64_t seed);

/// Evaluates every (method, budget, question) for each seed. The few-shot questions of a
/// seed are removed from that seed's eval split for every method. Query-agnostic caches
/// are built once per (seed, method, budget); kvc_fsq compresses once per question.
/// Per-question failures are recorded, never thrown.
SuiteOutcome run_suite(const Model& model, const CorpusBundle& bundle, const SuiteConfig& config);

enum class TtftScenario : std::uint8_t { Full, Rag, Kvc };
const char* to_string(TtftScenario scenario);
TtftScenario ttft_scenario_from_string(const std::string& name);

struct TimingRecord {
    TtftScenario scenario = TtftScenario::Full;
    std::size_t corpus_tokens = 0;
    std::size_t budget_tokens = 0;
    std::size_t question_tokens = 0;
    bool feasible = true;
    std::size_t repetitions = 0;
    double median_s = 0.0;
    double min_s = 0.0;
    double retrieve_median_s = 0.0;  // rag only
    double prefill_median_s = 0.0;
    double compress_s = 0.0;  // kvc only, excluded from TTFT
    std::string note;
};

struct TtftOptions {
    std::size_t reps = 5;
    std::size_t segments = 2;
    std::uint64_t corpus_seed = 1;
    std::size_t connectivity = 2;
    std::string scratch_dir;  // kvc cache file location; empty uses the system temp dir
};

/// Corpus of `tokens` tokens: consecutive generated corpora (seeds corpus_seed,
/// corpus_seed + 1, ...) concatenated chunk by chunk and cut to length.
struct SweepCorpus {
    std::vector<ChunkDoc> chunks;
    TokenSequence tokens;
    std::string first_question;
};
SweepCorpus build_sweep_corpus(std::size_t tokens, std::size_t connectivity, std::uint64_t corpus_seed);

/// Question of exactly `tokens` ids: the question prompt of `question`, preceded by
/// corpus filler when it is shorter.
TokenSequence padded_question(const Vocabulary& vocab, const std::string& question, std::size_t tokens);

/// Time from question submission to the first decoded token, warm-up discarded.
TimingRecord measure_ttft(const Model& model, const Vocabulary& vocab, TtftScenario scenario,
                          std::size_t corpus_tokens, std::size_t budget_tokens, std::size_t question_tokens,
                          const TtftOptions& options = {});

void write_ttft_csv(const std::vector<TimingRecord>& records, const std::string& path);

struct AttentionProfile {
    std::vector<double> mass;          // mean over layers, heads and guidance rows, per context token
    std::vector<double> row_mass_max;  // per layer: largest context mass of a single observer row
    double answer_perplexity = 0.0;
};

/// Prefills [context; guidance] and averages the guidance rows' attention over context
/// tokens. The perplexity is that of `answer` after the context and question prompt.
AttentionProfile attention_profile(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                   const GuidancePrompt& guidance, const std::string& question,
                                   const std::string& answer);

/// exp(mean NLL) of `answer` tokens after prefilling the question prompt on a copy of `cache`.
double answer_perplexity(const Model& model, const Vocabulary& vocab, const KvCache& cache,
                         const std::string& question, const std::string& answer);

/// position,token,mass,gold
void write_profile_csv(const AttentionProfile& profile, const TokenSequence& context, const Vocabulary& vocab,
                       const std::vector<std::uint32_t>& gold_positions, const std::string& path);

/// Coverage bound of retrieval with B chunks for evidence of 1 + c chunks.
double coverage_bound(std::size_t chunks, std::size_t connectivity);

struct ReportRow {
    std::string method;
    std::size_t budget = 0;
    std::size_t connectivity = 0;
    std::size_t count = 0;
    std::size_t errors = 0;
    double mean_score = 0.0;
    std::optional<double> mean_retention;
    std::optional<double> mean_evidence_recall;
    std::optional<double> mean_join_evidence_recall;  // join questions only, comparable to the bound
    double bound = 0.0;
};

/// Aggregates records per method x budget x connectivity and writes summary.csv,
/// bound.csv and series/<method>.csv under `out_dir` (skipped when empty).
/// Throws InvalidArgument on no records and Incompatible when records of one corpus
/// (connectivity, corpus seed, variant) or of the suite disagree on fingerprints.
std::vector<ReportRow> emit_report(const std::vector<RunRecord>& records, const std::string& out_dir);

}  // namespace kvc

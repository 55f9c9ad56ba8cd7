// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "json.hpp"

namespace kvc {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr const char* kMethodNames[] = {"full",   "rag",       "kvc_zs", "kvc_fs", "kvc_fsq",
                                        "streaming", "snapkv", "expattn", "oracle"};

bool uses_cache(MethodTag m) {
    switch (m) {
        case MethodTag::KvcZs:
        case MethodTag::KvcFs:
        case MethodTag::KvcFsq:
        case MethodTag::Streaming:
        case MethodTag::SnapKv:
        case MethodTag::ExpAttn:
            return true;
        default:
            return false;
    }
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct TimedAnswer {
    TokenSequence tokens;
    double prefill_s = 0.0;
    double first_token_s = 0.0;
};

// Same decoding rule as generate_greedy, with the prompt prefill and first token timed.
TimedAnswer timed_greedy(const Model& model, KvCache& cache, const TokenSequence& prompt,
                         const GenerationParams& params) {
    KVC_CHECK(!prompt.empty(), ErrorCode::InvalidArgument, "prompt must not be empty");
    TimedAnswer out;
    const auto t0 = Clock::now();
    auto logits = prefill(model, cache, prompt.ids).logits;
    out.prefill_s = seconds_since(t0);
    TokenId next = argmax(logits);
    out.first_token_s = seconds_since(t0);
    while (out.tokens.ids.size() < params.max_new_tokens) {
        if (std::find(params.stop_tokens.begin(), params.stop_tokens.end(), next) != params.stop_tokens.end()) break;
        out.tokens.ids.push_back(next);
        logits = decode_step(model, cache, next);
        next = argmax(logits);
    }
    return out;
}

TokenSequence concat(std::span<const TokenId> a, std::span<const TokenId> b) {
    TokenSequence out;
    out.ids.reserve(a.size() + b.size());
    out.ids.insert(out.ids.end(), a.begin(), a.end());
    out.ids.insert(out.ids.end(), b.begin(), b.end());
    return out;
}

json timings_json(const StageTimings& t) {
    return {{"compress_s", t.compress_s},
            {"retrieve_s", t.retrieve_s},
            {"prefill_s", t.prefill_s},
            {"first_token_s", t.first_token_s}};
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

const char* to_string(MethodTag tag) { return kMethodNames[static_cast<std::size_t>(tag)]; }

MethodTag method_from_string(const std::string& name) {
    for (std::size_t i = 0; i < std::size(kMethodNames); ++i)
        if (name == kMethodNames[i]) return static_cast<MethodTag>(i);
    throw Error(ErrorCode::InvalidArgument, "unknown method tag '" + name + "'");
}

std::vector<MethodTag> all_methods() {
    std::vector<MethodTag> out;
    for (std::size_t i = 0; i < std::size(kMethodNames); ++i) out.push_back(static_cast<MethodTag>(i));
    return out;
}

std::vector<std::string> normalize(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char ch : text) {
        if (ch < 0x80 && std::ispunct(ch)) continue;
        cleaned.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
    }
    return split_whitespace(cleaned);
}

double word_overlap(const std::string& prediction, const std::vector<std::string>& gold) {
    const auto g = normalize(join(gold, " "));
    KVC_CHECK(!g.empty(), ErrorCode::InvalidArgument, "word overlap needs a nonempty gold answer");
    const std::set<std::string> gold_set(g.begin(), g.end());
    const auto p = normalize(prediction);
    const std::set<std::string> pred_set(p.begin(), p.end());
    std::size_t hit = 0;
    for (const auto& w : gold_set) hit += pred_set.count(w);
    return static_cast<double>(hit) / static_cast<double>(gold_set.size());
}

// ---------------------------------------------------------------------------
// Run records

std::string record_to_json(const RunRecord& r) {
    json j = {{"schema_version", kRunSchemaVersion},
              {"record_id", r.record_id},
              {"question_id", r.prediction.question_id},
              {"question_kind", to_string(r.question_kind)},
              {"method", to_string(r.prediction.method)},
              {"budget", r.prediction.budget},
              {"seed", r.seed},
              {"connectivity", r.connectivity},
              {"corpus_seed", r.corpus_seed},
              {"variant", to_string(r.variant)},
              {"corpus_fingerprint", r.corpus_fingerprint},
              {"model_fingerprint", r.model_fingerprint},
              {"raw_text", r.prediction.raw_text},
              {"normalized", r.prediction.normalized},
              {"score", r.score},
              {"retention", optional_json(r.retention)},
              {"evidence_recall", optional_json(r.evidence_recall)},
              {"timings", timings_json(r.timings)},
              {"error", optional_json(r.error)}};
    return j.dump();
}

RunRecord record_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Malformed, std::string("unparsable run record: ") + e.what());
    }
    try {
        KVC_CHECK(j.at("schema_version").get<int>() == kRunSchemaVersion, ErrorCode::Malformed,
                  "run record schema_version " + j.at("schema_version").dump() + " is not supported");
        RunRecord r;
        r.record_id = j.at("record_id").get<std::string>();
        r.prediction.question_id = j.at("question_id").get<std::string>();
        r.question_kind = j.at("question_kind").get<std::string>() == "join" ? QuestionKind::Join : QuestionKind::Direct;
        r.prediction.method = method_from_string(j.at("method").get<std::string>());
        r.prediction.budget = j.at("budget").get<std::size_t>();
        r.prediction.raw_text = j.at("raw_text").get<std::string>();
        r.prediction.normalized = j.at("normalized").get<std::vector<std::string>>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.connectivity = j.at("connectivity").get<std::size_t>();
        r.corpus_seed = j.at("corpus_seed").get<std::uint64_t>();
        r.variant = j.at("variant").get<std::string>() == "similar" ? NameVariant::Similar : NameVariant::Distinct;
        r.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
        r.model_fingerprint = j.at("model_fingerprint").get<std::string>();
        r.score = j.at("score").get<double>();
        if (!j.at("retention").is_null()) r.retention = j.at("retention").get<double>();
        if (!j.at("evidence_recall").is_null()) r.evidence_recall = j.at("evidence_recall").get<double>();
        const auto& t = j.at("timings");
        r.timings = {t.at("compress_s").get<double>(), t.at("retrieve_s").get<double>(),
                     t.at("prefill_s").get<double>(), t.at("first_token_s").get<double>()};
        if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Malformed, std::string("run record is missing a field: ") + e.what());
    }
}

std::vector<RunRecord> read_records(const std::string& path) {
    std::vector<RunRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(line));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suite

std::vector<std::size_t> few_shot_indices(const CorpusBundle& bundle, std::size_t count, std::uint64_t seed) {
    KVC_CHECK(count < bundle.questions.size(), ErrorCode::InvalidArgument,
              "cannot take " + std::to_string(count) + " few-shot examples from " +
                  std::to_string(bundle.questions.size()) + " questions");
    Rng rng(seed * 0x9E3779B97F4A7C15ull + 0xF5);
    auto picked = rng.sample(bundle.questions.size(), count);
    std::sort(picked.begin(), picked.end());
    return picked;
}

namespace {

struct SuiteState {
    const Model& model;
    const CorpusBundle& bundle;
    const SuiteConfig& config;
    TokenSequence context;
    std::string corpus_fp;
    std::string model_fp;
    std::optional<ChunkIndex> index;
    std::optional<std::variant<KvCache, std::string>> full_cache;
    double full_prefill_s = 0.0;
    GenerationParams params;
};

using CacheSlot = std::variant<CompressedCache, std::string>;

CacheSlot build_cache(SuiteState& st, MethodTag method, std::size_t budget, const GuidancePrompt& guidance,
                      double& elapsed) {
    const auto t0 = Clock::now();
    try {
        const auto& cfg = st.config;
        CompressionBudget b{budget, BudgetSchedule::Proportional};
        CompressedCache cc;
        switch (method) {
            case MethodTag::KvcZs:
            case MethodTag::KvcFs:
            case MethodTag::KvcFsq:
                cc = compress_iterative(st.model, st.bundle.vocab, st.context, guidance, b,
                                        plan_chunks(st.context.size(), cfg.segments));
                break;
            case MethodTag::Streaming:
                KVC_CHECK(budget > cfg.streaming_sink, ErrorCode::InvalidArgument,
                          "streaming budget must exceed the sink size");
                cc = compress_streaming_llm(st.model, st.context, cfg.streaming_sink, budget - cfg.streaming_sink);
                break;
            case MethodTag::SnapKv:
                cc = compress_snapkv_agnostic(st.model, st.context, cfg.snapkv_window, b, cfg.snapkv_pool);
                break;
            case MethodTag::ExpAttn:
                cc = compress_expected_attention(st.model, st.context, b, cfg.expattn_samples);
                break;
            default:
                throw Error(ErrorCode::Internal, "method has no cache");
        }
        elapsed = seconds_since(t0);
        return cc;
    } catch (const std::exception& e) {
        elapsed = seconds_since(t0);
        return std::string(e.what());
    }
}

GuidancePrompt guidance_for(MethodTag method, const std::vector<QaExample>& examples, const Question* q) {
    GuidancePrompt g;
    if (method == MethodTag::KvcFs || method == MethodTag::KvcFsq) {
        g.kind = method == MethodTag::KvcFs ? GuidanceKind::FewShot : GuidanceKind::FewShotPlusQuery;
        g.examples = examples;
    }
    if (method == MethodTag::KvcFsq) g.query = q->text;
    return g;
}

void answer_question(SuiteState& st, MethodTag method, std::size_t budget, const Question& q,
                     const CompressedCache* cc, RunRecord& rec) {
    const auto& vocab = st.bundle.vocab;
    KVC_CHECK(!split_whitespace(q.text).empty(), ErrorCode::InvalidArgument, "question must not be empty");
    const auto prompt = tokenize(question_prompt(q.text), vocab);
    TimedAnswer ans;
    if (cc) {
        KVC_CHECK(cc->meta.model_fingerprint == st.model.fingerprint(), ErrorCode::Incompatible,
                  "stale cache: built with a different model");
        KvCache work = cc->cache;
        ans = timed_greedy(st.model, work, prompt, st.params);
        const auto ret = retention(*cc, q.gold_positions);
        double sum = 0.0;
        for (double v : ret.per_layer) sum += v;
        rec.retention = ret.per_layer.empty() ? 1.0 : sum / ret.per_layer.size();
    } else if (method == MethodTag::Full) {
        if (!st.full_cache) {
            const auto t0 = Clock::now();
            try {
                KvCache cache = KvCache::empty(st.model.config());
                prefill(st.model, cache, st.context.ids, 0);
                st.full_cache = cache;
            } catch (const std::exception& e) {
                st.full_cache = std::string(e.what());
            }
            st.full_prefill_s = seconds_since(t0);
            rec.timings.compress_s = st.full_prefill_s;
        }
        if (auto* err = std::get_if<std::string>(&*st.full_cache)) throw Error(ErrorCode::Internal, *err);
        KvCache work = std::get<KvCache>(*st.full_cache);
        ans = timed_greedy(st.model, work, prompt, st.params);
    } else {
        const std::size_t b = chunks_in_budget(budget);
        const auto t0 = Clock::now();
        RetrievalResult ranking;
        if (method == MethodTag::Rag) {
            if (!st.index) st.index = index_chunks(st.bundle);
            ranking = retrieve(*st.index, q.text, st.bundle.chunks.size());
        } else {
            ranking = oracle_ranking(q.evidence, st.bundle.chunks.size());
        }
        const auto ctx = assemble_context(ranking, st.bundle.chunks, budget);
        rec.timings.retrieve_s = seconds_since(t0);
        const auto top = ranking.ids(b);
        rec.evidence_recall = evidence_recall(top, q.evidence);
        KvCache work = KvCache::empty(st.model.config());
        ans = timed_greedy(st.model, work, concat(ctx.ids, prompt.ids), st.params);
    }
    rec.timings.prefill_s = ans.prefill_s;
    rec.timings.first_token_s = rec.timings.retrieve_s + ans.first_token_s;
    rec.prediction.raw_text = detokenize(ans.tokens, vocab);
    rec.prediction.normalized = normalize(rec.prediction.raw_text);
    rec.score = word_overlap(rec.prediction.raw_text, q.answers);
}

class Appender {
public:
    Appender(const std::string& path, bool resume, std::set<std::string>& done) {
        if (path.empty()) return;
        const std::filesystem::path p(path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::vector<std::string> keep;
        if (resume) {
            std::ifstream in(path);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                try {
                    done.insert(record_from_json(line).record_id);
                    keep.push_back(line);
                } catch (const Error&) {
                    // a torn trailing line from an interrupted run is dropped
                }
            }
        }
        m_out.open(path, std::ios::trunc | std::ios::binary);
        KVC_CHECK(m_out.good(), ErrorCode::MissingArtifact, "cannot write runs file " + path);
        for (const auto& l : keep) m_out << l << '\n';
        m_out.flush();
    }

    void append(const RunRecord& r) {
        if (!m_out.is_open()) return;
        m_out << record_to_json(r) << '\n';
        m_out.flush();
    }

private:
    std::ofstream m_out;
};

}  // namespace

SuiteOutcome run_suite(const Model& model, const CorpusBundle& bundle, const SuiteConfig& config) {
    KVC_CHECK(!config.methods.empty(), ErrorCode::InvalidArgument, "suite needs at least one method");
    KVC_CHECK(!config.budgets.empty(), ErrorCode::InvalidArgument, "suite needs at least one budget");
    KVC_CHECK(!config.seeds.empty(), ErrorCode::InvalidArgument, "suite needs at least one seed");
    KVC_CHECK(config.max_new_tokens >= 1, ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
    KVC_CHECK(model.config().vocab_size == bundle.vocab.size(), ErrorCode::Incompatible,
              "model vocabulary size does not match the corpus vocabulary");

    SuiteState st{model, bundle, config, bundle.corpus_tokens(), to_hex(bundle.fingerprint()),
                  to_hex(model.fingerprint()), std::nullopt, std::nullopt, 0.0, {}};
    st.params.max_new_tokens = config.max_new_tokens;
    st.params.stop_tokens = {special::kSep};

    SuiteOutcome outcome;
    std::set<std::string> done;
    Appender appender(config.output_path, config.resume, done);
    const std::uint64_t calls_before = compression_calls();

    for (const auto seed : config.seeds) {
        const auto fs = few_shot_indices(bundle, config.few_shot_examples, seed);
        std::vector<QaExample> examples;
        for (auto i : fs) examples.push_back({bundle.questions[i].text, join(bundle.questions[i].answers, " , ")});

        for (const auto method : config.methods) {
            std::vector<std::size_t> budgets = config.budgets;
            if (method == MethodTag::Full) budgets = {st.context.size()};
            for (const auto budget : budgets) {
                std::optional<CacheSlot> shared;
                for (std::size_t qi = 0; qi < bundle.questions.size(); ++qi) {
                    if (std::binary_search(fs.begin(), fs.end(), qi)) continue;
                    const auto& q = bundle.questions[qi];
                    RunRecord rec;
                    rec.record_id = std::string(to_string(method)) + "/" + std::to_string(budget) + "/s" +
                                    std::to_string(seed) + "/" + q.id;
                    if (done.count(rec.record_id)) {
                        ++outcome.skipped;
                        continue;
                    }
                    rec.prediction = {q.id, method, budget, {}, {}};
                    rec.question_kind = q.kind;
                    rec.seed = seed;
                    rec.connectivity = bundle.spec.connectivity;
                    rec.corpus_seed = bundle.spec.seed;
                    rec.variant = bundle.spec.variant;
                    rec.corpus_fingerprint = st.corpus_fp;
                    rec.model_fingerprint = st.model_fp;
                    try {
                        const CompressedCache* cc = nullptr;
                        std::optional<CacheSlot> own;
                        if (uses_cache(method)) {
                            double elapsed = 0.0;
                            if (method == MethodTag::KvcFsq) {
                                own = build_cache(st, method, budget, guidance_for(method, examples, &q), elapsed);
                                rec.timings.compress_s = elapsed;
                            } else if (!shared) {
                                shared = build_cache(st, method, budget, guidance_for(method, examples, nullptr),
                                                     elapsed);
                                rec.timings.compress_s = elapsed;
                            }
                            const CacheSlot& slot = own ? *own : *shared;
                            if (auto* err = std::get_if<std::string>(&slot)) throw Error(ErrorCode::Internal, *err);
                            cc = &std::get<CompressedCache>(slot);
                        }
                        answer_question(st, method, budget, q, cc, rec);
                    } catch (const std::exception& e) {
                        rec.error = e.what();
                        rec.score = 0.0;
                        ++outcome.failures;
                    }
                    done.insert(rec.record_id);
                    appender.append(rec);
                    outcome.records.push_back(std::move(rec));
                }
            }
        }
    }
    outcome.compressions = compression_calls() - calls_before;
    return outcome;
}

// ---------------------------------------------------------------------------
// Time to first token

const char* to_string(TtftScenario scenario) {
    switch (scenario) {
        case TtftScenario::Full:
            return "full";
        case TtftScenario::Rag:
            return "rag";
        case TtftScenario::Kvc:
            return "kvc";
    }
    return "?";
}

TtftScenario ttft_scenario_from_string(const std::string& name) {
    for (auto s : {TtftScenario::Full, TtftScenario::Rag, TtftScenario::Kvc})
        if (name == to_string(s)) return s;
    throw Error(ErrorCode::InvalidArgument, "unknown ttft scenario '" + name + "'");
}

SweepCorpus build_sweep_corpus(std::size_t tokens, std::size_t connectivity, std::uint64_t corpus_seed) {
    KVC_CHECK(tokens >= kChunkTokens && tokens % kChunkTokens == 0, ErrorCode::InvalidArgument,
              "sweep corpus size must be a positive multiple of 256");
    SweepCorpus out;
    for (std::uint64_t seed = corpus_seed; out.tokens.size() < tokens; ++seed) {
        CorpusSpec spec;
        spec.connectivity = connectivity;
        spec.seed = seed;
        auto b = generate_bundle(spec);
        if (out.first_question.empty()) out.first_question = b.questions.front().text;
        for (auto& c : b.chunks) {
            if (out.tokens.size() >= tokens) break;
            c.id = out.chunks.size();
            out.tokens.ids.insert(out.tokens.ids.end(), c.tokens.begin(), c.tokens.end());
            out.chunks.push_back(std::move(c));
        }
    }
    return out;
}

TokenSequence padded_question(const Vocabulary& vocab, const std::string& question, std::size_t tokens) {
    auto q = tokenize(question_prompt(question), vocab);
    KVC_CHECK(q.size() <= tokens, ErrorCode::InvalidArgument,
              "question prompt has " + std::to_string(q.size()) + " tokens, more than " + std::to_string(tokens));
    const auto filler = tokenize("context : answer factual questions about this corpus .", vocab);
    TokenSequence out;
    for (std::size_t i = 0; out.size() + q.size() < tokens; ++i) out.ids.push_back(filler.ids[i % filler.size()]);
    out.ids.insert(out.ids.end(), q.ids.begin(), q.ids.end());
    return out;
}

TimingRecord measure_ttft(const Model& model, const Vocabulary& vocab, TtftScenario scenario,
                          std::size_t corpus_tokens, std::size_t budget_tokens, std::size_t question_tokens,
                          const TtftOptions& options) {
    KVC_CHECK(options.reps >= 5, ErrorCode::InvalidArgument, "ttft needs at least 5 repetitions");
    KVC_CHECK(question_tokens >= 1, ErrorCode::InvalidArgument, "question must have at least one token");
    TimingRecord rec;
    rec.scenario = scenario;
    rec.corpus_tokens = corpus_tokens;
    rec.budget_tokens = scenario == TtftScenario::Full ? corpus_tokens : budget_tokens;
    rec.question_tokens = question_tokens;
    rec.repetitions = options.reps;

    const std::size_t max_pos = model.config().max_position;
    if (scenario == TtftScenario::Full && corpus_tokens + question_tokens > max_pos) {
        rec.feasible = false;
        rec.note = "corpus plus question exceeds max_position " + std::to_string(max_pos);
        return rec;
    }

    const auto corpus = build_sweep_corpus(corpus_tokens, options.connectivity, options.corpus_seed);
    const auto question = padded_question(vocab, corpus.first_question, question_tokens);
    const std::string query_text = detokenize(question, vocab);

    std::vector<double> ttft, retrieve_s, prefill_s;
    std::function<void()> run;
    std::optional<ChunkIndex> index;
    std::string cache_path;

    switch (scenario) {
        case TtftScenario::Full:
            run = [&] {
                const auto t0 = Clock::now();
                KvCache cache = KvCache::empty(model.config());
                const auto logits = prefill(model, cache, concat(corpus.tokens.ids, question.ids).ids, 0).logits;
                (void)argmax(logits);
                ttft.push_back(seconds_since(t0));
                prefill_s.push_back(ttft.back());
            };
            break;
        case TtftScenario::Rag: {
            std::vector<std::string> texts;
            for (const auto& c : corpus.chunks) texts.push_back(c.text);
            index = index_chunks(texts, vocab.fingerprint());
            run = [&] {
                const auto t0 = Clock::now();
                const auto ranking = retrieve(*index, query_text, chunks_in_budget(budget_tokens));
                const auto ctx = assemble_context(ranking, corpus.chunks, budget_tokens);
                const double r = seconds_since(t0);
                const auto t1 = Clock::now();
                KvCache cache = KvCache::empty(model.config());
                const auto logits = prefill(model, cache, concat(ctx.ids, question.ids).ids, 0).logits;
                (void)argmax(logits);
                prefill_s.push_back(seconds_since(t1));
                retrieve_s.push_back(r);
                ttft.push_back(seconds_since(t0));
            };
            break;
        }
        case TtftScenario::Kvc: {
            const auto t0 = Clock::now();
            GuidancePrompt guidance;
            auto cc = compress_iterative(model, vocab, corpus.tokens, guidance, {budget_tokens, BudgetSchedule::Proportional},
                                         plan_chunks(corpus.tokens.size(), options.segments));
            rec.compress_s = seconds_since(t0);
            const std::filesystem::path dir =
                options.scratch_dir.empty() ? std::filesystem::temp_directory_path() : std::filesystem::path(options.scratch_dir);
            std::filesystem::create_directories(dir);
            cache_path = (dir / ("ttft_" + std::to_string(corpus_tokens) + "_" + std::to_string(budget_tokens) + ".kvc")).string();
            save_cache(cc, cache_path);
            run = [&] {
                const auto t1 = Clock::now();
                auto loaded = load_cache(cache_path, &model);
                const auto t2 = Clock::now();
                const auto logits = prefill(model, loaded.cache, question.ids).logits;
                (void)argmax(logits);
                prefill_s.push_back(seconds_since(t2));
                ttft.push_back(seconds_since(t1));
            };
            break;
        }
    }

    run();  // warm-up
    ttft.clear();
    retrieve_s.clear();
    prefill_s.clear();
    for (std::size_t i = 0; i < options.reps; ++i) run();
    if (!cache_path.empty()) std::filesystem::remove(cache_path);

    rec.median_s = median(ttft);
    rec.min_s = *std::min_element(ttft.begin(), ttft.end());
    rec.prefill_median_s = median(prefill_s);
    if (!retrieve_s.empty()) rec.retrieve_median_s = median(retrieve_s);
    return rec;
}

void write_ttft_csv(const std::vector<TimingRecord>& records, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    KVC_CHECK(out.good(), ErrorCode::MissingArtifact, "cannot write " + path);
    out << "scenario,corpus_tokens,budget,question_tokens,median_s,min_s,feasible,reps,retrieve_median_s,"
           "prefill_median_s,compress_s,schema_version\n";
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%.6f,%.6f,%d,%zu,%.6f,%.6f,%.6f,%d\n", to_string(r.scenario),
                      r.corpus_tokens, r.budget_tokens, r.question_tokens, r.median_s, r.min_s, r.feasible ? 1 : 0,
                      r.repetitions, r.retrieve_median_s, r.prefill_median_s, r.compress_s, kRunSchemaVersion);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Attention profile

double answer_perplexity(const Model& model, const Vocabulary& vocab, const KvCache& cache,
                         const std::string& question, const std::string& answer) {
    const auto answer_ids = tokenize(answer, vocab);
    KVC_CHECK(!answer_ids.empty(), ErrorCode::InvalidArgument, "perplexity needs a nonempty answer");
    KvCache work = cache;
    if (work.layers.empty()) work = KvCache::empty(model.config());
    auto logits = prefill(model, work, tokenize(question_prompt(question), vocab).ids).logits;
    double nll = 0.0;
    for (std::size_t i = 0; i < answer_ids.size(); ++i) {
        const TokenId t = answer_ids.ids[i];
        double mx = logits[0];
        for (float v : logits) mx = std::max(mx, static_cast<double>(v));
        double z = 0.0;
        for (float v : logits) z += std::exp(static_cast<double>(v) - mx);
        nll += -(static_cast<double>(logits[t]) - mx - std::log(z));
        if (i + 1 < answer_ids.size()) logits = decode_step(model, work, t);
    }
    return std::exp(nll / static_cast<double>(answer_ids.size()));
}

AttentionProfile attention_profile(const Model& model, const Vocabulary& vocab, const TokenSequence& context,
                                   const GuidancePrompt& guidance, const std::string& question,
                                   const std::string& answer) {
    guidance.validate();
    KVC_CHECK(!context.empty(), ErrorCode::InvalidArgument, "attention profile needs a context");
    const auto g = tokenize(guidance.render(), vocab);
    KVC_CHECK(context.size() + g.size() <= model.config().max_position, ErrorCode::Overflow,
              "context plus guidance exceeds max_position");

    KvCache base = KvCache::empty(model.config());
    prefill(model, base, context.ids, 0);
    KvCache probe = base;
    PrefillOptions opts;
    opts.observer_begin = 0;
    opts.observer_end = g.size();
    const auto cap = prefill(model, probe, g.ids, opts).capture.value();

    const std::size_t n = context.size();
    AttentionProfile prof;
    prof.mass.assign(n, 0.0);
    std::size_t slices = 0;
    for (const auto& layer : cap.weights) {
        double layer_max = 0.0;
        for (const auto& w : layer) {
            for (std::size_t r = 0; r < cap.observer_count; ++r) {
                double row = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double v = w(r, j);
                    prof.mass[j] += v;
                    row += v;
                }
                layer_max = std::max(layer_max, row);
                ++slices;
            }
        }
        prof.row_mass_max.push_back(layer_max);
    }
    for (auto& m : prof.mass) m /= static_cast<double>(slices);
    prof.answer_perplexity = answer_perplexity(model, vocab, base, question, answer);
    return prof;
}

void write_profile_csv(const AttentionProfile& profile, const TokenSequence& context, const Vocabulary& vocab,
                       const std::vector<std::uint32_t>& gold_positions, const std::string& path) {
    KVC_CHECK(profile.mass.size() == context.size(), ErrorCode::InvalidArgument,
              "profile and context lengths differ");
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    KVC_CHECK(out.good(), ErrorCode::MissingArtifact, "cannot write " + path);
    out << "position,token,mass,gold\n";
    const std::set<std::uint32_t> gold(gold_positions.begin(), gold_positions.end());
    char buf[64];
    for (std::size_t i = 0; i < context.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", profile.mass[i]);
        out << i << ',' << vocab.token(context.ids[i]) << ',' << buf << ',' << gold.count(static_cast<std::uint32_t>(i))
            << '\n';
    }
    out << "# answer_perplexity," << profile.answer_perplexity << '\n';
}

// ---------------------------------------------------------------------------
// Report

double coverage_bound(std::size_t chunks, std::size_t connectivity) {
    return std::min(1.0, static_cast<double>(chunks) / static_cast<double>(1 + connectivity));
}

std::vector<ReportRow> emit_report(const std::vector<RunRecord>& records, const std::string& out_dir) {
    KVC_CHECK(!records.empty(), ErrorCode::InvalidArgument, "report needs at least one run record");

    std::map<std::tuple<std::size_t, std::uint64_t, int>, std::string> corpus_fp;
    const std::string& model_fp = records.front().model_fingerprint;
    struct Acc {
        std::size_t count = 0, errors = 0, ret_n = 0, rec_n = 0, join_n = 0;
        double score = 0.0, ret = 0.0, rec = 0.0, join = 0.0;
    };
    std::map<std::tuple<int, std::size_t, std::size_t>, Acc> acc;
    for (const auto& r : records) {
        KVC_CHECK(r.model_fingerprint == model_fp, ErrorCode::Incompatible,
                  "run records come from different models");
        const auto key = std::make_tuple(r.connectivity, r.corpus_seed, static_cast<int>(r.variant));
        auto [it, inserted] = corpus_fp.emplace(key, r.corpus_fingerprint);
        KVC_CHECK(inserted || it->second == r.corpus_fingerprint, ErrorCode::Incompatible,
                  "run records mix corpus fingerprints at connectivity " + std::to_string(r.connectivity));
        auto& a = acc[{static_cast<int>(r.prediction.method), r.prediction.budget, r.connectivity}];
        if (r.error) {
            ++a.errors;
            continue;
        }
        ++a.count;
        a.score += r.score;
        if (r.retention) {
            a.ret += *r.retention;
            ++a.ret_n;
        }
        if (r.evidence_recall) {
            a.rec += *r.evidence_recall;
            ++a.rec_n;
            if (r.question_kind == QuestionKind::Join) {
                a.join += *r.evidence_recall;
                ++a.join_n;
            }
        }
    }

    std::vector<ReportRow> rows;
    for (const auto& [key, a] : acc) {
        ReportRow row;
        row.method = to_string(static_cast<MethodTag>(std::get<0>(key)));
        row.budget = std::get<1>(key);
        row.connectivity = std::get<2>(key);
        row.count = a.count;
        row.errors = a.errors;
        row.mean_score = a.count ? a.score / a.count : 0.0;
        if (a.ret_n) row.mean_retention = a.ret / a.ret_n;
        if (a.rec_n) row.mean_evidence_recall = a.rec / a.rec_n;
        if (a.join_n) row.mean_join_evidence_recall = a.join / a.join_n;
        row.bound = coverage_bound(chunks_in_budget(row.budget), row.connectivity);
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& x, const ReportRow& y) {
        return std::tie(x.connectivity, x.budget) < std::tie(y.connectivity, y.budget);
    });
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& x, const ReportRow& y) {
        return method_from_string(x.method) < method_from_string(y.method);
    });

    if (out_dir.empty()) return rows;
    const std::filesystem::path root(out_dir);
    std::filesystem::create_directories(root / "series");
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string();
        char b[32];
        std::snprintf(b, sizeof b, "%.6f", *v);
        return std::string(b);
    };
    {
        std::ofstream out(root / "summary.csv", std::ios::trunc);
        KVC_CHECK(out.good(), ErrorCode::MissingArtifact, "cannot write " + (root / "summary.csv").string());
        out << "schema_version,method,budget,connectivity,count,errors,mean_score,mean_retention,"
               "mean_evidence_recall,mean_join_evidence_recall,bound\n";
        for (const auto& r : rows)
            out << kRunSchemaVersion << ',' << r.method << ',' << r.budget << ',' << r.connectivity << ',' << r.count
                << ',' << r.errors << ',' << fmt(r.mean_score) << ',' << fmt(r.mean_retention) << ','
                << fmt(r.mean_evidence_recall) << ',' << fmt(r.mean_join_evidence_recall) << ',' << fmt(r.bound)
                << '\n';
    }
    {
        std::set<std::pair<std::size_t, std::size_t>> cells;
        for (const auto& r : rows)
            if (r.method != std::string("full")) cells.emplace(r.connectivity, r.budget);
        std::ofstream out(root / "bound.csv", std::ios::trunc);
        out << "schema_version,connectivity,budget,chunks,bound\n";
        for (const auto& [c, b] : cells)
            out << kRunSchemaVersion << ',' << c << ',' << b << ',' << chunks_in_budget(b) << ','
                << fmt(coverage_bound(chunks_in_budget(b), c)) << '\n';
    }
    std::map<std::string, std::vector<const ReportRow*>> by_method;
    for (const auto& r : rows) by_method[r.method].push_back(&r);
    for (const auto& [m, rs] : by_method) {
        std::ofstream out(root / "series" / (m + ".csv"), std::ios::trunc);
        out << "schema_version,connectivity,budget,compression_rate,mean_score,bound\n";
        for (const auto* r : rs) {
            const double rate = r->budget ? static_cast<double>(kCorpusTokens) / static_cast<double>(r->budget) : 0.0;
            out << kRunSchemaVersion << ',' << r->connectivity << ',' << r->budget << ',' << fmt(rate) << ','
                << fmt(r->mean_score) << ',' << fmt(r->bound) << '\n';
        }
    }
    return rows;
}

}  // namespace kvc

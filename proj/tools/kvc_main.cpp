// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli_config.hpp"
#include "kvc/compress.hpp"
#include "kvc/corpus.hpp"
#include "kvc/eval.hpp"
#include "kvc/model.hpp"
#include "kvc/retrieval.hpp"

namespace fs = std::filesystem;
using namespace kvc;
using namespace kvc::cli;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string under(const std::string& root, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? p.string() : (fs::path(root) / p).lexically_normal().string();
}

struct ModelOpts {
    std::string kind = "reference";
    std::uint64_t seed = 1;
    std::string weights;
    std::size_t layers = 0;
};

void add_model_opts(CLI::App* cmd, ModelOpts& m) {
    cmd->add_option("--model-kind", m.kind, "Model kind when no weights file is given")
        ->check(CLI::IsMember({"reference", "diagnostic"}));
    cmd->add_option("--model-seed", m.seed, "Seed of the randomly initialized reference model");
    cmd->add_option("--weights", m.weights, "Weights file (KVCW), relative to the output root");
    cmd->add_option("--model-layers", m.layers, "Layer count override (0 keeps the kind's default)");
}

ModelConfig model_config(const ModelOpts& m, std::size_t vocab_size) {
    if (m.kind == "diagnostic") return ModelConfig::diagnostic(vocab_size, m.layers ? m.layers : 1);
    auto cfg = ModelConfig::reference(vocab_size);
    if (m.layers) cfg.n_layers = m.layers;
    return cfg;
}

Model make_model(const ModelOpts& m, const Vocabulary& vocab, const std::string& root) {
    const auto cfg = model_config(m, vocab.size());
    if (!m.weights.empty()) {
        const auto path = under(root, m.weights);
        KVC_CHECK(fs::exists(path), ErrorCode::MissingArtifact, "weights file not found: " + path);
        return load_weights(path, cfg);
    }
    if (m.kind == "diagnostic") return init_diagnostic_model(cfg, vocab);
    return init_random_model(cfg, m.seed);
}

void print_summary(const CorpusBundle& b, const std::string& dir) {
    std::size_t direct = 0, join = 0;
    for (const auto& q : b.questions) (q.kind == QuestionKind::Direct ? direct : join)++;
    std::printf("bundle:       %s\n", dir.c_str());
    std::printf("connectivity: %zu\n", b.spec.connectivity);
    std::printf("variant:      %s\n", to_string(b.spec.variant));
    std::printf("chunks:       %zu x %zu tokens\n", b.chunks.size(), kChunkTokens);
    std::printf("tokens:       %zu\n", b.corpus_tokens().size());
    std::printf("questions:    %zu (%zu direct, %zu join)\n", b.questions.size(), direct, join);
    std::printf("fingerprint:  %s\n", to_hex(b.fingerprint()).c_str());
}

CorpusBundle make_bundle(std::size_t connectivity, std::uint64_t seed, NameVariant variant, std::size_t per_kind) {
    CorpusSpec spec;
    spec.connectivity = connectivity;
    spec.seed = seed;
    spec.variant = variant;
    spec.questions_per_kind = per_kind;
    spec.validate();
    return variant == NameVariant::Similar ? generate_similar_names_variant(spec) : generate_bundle(spec);
}

GuidancePrompt make_guidance(const std::string& mode, const CorpusBundle& bundle, std::size_t examples,
                             std::uint64_t example_seed, const std::string& query) {
    GuidancePrompt g;
    g.kind = guidance_kind_from_string(mode);
    if (g.kind != GuidanceKind::ZeroShot && examples > 0) {
        for (auto i : few_shot_indices(bundle, examples, example_seed)) {
            const auto& q = bundle.questions[i];
            std::string answer;
            for (const auto& a : q.answers) answer += (answer.empty() ? "" : " , ") + a;
            g.examples.push_back({q.text, answer});
        }
    }
    if (g.kind == GuidanceKind::FewShotPlusQuery) {
        KVC_CHECK(!split_whitespace(query).empty(), ErrorCode::InvalidArgument, "--mode fsq requires --query");
        g.query = query;
    }
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-aware KV cache compression workbench", "kvc"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("kvc 0.1.0"));

    std::string out;
    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out, "Output root for every relative path; empty falls back to KVC_OUT, then .");
    };

    // init-model
    auto* init_cmd = app.add_subcommand("init-model", "Write the weights of a reference or diagnostic model");
    ModelOpts init_m;
    std::string init_path = "model.kvcw";
    init_cmd->add_option("--kind", init_m.kind, "Model kind")->check(CLI::IsMember({"reference", "diagnostic"}));
    init_cmd->add_option("--seed", init_m.seed, "Initialization seed (reference kind)");
    init_cmd->add_option("--layers", init_m.layers, "Layer count override (0 keeps the kind's default)");
    init_cmd->add_option("--weights-out", init_path, "Weights file to write");
    add_out(init_cmd);

    // corpusgen
    auto* gen_cmd = app.add_subcommand("corpusgen", "Generate a synthetic corpus bundle");
    std::size_t gen_c = 2, gen_per_kind = 25;
    std::uint64_t gen_seed = 1;
    std::string gen_variant = "distinct", gen_bundle = ".";
    gen_cmd->add_option("--connectivity", gen_c, "Projects linked to each person (1-8)");
    gen_cmd->add_option("--seed", gen_seed, "Corpus seed");
    gen_cmd->add_option("--variant", gen_variant, "Person names: distinct or similar (Person_NN)")
        ->check(CLI::IsMember({"distinct", "similar"}));
    gen_cmd->add_option("--questions-per-kind", gen_per_kind, "Direct and join questions each");
    gen_cmd->add_option("--bundle", gen_bundle, "Bundle directory, relative to the output root");
    add_out(gen_cmd);

    // compress
    auto* comp_cmd = app.add_subcommand("compress", "Compress a bundle's corpus into a KV cache file");
    std::string comp_bundle = ".", comp_mode = "fs", comp_query, comp_schedule = "proportional",
                comp_cache = "cache.kvc";
    std::size_t comp_examples = 3, comp_budget = 512, comp_segments = 2;
    std::uint64_t comp_example_seed = 1;
    ModelOpts comp_m;
    comp_cmd->add_option("--bundle", comp_bundle, "Bundle directory, relative to the output root");
    comp_cmd->add_option("--mode", comp_mode, "Guidance: zs, fs or fsq")->check(CLI::IsMember({"zs", "fs", "fsq"}));
    comp_cmd->add_option("--examples", comp_examples, "Few-shot examples (ignored by zs)");
    comp_cmd->add_option("--example-seed", comp_example_seed, "Seed for drawing few-shot examples");
    comp_cmd->add_option("--query", comp_query, "Query appended to the guidance (fsq only)");
    comp_cmd->add_option("--budget", comp_budget, "Cache length k");
    comp_cmd->add_option("--segments", comp_segments, "Number of chunks s");
    comp_cmd->add_option("--schedule", comp_schedule, "Per-iteration budget schedule")
        ->check(CLI::IsMember({"proportional", "flat"}));
    comp_cmd->add_option("--cache", comp_cache, "Cache file to write");
    add_model_opts(comp_cmd, comp_m);
    add_out(comp_cmd);

    // ask
    auto* ask_cmd = app.add_subcommand("ask", "Answer a question from a compressed cache");
    std::string ask_bundle = ".", ask_cache = "cache.kvc", ask_question;
    std::size_t ask_max_new = 16;
    ModelOpts ask_m;
    ask_cmd->add_option("--bundle", ask_bundle, "Bundle directory, relative to the output root");
    ask_cmd->add_option("--cache", ask_cache, "Cache file to read");
    ask_cmd->add_option("--question", ask_question, "Question text")->required();
    ask_cmd->add_option("--max-new", ask_max_new, "Maximum generated tokens");
    add_model_opts(ask_cmd, ask_m);
    add_out(ask_cmd);

    // rag
    auto* rag_cmd = app.add_subcommand("rag", "Answer a question from retrieved chunks");
    std::string rag_bundle = ".", rag_index = "index.bin", rag_question;
    std::size_t rag_budget = 1024, rag_max_new = 16;
    ModelOpts rag_m;
    rag_cmd->add_option("--bundle", rag_bundle, "Bundle directory, relative to the output root");
    rag_cmd->add_option("--index", rag_index, "Index file inside the bundle directory (rebuilt when stale)");
    rag_cmd->add_option("--question", rag_question, "Question text")->required();
    rag_cmd->add_option("--budget", rag_budget, "Context budget in tokens (whole 256-token chunks)");
    rag_cmd->add_option("--max-new", rag_max_new, "Maximum generated tokens");
    add_model_opts(rag_cmd, rag_m);
    add_out(rag_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run the evaluation grid and write runs/ and report/");
    std::string eval_config, eval_methods, eval_budgets, eval_levels, eval_seeds;
    bool eval_resume = false;
    std::size_t eval_max_new = 0;
    eval_cmd->add_option("--config", eval_config, "Run configuration file");
    eval_cmd->add_option("--methods", eval_methods, "Comma-separated method tags (overrides the config)");
    eval_cmd->add_option("--budgets", eval_budgets, "Comma-separated budgets (overrides the config)");
    eval_cmd->add_option("--levels", eval_levels, "Connectivity levels, e.g. 1-8 (overrides the config)");
    eval_cmd->add_option("--seeds", eval_seeds, "Few-shot seeds (overrides the config)");
    eval_cmd->add_option("--max-new", eval_max_new, "Maximum generated tokens (0 keeps the config)");
    eval_cmd->add_flag("--resume", eval_resume, "Skip records already present in runs/");
    add_out(eval_cmd);

    // ttft
    auto* ttft_cmd = app.add_subcommand("ttft", "Measure time to first token over corpus sizes");
    std::string ttft_sizes = "16384,32768,65536,131072", ttft_scenarios = "full,rag,kvc", ttft_csv = "ttft.csv";
    std::size_t ttft_budget = 8192, ttft_question = 512, ttft_reps = 5, ttft_segments = 2, ttft_c = 2;
    std::uint64_t ttft_corpus_seed = 1;
    ModelOpts ttft_m;
    ttft_cmd->add_option("--corpus-sizes", ttft_sizes, "Comma-separated corpus token counts");
    ttft_cmd->add_option("--scenarios", ttft_scenarios, "Comma-separated scenarios: full, rag, kvc");
    ttft_cmd->add_option("--budget", ttft_budget, "Retrieved context / cache length in tokens");
    ttft_cmd->add_option("--question", ttft_question, "Question length in tokens");
    ttft_cmd->add_option("--reps", ttft_reps, "Timed repetitions after one warm-up");
    ttft_cmd->add_option("--segments", ttft_segments, "Segments for the offline compression");
    ttft_cmd->add_option("--connectivity", ttft_c, "Connectivity of the generated corpora");
    ttft_cmd->add_option("--corpus-seed", ttft_corpus_seed, "Seed of the first generated corpus");
    ttft_cmd->add_option("--csv", ttft_csv, "CSV file to write");
    add_model_opts(ttft_cmd, ttft_m);
    add_out(ttft_cmd);

    // report
    auto* rep_cmd = app.add_subcommand("report", "Aggregate runs/*.jsonl into report/ tables");
    std::string rep_runs = "runs", rep_dir = "report";
    rep_cmd->add_option("--runs", rep_runs, "Directory of run JSONL files");
    rep_cmd->add_option("--report-dir", rep_dir, "Directory for the CSV tables");
    add_out(rep_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (init_cmd->parsed()) {
            const auto root = resolve_out_root(out, "");
            const auto vocab = corpus_vocabulary();
            const auto model = make_model(init_m, vocab, root);
            const auto path = under(root, init_path);
            if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
            save_weights(model, path);
            const auto& c = model.config();
            std::printf("weights:     %s\n", path.c_str());
            std::printf("shape:       L=%zu H=%zu d=%zu ffn=%zu vocab=%zu max_position=%zu\n", c.n_layers, c.n_heads,
                        c.hidden_size, c.ffn_size, c.vocab_size, c.max_position);
            std::printf("fingerprint: %s\n", to_hex(model.fingerprint()).c_str());
            return kOk;
        }

        if (gen_cmd->parsed()) {
            const auto root = resolve_out_root(out, "");
            auto bundle = make_bundle(gen_c, gen_seed, parse_variant(gen_variant), gen_per_kind);
            const auto dir = under(root, gen_bundle);
            save_bundle(bundle, dir);
            print_summary(bundle, dir);
            return kOk;
        }

        if (comp_cmd->parsed()) {
            const auto root = resolve_out_root(out, "");
            if (comp_mode == "fsq")
                KVC_CHECK(!split_whitespace(comp_query).empty(), ErrorCode::InvalidArgument,
                          "--mode fsq requires --query");
            const auto bundle = load_bundle(under(root, comp_bundle));
            const auto model = make_model(comp_m, bundle.vocab, root);
            const auto guidance = make_guidance(comp_mode, bundle, comp_examples, comp_example_seed, comp_query);
            const auto context = bundle.corpus_tokens();
            CompressionBudget budget{comp_budget,
                                     comp_schedule == "flat" ? BudgetSchedule::Flat : BudgetSchedule::Proportional};
            const auto plan = plan_chunks(context.size(), comp_segments);
            for (const auto& w : plan.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
            const auto t0 = Clock::now();
            const auto cc = compress_iterative(model, bundle.vocab, context, guidance, budget, plan);
            const double secs = since(t0);
            const auto path = under(root, comp_cache);
            if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
            save_cache(cc, path);
            std::printf("cache:         %s\n", path.c_str());
            std::printf("guidance:      %s (%zu examples)\n", to_string(guidance.kind), guidance.examples.size());
            std::printf("tokens:        %zu -> %zu (%.1fx)\n", context.size(), cc.length(),
                        static_cast<double>(context.size()) / static_cast<double>(cc.length()));
            std::printf("segments:      %zu of %zu tokens\n", plan.segment_count, plan.chunk_len);
            std::printf("compression_s: %.3f\n", secs);
            return kOk;
        }

        if (ask_cmd->parsed()) {
            const auto root = resolve_out_root(out, "");
            KVC_CHECK(!split_whitespace(ask_question).empty(), ErrorCode::InvalidArgument, "question must not be empty");
            KVC_CHECK(ask_max_new >= 1, ErrorCode::InvalidArgument, "--max-new must be at least 1");
            const auto bundle = load_bundle(under(root, ask_bundle));
            const auto model = make_model(ask_m, bundle.vocab, root);
            const auto t0 = Clock::now();
            const auto cc = load_cache(under(root, ask_cache), &model);
            const double load_s = since(t0);
            KVC_CHECK(cc.meta.corpus_fingerprint == bundle.fingerprint(), ErrorCode::Incompatible,
                      "stale cache: it was compressed from a different corpus");
            GenerationParams params;
            params.max_new_tokens = ask_max_new;
            params.stop_tokens = {special::kSep};
            const auto t1 = Clock::now();
            const auto answer = answer_with_cache(model, bundle.vocab, cc, ask_question, params);
            const double answer_s = since(t1);
            std::printf("answer:        %s\n", detokenize(answer, bundle.vocab).c_str());
            std::printf("cache_tokens:  %zu\n", cc.length());
            std::printf("compression_s: 0.000 (cache reused)\n");
            std::printf("load_s:        %.3f\n", load_s);
            std::printf("answer_s:      %.3f\n", answer_s);
            return kOk;
        }

        if (rag_cmd->parsed()) {
            const auto root = resolve_out_root(out, "");
            KVC_CHECK(!split_whitespace(rag_question).empty(), ErrorCode::InvalidArgument, "question must not be empty");
            KVC_CHECK(rag_max_new >= 1, ErrorCode::InvalidArgument, "--max-new must be at least 1");
            KVC_CHECK(rag_budget >= kChunkTokens, ErrorCode::InvalidArgument, "--budget must be at least 256");
            const auto dir = under(root, rag_bundle);
            const auto bundle = load_bundle(dir);
            const auto model = make_model(rag_m, bundle.vocab, root);
            const auto index_path = under(dir, rag_index);
            std::optional<ChunkIndex> index;
            if (fs::exists(index_path)) {
                auto loaded = load_index(index_path);
                if (loaded.corpus_fingerprint == bundle.fingerprint() &&
                    loaded.vocab_fingerprint == bundle.vocab.fingerprint())
                    index = std::move(loaded);
            }
            if (!index) {
                index = index_chunks(bundle);
                save_index(*index, index_path);
                std::printf("index:         built %s\n", index_path.c_str());
            }
            const auto t0 = Clock::now();
            const auto ranking = retrieve(*index, rag_question, bundle.chunks.size());
            const auto context = assemble_context(ranking, bundle.chunks, rag_budget);
            const double retrieve_s = since(t0);
            if (ranking.no_known_terms) std::fprintf(stderr, "warning: no query term occurs in the corpus\n");
            GenerationParams params;
            params.max_new_tokens = rag_max_new;
            params.stop_tokens = {special::kSep};
            const auto t1 = Clock::now();
            const auto answer = answer_full_context(model, bundle.vocab, context, rag_question, params);
            const double answer_s = since(t1);
            std::string ids;
            for (auto id : ranking.ids(chunks_in_budget(rag_budget))) ids += (ids.empty() ? "" : ",") + std::to_string(id);
            std::printf("answer:        %s\n", detokenize(answer, bundle.vocab).c_str());
            std::printf("chunks:        %s\n", ids.c_str());
            std::printf("retrieve_s:    %.3f\n", retrieve_s);
            std::printf("answer_s:      %.3f\n", answer_s);
            return kOk;
        }

        if (eval_cmd->parsed()) {
            RunConfig cfg = eval_config.empty() ? RunConfig{} : load_config(eval_config);
            if (!eval_methods.empty()) cfg.methods = parse_methods(eval_methods);
            if (!eval_budgets.empty()) cfg.budgets = parse_size_list(eval_budgets);
            if (!eval_levels.empty()) cfg.levels = parse_size_list(eval_levels, true);
            if (!eval_seeds.empty()) {
                cfg.seeds.clear();
                for (auto s : parse_size_list(eval_seeds)) cfg.seeds.push_back(s);
            }
            if (eval_max_new) cfg.max_new_tokens = eval_max_new;
            const auto root = resolve_out_root(out, cfg.out);
            for (auto c : cfg.levels) {
                CorpusSpec spec;
                spec.connectivity = c;
                spec.validate();
            }
            ModelOpts m{cfg.model_kind, cfg.model_seed, cfg.weights, cfg.model_layers};
            const auto model = make_model(m, corpus_vocabulary(), root);

            SuiteConfig suite;
            suite.methods = cfg.methods;
            suite.budgets = cfg.budgets;
            suite.seeds = cfg.seeds;
            suite.segments = cfg.segments;
            suite.few_shot_examples = cfg.examples;
            suite.max_new_tokens = cfg.max_new_tokens;
            suite.streaming_sink = cfg.streaming_sink;
            suite.snapkv_window = cfg.snapkv_window;
            suite.snapkv_pool = cfg.snapkv_pool;
            suite.expattn_samples = cfg.expattn_samples;
            suite.resume = eval_resume;

            std::vector<RunRecord> all;
            std::size_t warnings = 0;
            for (auto c : cfg.levels) {
                const auto bundle = make_bundle(c, cfg.corpus_seed, cfg.variant, cfg.questions_per_kind);
                char name[96];
                std::snprintf(name, sizeof name, "runs/%s-c%zu-s%llu.jsonl", to_string(cfg.variant), c,
                              static_cast<unsigned long long>(cfg.corpus_seed));
                suite.output_path = under(root, name);
                const auto t0 = Clock::now();
                const auto outcome = run_suite(model, bundle, suite);
                warnings += outcome.failures;
                std::printf("level %zu: %zu records (%zu resumed), %zu failures, %llu compressions, %.1f s\n", c,
                            outcome.records.size(), outcome.skipped, outcome.failures,
                            static_cast<unsigned long long>(outcome.compressions), since(t0));
                std::fflush(stdout);
                auto recs = read_records(suite.output_path);
                all.insert(all.end(), recs.begin(), recs.end());
            }
            const auto rows = emit_report(all, under(root, "report"));
            std::printf("report: %zu rows in %s\n", rows.size(), under(root, "report").c_str());
            if (warnings) std::fprintf(stderr, "warning: %zu questions failed; see the error field in runs/\n", warnings);
            return kOk;
        }

        if (ttft_cmd->parsed()) {
            const auto root = resolve_out_root(out, "");
            const auto sizes = parse_size_list(ttft_sizes);
            std::vector<TtftScenario> scenarios;
            for (const auto& s : split_whitespace([&] {
                     std::string t = ttft_scenarios;
                     for (auto& ch : t)
                         if (ch == ',') ch = ' ';
                     return t;
                 }()))
                scenarios.push_back(ttft_scenario_from_string(s));
            KVC_CHECK(!scenarios.empty(), ErrorCode::InvalidArgument, "no ttft scenario given");
            const auto vocab = corpus_vocabulary();
            const auto model = make_model(ttft_m, vocab, root);
            TtftOptions opts;
            opts.reps = ttft_reps;
            opts.segments = ttft_segments;
            opts.connectivity = ttft_c;
            opts.corpus_seed = ttft_corpus_seed;
            opts.scratch_dir = under(root, "ttft_scratch");
            std::vector<TimingRecord> records;
            std::printf("%-9s %8s %7s %8s %10s %10s\n", "scenario", "corpus", "budget", "question", "median_s", "min_s");
            for (auto n : sizes) {
                for (auto s : scenarios) {
                    auto r = measure_ttft(model, vocab, s, n, ttft_budget, ttft_question, opts);
                    if (r.feasible)
                        std::printf("%-9s %8zu %7zu %8zu %10.4f %10.4f\n", to_string(s), n, r.budget_tokens,
                                    r.question_tokens, r.median_s, r.min_s);
                    else
                        std::printf("%-9s %8zu %7zu %8zu %10s %10s  (%s)\n", to_string(s), n, r.budget_tokens,
                                    r.question_tokens, "-", "-", r.note.c_str());
                    std::fflush(stdout);
                    records.push_back(r);
                }
            }
            std::error_code ec;
            fs::remove_all(opts.scratch_dir, ec);
            const auto csv = under(root, ttft_csv);
            write_ttft_csv(records, csv);
            std::printf("csv: %s\n", csv.c_str());
            return kOk;
        }

        if (rep_cmd->parsed()) {
            const auto root = resolve_out_root(out, "");
            const auto runs = under(root, rep_runs);
            KVC_CHECK(fs::is_directory(runs), ErrorCode::MissingArtifact, "runs directory not found: " + runs);
            std::vector<std::string> files;
            for (const auto& e : fs::directory_iterator(runs))
                if (e.path().extension() == ".jsonl") files.push_back(e.path().string());
            std::sort(files.begin(), files.end());
            std::vector<RunRecord> all;
            for (const auto& f : files) {
                auto recs = read_records(f);
                all.insert(all.end(), recs.begin(), recs.end());
            }
            const auto rows = emit_report(all, under(root, rep_dir));
            std::printf("%-10s %6s %4s %6s %10s %9s %9s %9s %7s\n", "method", "budget", "c", "count", "mean_score",
                        "retention", "ev_recall", "join_rec", "bound");
            for (const auto& r : rows) {
                auto opt = [](const std::optional<double>& v) {
                    char b[16];
                    if (!v) return std::string("-");
                    std::snprintf(b, sizeof b, "%.3f", *v);
                    return std::string(b);
                };
                std::printf("%-10s %6zu %4zu %6zu %10.3f %9s %9s %9s %7.3f\n", r.method.c_str(), r.budget,
                            r.connectivity, r.count, r.mean_score, opt(r.mean_retention).c_str(),
                            opt(r.mean_evidence_recall).c_str(), opt(r.mean_join_evidence_recall).c_str(), r.bound);
            }
            std::printf("report: %s\n", under(root, rep_dir).c_str());
            return kOk;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
    return kUsage;
}

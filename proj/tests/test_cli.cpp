// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cli_config.hpp"
#include "test_util.hpp"

using namespace kvc;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Run kvc_run(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const auto dir = kvc::testing::temp_dir("cli_io");
    const auto out = dir / ("o" + std::to_string(counter));
    const auto err = dir / ("e" + std::to_string(counter++));
    const std::string cmd = env + " " + KVC_CLI + std::string(" ") + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string line_value(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (l.rfind(key, 0) == 0) {
            auto v = l.substr(key.size());
            return v.substr(v.find_first_not_of(' '));
        }
    return {};
}

}  // namespace

TEST(CliHelp, MatchesGoldenFiles) {
    const std::vector<std::string> cmds = {"", "init-model", "corpusgen", "compress", "ask",
                                           "rag", "eval",       "ttft",      "report"};
    const bool update = std::getenv("KVC_UPDATE_GOLDEN") != nullptr;
    for (const auto& c : cmds) {
        const auto r = kvc_run(c + " --help");
        EXPECT_EQ(r.code, 0) << c;
        const fs::path golden = fs::path(KVC_GOLDEN_DIR) / ("help_" + (c.empty() ? std::string("kvc") : c) + ".txt");
        if (update) {
            std::ofstream(golden, std::ios::binary) << r.out;
            continue;
        }
        ASSERT_TRUE(fs::exists(golden)) << golden;
        EXPECT_EQ(r.out, slurp(golden)) << c;
    }
}

TEST(CliHelp, EveryFlagShowsItsDefault) {
    const auto r = kvc_run("compress --help");
    for (const auto* flag : {"--budget UINT [512]", "--segments UINT [2]", "--mode TEXT:{zs,fs,fsq} [fs]",
                             "--examples UINT [3]", "--cache TEXT [cache.kvc]"})
        EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
    const auto t = kvc_run("ttft --help");
    for (const auto* flag : {"[16384,32768,65536,131072]", "--budget UINT [8192]", "--question UINT [512]", "--reps UINT [5]"})
        EXPECT_NE(t.out.find(flag), std::string::npos) << flag;
}

TEST(CliConfig, ParsesSectionsListsAndRanges) {
    const auto cfg = cli::parse_config(R"(
# comment
[model-core]
kind = diagnostic
seed = 7
[corpusgen]
levels = 1-3, 8
variant = similar
[kv-compress]
segments = 4   ; trailing comment
[evalharness]
methods = rag, kvc_fs, oracle
budgets = 512,1024
seeds = 1, 2
max_new_tokens = 3
[cli]
out = results
)");
    EXPECT_EQ(cfg.model_kind, "diagnostic");
    EXPECT_EQ(cfg.model_seed, 7u);
    EXPECT_EQ(cfg.levels, (std::vector<std::size_t>{1, 2, 3, 8}));
    EXPECT_EQ(cfg.variant, NameVariant::Similar);
    EXPECT_EQ(cfg.segments, 4u);
    EXPECT_EQ(cfg.methods, (std::vector<MethodTag>{MethodTag::Rag, MethodTag::KvcFs, MethodTag::Oracle}));
    EXPECT_EQ(cfg.budgets, (std::vector<std::size_t>{512, 1024}));
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2}));
    EXPECT_EQ(cfg.max_new_tokens, 3u);
    EXPECT_EQ(cfg.out, "results");
}

TEST(CliConfig, RejectsUnknownAndBadValues) {
    for (const auto* text : {"[evalharness]\nbogus = 1\n", "[nosuch]\n", "budgets = 1\n", "[evalharness]\nbudgets\n",
                             "[evalharness]\nmethods = rag, magic\n", "[corpusgen]\nlevels = 3-1\n",
                             "[model-core]\nseed = -1\n", "[model-core]\nkind = big\n", "[evalharness]\nbudgets = 1,,2\n"}) {
        try {
            cli::parse_config(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidArgument) << text;
        }
    }
    try {
        cli::parse_config("[cli]\nout = x\n\n[evalharness]\nnope = 2\n");
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
    }
    EXPECT_THROW(cli::load_config("/nonexistent/run.ini"), Error);
}

TEST(CliConfig, OutRootPrecedence) {
    ::unsetenv("KVC_OUT");
    EXPECT_EQ(cli::resolve_out_root("", ""), ".");
    EXPECT_EQ(cli::resolve_out_root("", "cfg"), "cfg");
    ::setenv("KVC_OUT", "env", 1);
    EXPECT_EQ(cli::resolve_out_root("", "cfg"), "env");
    EXPECT_EQ(cli::resolve_out_root("flag", "cfg"), "flag");
    ::unsetenv("KVC_OUT");
}

TEST(CliConfig, ExitCodeMapping) {
    EXPECT_EQ(cli::exit_code_for(ErrorCode::InvalidArgument), 2);
    EXPECT_EQ(cli::exit_code_for(ErrorCode::MissingArtifact), 3);
    EXPECT_EQ(cli::exit_code_for(ErrorCode::Incompatible), 4);
    EXPECT_EQ(cli::exit_code_for(ErrorCode::Malformed), 4);
}

TEST(CliCommands, CorpusgenWritesIdenticalBundles) {
    const auto root = kvc::testing::temp_dir("cli_gen");
    auto a = kvc_run("corpusgen --connectivity 2 --seed 1 --out " + (root / "a").string());
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(line_value(a.out, "chunks:"), "128 x 256 tokens");
    EXPECT_EQ(line_value(a.out, "questions:"), "50 (25 direct, 25 join)");
    auto b = kvc_run("corpusgen --connectivity 2 --seed 1", "KVC_OUT=" + (root / "b").string());
    ASSERT_EQ(b.code, 0) << b.err;
    for (auto f : {"corpus.jsonl", "questions.jsonl", "spec.json", "vocab.txt"})
        EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
    auto bad = kvc_run("corpusgen --connectivity 9 --out " + (root / "c").string());
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("connectivity"), std::string::npos);
    EXPECT_EQ(kvc_run("corpusgen --variant odd").code, 2);
    EXPECT_EQ(kvc_run("nosuchcommand").code, 2);
    EXPECT_EQ(kvc_run("").code, 2);
}

TEST(CliCommands, CompressAskAndErrors) {
    const auto root = kvc::testing::temp_dir("cli_comp").string();
    ASSERT_EQ(kvc_run("corpusgen --out " + root).code, 0);
    const std::string common = " --out " + root + " --model-kind diagnostic";

    auto c = kvc_run("compress --budget 512" + common);
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(line_value(c.out, "tokens:"), "32768 -> 512 (64.0x)");
    EXPECT_EQ(line_value(c.out, "guidance:"), "fs (3 examples)");
    EXPECT_TRUE(fs::exists(fs::path(root) / "cache.kvc"));
    const auto cache_bytes = slurp(fs::path(root) / "cache.kvc");

    auto zs = kvc_run("compress --mode zs --examples 5 --cache zs.kvc" + common);
    ASSERT_EQ(zs.code, 0) << zs.err;
    EXPECT_EQ(line_value(zs.out, "guidance:"), "zs (0 examples)");

    EXPECT_EQ(kvc_run("compress --mode fsq" + common).code, 2);
    auto fsq = kvc_run("compress --mode fsq --query \"who sponsors atlas ?\" --cache q.kvc" + common);
    EXPECT_EQ(fsq.code, 0) << fsq.err;
    EXPECT_EQ(kvc_run("compress --weights missing.kvcw --out " + root).code, 3);
    EXPECT_EQ(kvc_run("compress --bundle nowhere" + common).code, 3);

    const std::string q = " --question \"which projects does x belong to ?\"";
    auto a1 = kvc_run("ask --max-new 1" + q + common);
    ASSERT_EQ(a1.code, 0) << a1.err;
    EXPECT_EQ(split_whitespace(line_value(a1.out, "answer:")).size(), 1u);
    EXPECT_EQ(line_value(a1.out, "compression_s:"), "0.000 (cache reused)");
    auto a2 = kvc_run("ask --max-new 1" + q + common);
    EXPECT_EQ(a2.code, 0);
    EXPECT_EQ(line_value(a2.out, "answer:"), line_value(a1.out, "answer:"));
    EXPECT_EQ(line_value(a2.out, "compression_s:"), "0.000 (cache reused)");
    EXPECT_EQ(slurp(fs::path(root) / "cache.kvc"), cache_bytes);

    EXPECT_EQ(kvc_run("ask --question \"  \"" + common).code, 2);
    EXPECT_EQ(kvc_run("ask" + common).code, 2);
    // stale: a different model, then a different corpus
    EXPECT_EQ(kvc_run("ask --model-kind reference" + q + " --out " + root).code, 4);
    const auto other = kvc::testing::temp_dir("cli_comp_other").string();
    ASSERT_EQ(kvc_run("corpusgen --seed 5 --out " + other).code, 0);
    EXPECT_EQ(kvc_run("ask --bundle " + other + " --cache " + root + "/cache.kvc" + q + common).code, 4);
    // corrupted cache
    {
        std::ofstream f(fs::path(root) / "bad.kvc", std::ios::binary);
        f << "KVCX not a cache";
    }
    EXPECT_EQ(kvc_run("ask --cache bad.kvc" + q + common).code, 4);
    EXPECT_EQ(kvc_run("ask --cache none.kvc" + q + common).code, 3);

    auto r = kvc_run("rag --budget 512 --max-new 2" + q + common);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(split_whitespace(line_value(r.out, "chunks:")).size(), 1u);
    EXPECT_EQ(kvc_run("rag --budget 100" + q + common).code, 2);
}

TEST(CliCommands, InitModelRoundTrip) {
    const auto root = kvc::testing::temp_dir("cli_init").string();
    auto r = kvc_run("init-model --seed 3 --out " + root);
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(kvc_run("corpusgen --out " + root).code, 0);
    auto c1 = kvc_run("compress --budget 1024 --cache w.kvc --weights model.kvcw --out " + root);
    auto c2 = kvc_run("compress --budget 1024 --cache s.kvc --model-seed 3 --out " + root);
    ASSERT_EQ(c1.code, 0) << c1.err;
    ASSERT_EQ(c2.code, 0) << c2.err;
    EXPECT_EQ(slurp(fs::path(root) / "w.kvc"), slurp(fs::path(root) / "s.kvc"));
    EXPECT_EQ(kvc_run("compress --weights model.kvcw --model-kind diagnostic --out " + root).code, 4);
}

TEST(CliCommands, EvalResumeAndReport) {
    const auto root = kvc::testing::temp_dir("cli_eval").string();
    const auto cfg_path = root + "/run.ini";
    std::ofstream(cfg_path) << "[model-core]\nkind = diagnostic\n[corpusgen]\nlevels = 1-2\n"
                               "[evalharness]\nmethods = rag, kvc_zs\nbudgets = 512\nmax_new_tokens = 1\n";
    auto e = kvc_run("eval --config " + cfg_path + " --out " + root);
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.out.find("level 1: 94 records (0 resumed), 0 failures, 1 compressions"), std::string::npos) << e.out;
    const auto runs = fs::path(root) / "runs" / "distinct-c2-s1.jsonl";
    auto lines = slurp(runs);
    {
        std::ofstream f(runs, std::ios::trunc);
        f << lines.substr(0, lines.size() / 2);
    }
    auto resumed = kvc_run("eval --resume --config " + cfg_path + " --out " + root);
    ASSERT_EQ(resumed.code, 0) << resumed.err;
    EXPECT_NE(resumed.out.find("level 1: 0 records (94 resumed)"), std::string::npos) << resumed.out;
    std::set<std::string> ids;
    std::size_t n = 0;
    std::ifstream in(runs);
    for (std::string l; std::getline(in, l); ++n) ids.insert(l.substr(0, l.find("\"raw_text\"")));
    EXPECT_EQ(n, 94u);
    EXPECT_EQ(ids.size(), 94u);
    EXPECT_TRUE(fs::exists(fs::path(root) / "report" / "summary.csv"));

    auto rep = kvc_run("report --report-dir report2 --out " + root);
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_EQ(slurp(fs::path(root) / "report" / "summary.csv"), slurp(fs::path(root) / "report2" / "summary.csv"));

    EXPECT_EQ(kvc_run("eval --config " + cfg_path + " --methods rag,bogus --out " + root).code, 2);
    EXPECT_EQ(kvc_run("eval --config " + cfg_path + " --levels 0-2 --out " + root).code, 2);
    std::ofstream(root + "/bad.ini") << "[evalharness]\nwho = me\n";
    EXPECT_EQ(kvc_run("eval --config " + root + "/bad.ini --out " + root).code, 2);
    EXPECT_EQ(kvc_run("eval --config " + root + "/absent.ini").code, 3);
    EXPECT_EQ(kvc_run("report --out " + root + "/empty").code, 3);
}

TEST(CliCommands, TtftWritesCsv) {
    const auto root = kvc::testing::temp_dir("cli_ttft").string();
    auto r = kvc_run("ttft --corpus-sizes 1024,2048 --budget 512 --question 32 --reps 5 --out " + root);
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(fs::path(root) / "ttft.csv");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0].rfind("scenario,corpus_tokens,budget,question_tokens,median_s,min_s", 0), 0u);
    EXPECT_EQ(lines[1].rfind("full,1024,1024,32,", 0), 0u);
    EXPECT_EQ(lines[3].rfind("kvc,1024,512,32,", 0), 0u);
    EXPECT_FALSE(fs::exists(fs::path(root) / "ttft_scratch"));
    EXPECT_EQ(kvc_run("ttft --scenarios warp --out " + root).code, 2);
    EXPECT_EQ(kvc_run("ttft --reps 2 --corpus-sizes 1024 --budget 512 --question 32 --out " + root).code, 2);
}

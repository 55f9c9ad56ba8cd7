// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace kvc::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        KVC_CHECK(!item.empty(), ErrorCode::InvalidArgument, "empty item in list '" + text + "'");
        out.push_back(item);
    }
    KVC_CHECK(!out.empty(), ErrorCode::InvalidArgument, "empty list");
    return out;
}

std::uint64_t parse_u64(const std::string& text) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    KVC_CHECK(used == text.size() && !text.empty() && text[0] != '-', ErrorCode::InvalidArgument,
              "'" + text + "' is not a non-negative integer");
    return v;
}

}  // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::Overflow:
            return kUsage;
        case ErrorCode::MissingArtifact:
            return kMissing;
        case ErrorCode::Incompatible:
        case ErrorCode::Malformed:
            return kStale;
        case ErrorCode::Internal:
            return kFailure;
    }
    return kFailure;
}

std::vector<std::size_t> parse_size_list(const std::string& text, bool allow_ranges) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) {
        const auto dash = item.find('-');
        if (allow_ranges && dash != std::string::npos && dash > 0) {
            const auto lo = parse_u64(trim(item.substr(0, dash)));
            const auto hi = parse_u64(trim(item.substr(dash + 1)));
            KVC_CHECK(lo <= hi, ErrorCode::InvalidArgument, "descending range '" + item + "'");
            for (auto v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(parse_u64(item));
        }
    }
    return out;
}

std::vector<MethodTag> parse_methods(const std::string& text) {
    std::vector<MethodTag> out;
    for (const auto& item : split_list(text)) out.push_back(method_from_string(item));
    return out;
}

NameVariant parse_variant(const std::string& text) {
    if (text == "distinct") return NameVariant::Distinct;
    if (text == "similar") return NameVariant::Similar;
    throw Error(ErrorCode::InvalidArgument, "unknown name variant '" + text + "' (distinct|similar)");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    using Setter = std::function<void(const std::string&)>;
    auto size = [](std::size_t& dst) { return Setter([&dst](const std::string& v) { dst = parse_u64(v); }); };
    auto u64 = [](std::uint64_t& dst) { return Setter([&dst](const std::string& v) { dst = parse_u64(v); }); };
    const std::map<std::string, std::map<std::string, Setter>> keys = {
        {"model-core",
         {{"kind",
           [&](const std::string& v) {
               KVC_CHECK(v == "reference" || v == "diagnostic", ErrorCode::InvalidArgument,
                         "model kind must be reference or diagnostic");
               cfg.model_kind = v;
           }},
          {"seed", u64(cfg.model_seed)},
          {"weights", [&](const std::string& v) { cfg.weights = v; }},
          {"layers", size(cfg.model_layers)}}},
        {"corpusgen",
         {{"seed", u64(cfg.corpus_seed)},
          {"levels", [&](const std::string& v) { cfg.levels = parse_size_list(v, true); }},
          {"variant", [&](const std::string& v) { cfg.variant = parse_variant(v); }},
          {"questions_per_kind", size(cfg.questions_per_kind)}}},
        {"kv-compress",
         {{"segments", size(cfg.segments)},
          {"examples", size(cfg.examples)},
          {"streaming_sink", size(cfg.streaming_sink)},
          {"snapkv_window", size(cfg.snapkv_window)},
          {"snapkv_pool", size(cfg.snapkv_pool)},
          {"expattn_samples", size(cfg.expattn_samples)}}},
        {"evalharness",
         {{"methods", [&](const std::string& v) { cfg.methods = parse_methods(v); }},
          {"budgets", [&](const std::string& v) { cfg.budgets = parse_size_list(v); }},
          {"seeds",
           [&](const std::string& v) {
               cfg.seeds.clear();
               for (auto s : parse_size_list(v)) cfg.seeds.push_back(s);
           }},
          {"max_new_tokens", size(cfg.max_new_tokens)}}},
        {"cli", {{"out", [&](const std::string& v) { cfg.out = v; }}}},
    };

    std::string section;
    std::stringstream in(text);
    std::size_t line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const auto where = "config line " + std::to_string(line_no) + ": ";
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            KVC_CHECK(line.back() == ']', ErrorCode::InvalidArgument, where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            KVC_CHECK(keys.count(section), ErrorCode::InvalidArgument, where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        KVC_CHECK(eq != std::string::npos, ErrorCode::InvalidArgument, where + "expected key = value");
        KVC_CHECK(!section.empty(), ErrorCode::InvalidArgument, where + "key outside of a section");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto& known = keys.at(section);
        auto it = known.find(key);
        KVC_CHECK(it != known.end(), ErrorCode::InvalidArgument,
                  where + "unknown key '" + key + "' in [" + section + "]");
        try {
            it->second(value);
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    KVC_CHECK(in.good(), ErrorCode::MissingArtifact, "config file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string resolve_out_root(const std::string& flag_value, const std::string& config_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("KVC_OUT"); env && *env) return env;
    if (!config_value.empty()) return config_value;
    return ".";
}

}  // namespace kvc::cli

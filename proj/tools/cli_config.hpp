// Copyright (C) 2026 The kvc-workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kvc/corpus.hpp"
#include "kvc/eval.hpp"

namespace kvc::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kMissing = 3, kStale = 4 };

/// Process exit code for a library error.
int exit_code_for(ErrorCode code);

/// Flat key-value run configuration. Sections mirror module names:
///
///   [model-core]   kind, seed, weights, layers
///   [corpusgen]    seed, levels, variant, questions_per_kind
///   [kv-compress]  segments, examples, streaming_sink, snapkv_window, snapkv_pool, expattn_samples
///   [evalharness]  methods, budgets, seeds, max_new_tokens
///   [cli]          out
///
/// Lists are comma separated; levels also accept ranges such as 1-8.
struct RunConfig {
    std::string model_kind = "reference";
    std::uint64_t model_seed = 1;
    std::string weights;
    std::size_t model_layers = 0;  // 0 keeps the kind's default

    std::uint64_t corpus_seed = 1;
    std::vector<std::size_t> levels = {2};
    NameVariant variant = NameVariant::Distinct;
    std::size_t questions_per_kind = 25;

    std::size_t segments = 2;
    std::size_t examples = 3;
    std::size_t streaming_sink = 4;
    std::size_t snapkv_window = 64;
    std::size_t snapkv_pool = 7;
    std::size_t expattn_samples = 256;

    std::vector<MethodTag> methods = {MethodTag::Rag, MethodTag::KvcFs};
    std::vector<std::size_t> budgets = {512, 1024, 2048, 4096};
    std::vector<std::uint64_t> seeds = {1};
    std::size_t max_new_tokens = 16;

    std::string out;
};

/// Throws InvalidArgument naming the line for unknown sections or keys and bad values.
RunConfig parse_config(const std::string& text);

/// Throws MissingArtifact when the file does not exist.
RunConfig load_config(const std::string& path);

std::vector<std::size_t> parse_size_list(const std::string& text, bool allow_ranges = false);
std::vector<MethodTag> parse_methods(const std::string& text);
NameVariant parse_variant(const std::string& text);

/// Output root: the explicit flag, else KVC_OUT, else the config value, else ".".
std::string resolve_out_root(const std::string& flag_value, const std::string& config_value);

}  // namespace kvc::cli

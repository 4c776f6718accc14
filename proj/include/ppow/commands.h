// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppow/config.h"
#include "ppow/corpus.h"
#include "ppow/models.h"
#include "ppow/specdec.h"

namespace ppow {

// Bad command-line usage, such as an unknown suite name. Maps to exit code 1
// like ConfigError; everything else maps to 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The frozen task a config describes: grammar (when known), training corpus,
// held-out prompts and the fitted target.
struct Task {
  std::optional<GrammarSpec> grammar;
  std::vector<TokenSeq> corpus;
  std::vector<TokenSeq> prompts;
  TabularTarget target;
};

Task build_task(const RunConfig& cfg);

EvalOptions eval_options(const RunConfig& cfg, std::size_t window,
                         std::size_t candidates, double temperature);

// Each command writes into cfg.out_dir and holds a lockfile there while it
// runs. Metrics are one JSON object per line; `wall_time` is the only field
// that differs between reruns.

// SFT from a fresh initialization: checkpoint.ckpt and metrics.jsonl.
void cmd_pretrain(const RunConfig& cfg);

// PPOW (or CST when arm = cst) from `init`: checkpoint.ckpt, metrics.jsonl and
// optional periodic checkpoints.
void cmd_train_ppow(const RunConfig& cfg, const std::string& init);

// One row per (window, candidates, temperature) point: eval.jsonl and
// eval.tsv. `init` is a checkpoint path, or "@target" for the perfect drafter.
std::vector<DecodeStats> cmd_eval(const RunConfig& cfg, const std::string& init);

// Suites: pinsker, reward-table, nabla, easy-hard. Writes report_<suite>.txt
// and <suite>.jsonl; returns true when every verdict passes. easy-hard uses
// `init` as its baseline drafter, or a fresh initialization when empty.
bool cmd_analyze(const RunConfig& cfg, const std::string& suite, const std::string& init);

inline constexpr const char* kPerfectDrafter = "@target";

}  // namespace ppow

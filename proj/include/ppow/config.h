// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppow/checkpoint.h"
#include "ppow/corpus.h"
#include "ppow/models.h"
#include "ppow/trainer.h"

namespace ppow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrainArm { kPpow, kCst };

// Everything a command needs, read from flat `key = value` lines. Every key
// has a default, so an empty file is a valid config.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool plot_ready = false;

  // Task. With no grammar_path a random grammar is drawn from task_seed; with
  // no corpus_path the training corpus is sampled from the grammar.
  std::uint64_t task_seed = 1;
  std::string grammar_path;
  std::size_t grammar_vocab = 16;
  std::size_t grammar_order = 3;
  RandomGrammarOptions grammar{.peak_mass = 0.95};
  std::string corpus_path;
  std::size_t corpus_sequences = 400;
  std::size_t corpus_length = 64;
  std::size_t target_order = 3;
  double target_smoothing = 0.01;

  // Drafter.
  std::size_t embed_dim = 16;
  std::size_t context_len = 2;
  std::size_t hidden_dim = 32;
  bool use_feature = true;
  double init_scale = 0.05;

  // Supervised pretraining; lr decays linearly to sft_lr * sft_lr_final.
  std::size_t sft_steps = 100000;
  double sft_lr = 0.05;
  double sft_lr_final = 0.1;

  TrainConfig train;
  TrainArm arm = TrainArm::kPpow;
  std::size_t log_every = 100;
  std::size_t eval_every = 0;
  std::size_t checkpoint_every = 0;

  // Evaluation. Without eval_prompts_path, prompts are fresh grammar samples
  // (or the held-out tail of a corpus file when there is no grammar).
  std::string eval_prompts_path;
  std::size_t eval_prompts = 200;
  std::size_t eval_prompt_length = 8;
  std::size_t eval_max_tokens = 64;
  std::vector<std::size_t> eval_windows = {10};
  std::vector<std::size_t> eval_candidates = {1};
  std::vector<double> eval_temperatures = {1.0};

  // Analysis suites.
  std::size_t analysis_pairs = 100000;
  std::vector<std::size_t> analysis_vocab_sizes = {2, 8, 64};
  std::size_t analysis_mc_trials = 100000;
  std::vector<double> analysis_gammas = {0.12, 0.125};
  std::vector<std::size_t> analysis_ks = {0, 1, 2, 3, 4, 5, 6, 7};
  double cost_draft = 0.2;
  double cost_verify = 1.0;
  double cost_overhead = 0.1;
  std::size_t analysis_windows = 500;

  DrafterShape drafter_shape() const;
  // Throws ConfigError on any out-of-range value.
  void validate() const;
  // Every key with its current value, in file order.
  ConfigEcho echo() const;
};

// Throws ConfigError on unknown keys, malformed lines, duplicate keys or
// unparsable values. The result is validated.
RunConfig parse_config(std::istream& in);
RunConfig read_config_file(const std::string& path);
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace ppow

// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include <glog/logging.h>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ppow/checkpoint.h"
#include "ppow/commands.h"
#include "ppow/config.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Flags {
  std::string config;
  std::string init;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string suite;
};

ppow::RunConfig load(const Flags& f) {
  ppow::RunConfig cfg = f.config.empty() ? ppow::RunConfig{} : ppow::read_config_file(f.config);
  if (const char* env = std::getenv("PPOW_SEED")) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ppow::ConfigError(std::string("PPOW_SEED is not an unsigned integer: ") + env);
    }
  }
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides out_dir)");
  cmd->add_option("--seed", f.seed, "root seed (overrides PPOW_SEED and the config)");
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;

  CLI::App app{"Speculative-decoding drafter training with windowed policy optimization"};
  app.require_subcommand(1);
  Flags f;
  auto* pretrain = app.add_subcommand("pretrain", "supervised drafter initialization");
  auto* train = app.add_subcommand("train-ppow", "policy optimization from a checkpoint");
  auto* eval = app.add_subcommand("eval", "acceptance-length sweep over (K, G, T)");
  auto* analyze = app.add_subcommand("analyze", "analysis suites with pass/fail verdicts");
  for (auto* cmd : {pretrain, train, eval, analyze}) add_common(cmd, f);
  train->add_option("--init", f.init, "initial checkpoint")->required();
  eval->add_option("--init", f.init, "checkpoint, or @target for the perfect drafter")->required();
  analyze->add_option("--suite", f.suite, "pinsker | reward-table | nabla | easy-hard")->required();
  analyze->add_option("--init", f.init, "baseline drafter checkpoint for easy-hard");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    const ppow::RunConfig cfg = load(f);
    if (pretrain->parsed()) {
      ppow::cmd_pretrain(cfg);
    } else if (train->parsed()) {
      ppow::cmd_train_ppow(cfg, f.init);
    } else if (eval->parsed()) {
      for (const auto& s : ppow::cmd_eval(cfg, f.init)) {
        std::cout << "K=" << s.window << " G=" << s.candidates << " T=" << s.temperature
                  << " tau=" << s.tau << " speedup=" << s.speedup_cost_model << "\n";
      }
    } else {
      const bool ok = ppow::cmd_analyze(cfg, f.suite, f.init);
      std::cout << "suite " << f.suite << ": " << (ok ? "PASS" : "FAIL") << " (report in "
                << cfg.out_dir << "/report_" << f.suite << ".txt)\n";
      if (!ok) return kExitRuntime;
    }
  } catch (const ppow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ppow::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/commands.h"

#include <fcntl.h>
#include <unistd.h>

#include <glog/logging.h>
#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "ppow/adaw.h"
#include "ppow/analysis.h"
#include "ppow/checkpoint.h"
#include "ppow/trainer.h"

namespace ppow {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class OutputLock {
 public:
  explicit OutputLock(const std::string& dir) : path_(fs::path(dir) / ".ppow.lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw std::runtime_error("output directory " + dir + " is locked by another run (" +
                               path_.string() + ")");
    }
    ::close(fd);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  const fs::path p = fs::path(cfg.out_dir) / name;
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void write_config_copy(const RunConfig& cfg) {
  auto out = open_output(cfg, "config.txt");
  write_config(out, cfg);
}

std::string ckpt_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

json eval_record(const DecodeStats& stats) { return json::parse(to_record(stats)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DecodeStats eval_point(const DraftPolicy& drafter, const Task& task, const RunConfig& cfg,
                       std::size_t window, std::size_t candidates, double temperature) {
  return evaluate(drafter, task.target, task.prompts,
                  eval_options(cfg, window, candidates, temperature),
                  RngStream(cfg.seed).child("eval"));
}

DecodeStats eval_default(const DrafterParameters& params, const Task& task,
                         const RunConfig& cfg) {
  const NeuralDrafter drafter(params, params.shape().feature > 0 ? &task.target : nullptr);
  return eval_point(drafter, task, cfg, cfg.eval_windows.front(), cfg.eval_candidates.front(),
                    cfg.eval_temperatures.front());
}

void check_vocab(const Task& task, const DrafterShape& shape) {
  if (shape.vocab != task.target.vocab_size()) {
    throw CheckpointError(CheckpointError::Kind::kShape,
                          "drafter vocabulary " + std::to_string(shape.vocab) +
                              " does not match target vocabulary " +
                              std::to_string(task.target.vocab_size()));
  }
}

}  // namespace

Task build_task(const RunConfig& cfg) {
  const RngStream root(cfg.task_seed);
  std::optional<GrammarSpec> grammar;
  if (!cfg.grammar_path.empty()) {
    grammar = read_grammar_file(cfg.grammar_path);
  } else if (cfg.corpus_path.empty()) {
    grammar = random_grammar(cfg.grammar_vocab, cfg.grammar_order, cfg.grammar,
                             root.child("grammar").seed());
  }
  if (grammar && grammar->vocab_size != cfg.grammar_vocab) {
    throw ConfigError("grammar vocabulary " + std::to_string(grammar->vocab_size) +
                      " does not match grammar_vocab " + std::to_string(cfg.grammar_vocab));
  }

  std::vector<TokenSeq> corpus =
      cfg.corpus_path.empty()
          ? sample_grammar_corpus(*grammar, cfg.corpus_sequences, cfg.corpus_length,
                                  root.child("corpus").seed())
          : read_corpus_file(cfg.corpus_path);

  std::vector<TokenSeq> prompts;
  if (!cfg.eval_prompts_path.empty()) {
    prompts = read_corpus_file(cfg.eval_prompts_path);
  } else if (grammar) {
    prompts = sample_grammar_corpus(*grammar, cfg.eval_prompts,
                                    std::max(cfg.eval_prompt_length, grammar->order),
                                    root.child("prompts").seed());
  } else {
    if (corpus.size() <= cfg.eval_prompts) {
      throw ConfigError("corpus has too few sequences to hold out eval_prompts prompts");
    }
    const auto split = corpus.end() - static_cast<std::ptrdiff_t>(cfg.eval_prompts);
    for (auto it = split; it != corpus.end(); ++it) {
      prompts.emplace_back(it->begin(),
                           it->begin() + static_cast<std::ptrdiff_t>(
                                             std::min(it->size(), cfg.eval_prompt_length)));
    }
    corpus.erase(split, corpus.end());
  }
  for (const TokenSeq& p : prompts) {
    if (p.empty()) throw ConfigError("empty eval prompt");
  }
  for (const auto* set : {&corpus, &prompts}) {
    for (const TokenSeq& seq : *set) {
      for (TokenId t : seq) {
        if (t >= cfg.grammar_vocab) {
          throw ConfigError("token id " + std::to_string(t) + " outside grammar_vocab");
        }
      }
    }
  }
  TabularTarget target =
      TabularTarget::fit(corpus, cfg.grammar_vocab, cfg.target_order, cfg.target_smoothing);
  LOG(INFO) << "task: " << corpus.size() << " training sequences, " << prompts.size()
            << " prompts, |V| = " << cfg.grammar_vocab;
  return Task{std::move(grammar), std::move(corpus), std::move(prompts), std::move(target)};
}

EvalOptions eval_options(const RunConfig& cfg, std::size_t window, std::size_t candidates,
                         double temperature) {
  return EvalOptions{window, candidates, temperature, cfg.eval_max_tokens,
                     cfg.train.reward.gamma};
}

void cmd_pretrain(const RunConfig& cfg) {
  OutputLock lock(cfg.out_dir);
  const Task task = build_task(cfg);
  write_config_copy(cfg);
  auto metrics = open_output(cfg, "metrics.jsonl");

  DrafterParameters params =
      DrafterParameters::random(cfg.drafter_shape(), cfg.seed, cfg.init_scale);
  const RngStream root = RngStream(cfg.seed).child("pretrain");
  const auto t0 = std::chrono::steady_clock::now();
  double loss_sum = 0.0;
  std::size_t loss_n = 0;
  for (std::size_t step = 0; step < cfg.sft_steps; ++step) {
    const double frac = static_cast<double>(step) / static_cast<double>(cfg.sft_steps);
    const double lr = cfg.sft_lr * (1.0 - (1.0 - cfg.sft_lr_final) * frac);
    loss_sum += supervised_step(params, task.target, task.corpus, lr, root.child(step));
    ++loss_n;
    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.sft_steps) {
      json j;
      j["event"] = "sft";
      j["step"] = step + 1;
      j["lr"] = lr;
      j["loss_mean"] = loss_sum / static_cast<double>(loss_n);
      j["wall_time"] = seconds_since(t0);
      metrics << j.dump() << "\n";
      loss_sum = 0.0;
      loss_n = 0;
    }
  }
  const DecodeStats stats = eval_default(params, task, cfg);
  json j;
  j["event"] = "eval";
  j["step"] = cfg.sft_steps;
  j["stats"] = eval_record(stats);
  metrics << j.dump() << "\n";
  save_checkpoint(ckpt_path(cfg, "checkpoint.ckpt"), params, cfg.echo());
  LOG(INFO) << "pretrain done: tau = " << stats.tau;
}

void cmd_train_ppow(const RunConfig& cfg, const std::string& init) {
  if (init.empty()) throw UsageError("train-ppow requires --init CKPT");
  OutputLock lock(cfg.out_dir);
  const Task task = build_task(cfg);
  DrafterParameters params = load_checkpoint(init, cfg.drafter_shape());
  check_vocab(task, params.shape());
  write_config_copy(cfg);
  auto metrics = open_output(cfg, "metrics.jsonl");

  TrainerState state{std::move(params), task.target, task.corpus, 0};
  auto log_eval = [&](std::size_t step) {
    json j;
    j["event"] = "eval";
    j["step"] = step;
    j["stats"] = eval_record(eval_default(state.params, task, cfg));
    metrics << j.dump() << "\n";
  };
  log_eval(0);
  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t step = 0; step < train.total_steps; ++step) {
    if (cfg.arm == TrainArm::kPpow) {
      const StepMetrics m = train_step(state, train);
      if ((step + 1) % cfg.log_every == 0) {
        json j = json::parse(to_record(m));
        j["event"] = "ppow";
        metrics << j.dump() << "\n";
      }
    } else {
      const double lr = scheduled_lr(train, step);
      const auto ts = std::chrono::steady_clock::now();
      const double loss = cst_step(state, train);
      if ((step + 1) % cfg.log_every == 0) {
        json j;
        j["event"] = "cst";
        j["step"] = step;
        j["lr"] = lr;
        j["loss"] = loss;
        j["wall_time"] = seconds_since(ts);
        metrics << j.dump() << "\n";
      }
    }
    if (cfg.eval_every && (step + 1) % cfg.eval_every == 0 && step + 1 < train.total_steps) {
      log_eval(step + 1);
    }
    if (cfg.checkpoint_every && (step + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(ckpt_path(cfg, "checkpoint_" + std::to_string(step + 1) + ".ckpt"),
                      state.params, cfg.echo());
    }
  }
  if (train.total_steps > 0) log_eval(train.total_steps);
  save_checkpoint(ckpt_path(cfg, "checkpoint.ckpt"), state.params, cfg.echo());
  LOG(INFO) << "train-ppow done after " << train.total_steps << " steps in "
            << seconds_since(t0) << " s";
}

std::vector<DecodeStats> cmd_eval(const RunConfig& cfg, const std::string& init) {
  if (init.empty()) throw UsageError("eval requires --init CKPT or --init @target");
  OutputLock lock(cfg.out_dir);
  const Task task = build_task(cfg);

  std::optional<DrafterParameters> params;
  std::unique_ptr<DraftPolicy> drafter;
  if (init == kPerfectDrafter) {
    drafter = std::make_unique<TargetDrafter>(task.target);
  } else {
    params = load_checkpoint(init, cfg.drafter_shape());
    check_vocab(task, params->shape());
    drafter = std::make_unique<NeuralDrafter>(
        *params, params->shape().feature > 0 ? &task.target : nullptr);
  }

  auto records = open_output(cfg, "eval.jsonl");
  auto table = open_output(cfg, "eval.tsv");
  table << "window\tcandidates\ttemperature\ttau\tspeedup_cost_model\ttokens\tsteps\n";
  std::vector<DecodeStats> rows;
  for (std::size_t K : cfg.eval_windows) {
    for (std::size_t G : cfg.eval_candidates) {
      for (double T : cfg.eval_temperatures) {
        DecodeStats s = eval_point(*drafter, task, cfg, K, G, T);
        records << to_record(s) << "\n";
        table << K << "\t" << G << "\t" << T << "\t" << s.tau << "\t" << s.speedup_cost_model
              << "\t" << s.total_tokens << "\t" << s.num_steps << "\n";
        rows.push_back(s);
      }
    }
  }
  if (cfg.plot_ready) {
    auto plot = open_output(cfg, "eval_tau_by_candidates.dat");
    for (const DecodeStats& s : rows) {
      if (s.window == cfg.eval_windows.front() && s.temperature == cfg.eval_temperatures.front()) {
        plot << s.candidates << " " << s.tau << "\n";
      }
    }
  }
  return rows;
}

namespace {

struct Report {
  std::vector<std::pair<std::string, bool>> verdicts;
  std::vector<std::string> lines;
  void check(const std::string& name, bool ok, const std::string& detail) {
    verdicts.emplace_back(name, ok);
    lines.push_back((ok ? "PASS " : "FAIL ") + name + ": " + detail);
  }
  bool all_pass() const {
    for (const auto& v : verdicts) {
      if (!v.second) return false;
    }
    return true;
  }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void suite_pinsker(const RunConfig& cfg, Report& report, std::ostream& records) {
  const RngStream root = RngStream(cfg.seed).child("analyze").child("pinsker");
  for (std::size_t V : cfg.analysis_vocab_sizes) {
    RngStream rng = root.child(V);
    std::size_t violations = 0;
    double max_identity_err = 0.0, min_slack = INFINITY;
    for (std::size_t i = 0; i < cfg.analysis_pairs; ++i) {
      const DistPair pair{random_simplex(V, rng), random_simplex(V, rng)};
      const PinskerResult r = pinsker_check(pair);
      if (!r.holds) ++violations;
      min_slack = std::min(min_slack, r.alpha - r.lower_bound);
      max_identity_err =
          std::max(max_identity_err, std::abs(r.alpha - (1.0 - total_variation(pair))));
    }
    RngStream mc_rng = root.child("mc").child(V);
    const DistPair pair{random_simplex(V, mc_rng), random_simplex(V, mc_rng)};
    const double exact = acceptance_probability(pair);
    const double empirical = monte_carlo_acceptance(pair, cfg.analysis_mc_trials, mc_rng);
    const double bound =
        3.0 * std::sqrt(exact * (1.0 - exact) / static_cast<double>(cfg.analysis_mc_trials));

    json j;
    j["vocab"] = V;
    j["pairs"] = cfg.analysis_pairs;
    j["violations"] = violations;
    j["min_slack"] = min_slack;
    j["max_identity_error"] = max_identity_err;
    j["mc_exact"] = exact;
    j["mc_empirical"] = empirical;
    j["mc_bound"] = bound;
    records << j.dump() << "\n";

    const std::string tag = "|V|=" + std::to_string(V);
    report.check("pinsker " + tag, violations == 0,
                 std::to_string(violations) + " violations in " +
                     std::to_string(cfg.analysis_pairs) + " pairs, min slack " + num(min_slack));
    report.check("identity " + tag, max_identity_err <= 1e-12,
                 "max |alpha - (1 - TV)| = " + num(max_identity_err));
    report.check("monte-carlo " + tag, std::abs(empirical - exact) <= bound,
                 "empirical " + num(empirical) + " vs exact " + num(exact) + " (3 sigma " +
                     num(bound) + ")");
  }
}

// Cost-aware column at gamma = 0.125 for k = 1..7, reference values.
constexpr std::array<double, 7> kReferenceCostAware = {0.89, 1.60, 2.18, 2.67, 3.08, 3.43, 3.74};

void suite_reward_table(const RunConfig& cfg, Report& report, std::ostream& records) {
  const ServingCostModel cm{cfg.cost_draft, cfg.cost_verify, cfg.cost_overhead};
  const auto tables = reward_table_compare(cfg.analysis_gammas, cfg.analysis_ks, cm);
  for (const RewardTable& t : tables) {
    for (const RewardRow& r : t.rows) {
      json j;
      j["gamma"] = t.gamma;
      j["k"] = r.k;
      j["measured"] = r.measured;
      j["cost_aware"] = r.cost_aware;
      records << j.dump() << "\n";
    }
    const std::string tag = "gamma=" + num(t.gamma);
    report.check("monotone " + tag, t.measured_monotone && t.cost_aware_monotone,
                 "both columns non-decreasing in k");
    report.check("same ordering " + tag, t.same_ordering, "argsort over k identical");
    if (t.gamma == 0.125) {
      double worst = 0.0;
      std::size_t compared = 0;
      for (const RewardRow& r : t.rows) {
        if (r.k >= 1 && r.k <= kReferenceCostAware.size()) {
          worst = std::max(worst, std::abs(r.cost_aware - kReferenceCostAware[r.k - 1]));
          ++compared;
        }
      }
      report.check("reference column " + tag, compared > 0 && worst <= 0.01,
                   std::to_string(compared) + " values, max deviation " + num(worst));
    }
    if (cfg.plot_ready) {
      auto cost = open_output(cfg, "reward_table_cost_aware_" + num(t.gamma) + ".dat");
      auto measured = open_output(cfg, "reward_table_measured_" + num(t.gamma) + ".dat");
      for (const RewardRow& r : t.rows) {
        cost << r.k << " " << r.cost_aware << "\n";
        measured << r.k << " " << r.measured << "\n";
      }
    }
  }
}

void suite_nabla(const RunConfig&, Report& report, std::ostream& records) {
  const std::array<std::pair<double, double>, 3> points = {
      {{0.0, 0.0}, {1.0, 0.71828}, {-1.0, 0.36788}}};
  for (const auto& [delta, expected] : points) {
    const double got = nabla_metric(delta, 0.0).nabla;
    json j;
    j["delta"] = delta;
    j["nabla"] = got;
    records << j.dump() << "\n";
    report.check("nabla(" + num(delta) + ")", std::abs(got - expected) <= 1e-5,
                 num(got) + " vs " + num(expected));
  }
  std::size_t negative = 0, bad_zero = 0, n = 0;
  for (int i = -2000; i <= 2000; ++i) {
    const double delta = i / 100.0;
    const double v = nabla_metric(delta, 0.0).nabla;
    if (v < 0.0) ++negative;
    if ((i == 0) != (v <= 1e-12)) ++bad_zero;
    ++n;
  }
  report.check("non-negative grid", negative == 0,
               std::to_string(n) + " points on [-20, 20], " + std::to_string(negative) +
                   " negative");
  report.check("zero only at delta=0", bad_zero == 0,
               std::to_string(bad_zero) + " grid points disagree");
}

void suite_easy_hard(const RunConfig& cfg, const std::string& init, Report& report,
                     std::ostream& records) {
  const Task task = build_task(cfg);
  const DrafterParameters params =
      init.empty() ? DrafterParameters::random(cfg.drafter_shape(), cfg.seed, cfg.init_scale)
                   : load_checkpoint(init, cfg.drafter_shape());
  check_vocab(task, params.shape());
  const NeuralDrafter drafter(params, params.shape().feature > 0 ? &task.target : nullptr);
  std::vector<TokenSeq> prefixes;
  for (std::size_t i = 0; i < cfg.analysis_windows; ++i) {
    prefixes.push_back(task.prompts[i % task.prompts.size()]);
  }
  const std::size_t K = cfg.eval_windows.front();
  const EasyHardPartition part =
      easy_hard_partition(drafter, task.target, prefixes, K,
                          RngStream(cfg.seed).child("analyze").child("easy-hard"));
  for (const auto& [name, set] : {std::pair{"easy", &part.easy}, std::pair{"hard", &part.hard}}) {
    double ksum = 0.0;
    bool membership_ok = true;
    for (std::size_t k : set->ks) {
      ksum += static_cast<double>(k);
      membership_ok = membership_ok && ((k == K) == (std::string(name) == "easy"));
    }
    const double mean = set->ks.empty() ? 0.0 : ksum / static_cast<double>(set->ks.size());
    json j;
    j["set"] = name;
    j["windows"] = set->members.size();
    j["tau"] = set->tau;
    j["nabla"] = set->nabla;
    records << j.dump() << "\n";
    report.check(std::string(name) + " tau", set->tau == mean,
                 std::to_string(set->members.size()) + " windows, tau " + num(set->tau) +
                     ", mean nabla " + num(set->nabla));
    report.check(std::string(name) + " membership", membership_ok,
                 std::string("easy iff k == ") + std::to_string(K));
  }
}

}  // namespace

bool cmd_analyze(const RunConfig& cfg, const std::string& suite, const std::string& init) {
  if (suite != "pinsker" && suite != "reward-table" && suite != "nabla" && suite != "easy-hard") {
    throw UsageError("unknown suite '" + suite +
                     "' (expected pinsker, reward-table, nabla or easy-hard)");
  }
  OutputLock lock(cfg.out_dir);
  Report report;
  auto records = open_output(cfg, suite + ".jsonl");
  if (suite == "pinsker") {
    suite_pinsker(cfg, report, records);
  } else if (suite == "reward-table") {
    suite_reward_table(cfg, report, records);
  } else if (suite == "nabla") {
    suite_nabla(cfg, report, records);
  } else {
    suite_easy_hard(cfg, init, report, records);
  }
  auto out = open_output(cfg, "report_" + suite + ".txt");
  for (const std::string& line : report.lines) out << line << "\n";
  out << (report.all_pass() ? "ALL PASS" : "FAILURES") << "\n";
  return report.all_pass();
}

}  // namespace ppow

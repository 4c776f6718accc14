// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>

namespace ppow {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    out.push_back(trim(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                      std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false");
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define PPOW_SIZE(name, field)                                                   \
  Key{name, [](RunConfig& c, std::string_view v) {                               \
        c.field = parse_number<std::size_t>(name, v);                            \
      },                                                                         \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define PPOW_U64(name, field)                                                    \
  Key{name, [](RunConfig& c, std::string_view v) {                               \
        c.field = parse_number<std::uint64_t>(name, v);                          \
      },                                                                         \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define PPOW_REAL(name, field)                                                   \
  Key{name, [](RunConfig& c, std::string_view v) {                               \
        c.field = parse_number<double>(name, v);                                 \
      },                                                                         \
      [](const RunConfig& c) { return fmt(c.field); }}
#define PPOW_BOOL(name, field)                                                   \
  Key{name, [](RunConfig& c, std::string_view v) { c.field = parse_bool(name, v); }, \
      [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}
#define PPOW_STR(name, field)                                                    \
  Key{name, [](RunConfig& c, std::string_view v) { c.field = std::string(v); },  \
      [](const RunConfig& c) { return c.field; }}
#define PPOW_SIZE_LIST(name, field)                                              \
  Key{name, [](RunConfig& c, std::string_view v) {                               \
        c.field.clear();                                                         \
        for (auto item : split_list(v)) c.field.push_back(parse_number<std::size_t>(name, item)); \
      },                                                                         \
      [](const RunConfig& c) { return fmt_list(c.field); }}
#define PPOW_REAL_LIST(name, field)                                              \
  Key{name, [](RunConfig& c, std::string_view v) {                               \
        c.field.clear();                                                         \
        for (auto item : split_list(v)) c.field.push_back(parse_number<double>(name, item)); \
      },                                                                         \
      [](const RunConfig& c) { return fmt_list(c.field); }}

std::string format_curriculum(const CurriculumSchedule& s) {
  std::string out;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    if (i) out += ",";
    out += fmt(s.steps[i].first) + ":" + fmt(s.steps[i].second);
  }
  return out;
}

CurriculumSchedule parse_curriculum(std::string_view v) {
  CurriculumSchedule s;
  s.steps.clear();
  for (auto item : split_list(v)) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("config key 'curriculum': expected progress:probability pairs");
    }
    s.steps.emplace_back(parse_number<double>("curriculum", trim(item.substr(0, colon))),
                         parse_number<double>("curriculum", trim(item.substr(colon + 1))));
  }
  return s;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      PPOW_U64("seed", seed),
      PPOW_STR("out_dir", out_dir),
      PPOW_BOOL("plot_ready", plot_ready),

      PPOW_U64("task_seed", task_seed),
      PPOW_STR("grammar_path", grammar_path),
      PPOW_SIZE("grammar_vocab", grammar_vocab),
      PPOW_SIZE("grammar_order", grammar_order),
      PPOW_REAL("grammar_peak_mass", grammar.peak_mass),
      PPOW_REAL("grammar_shared_peak_rate", grammar.shared_peak_rate),
      PPOW_REAL("grammar_tail_concentration", grammar.tail_concentration),
      PPOW_STR("corpus_path", corpus_path),
      PPOW_SIZE("corpus_sequences", corpus_sequences),
      PPOW_SIZE("corpus_length", corpus_length),
      PPOW_SIZE("target_order", target_order),
      PPOW_REAL("target_smoothing", target_smoothing),

      PPOW_SIZE("embed_dim", embed_dim),
      PPOW_SIZE("context_len", context_len),
      PPOW_SIZE("hidden_dim", hidden_dim),
      PPOW_BOOL("use_feature", use_feature),
      PPOW_REAL("init_scale", init_scale),

      PPOW_SIZE("sft_steps", sft_steps),
      PPOW_REAL("sft_lr", sft_lr),
      PPOW_REAL("sft_lr_final", sft_lr_final),

      PPOW_REAL("eps_clip", train.eps_clip),
      PPOW_REAL("kl_beta", train.kl_beta),
      PPOW_SIZE("group_size", train.group_size),
      PPOW_SIZE("window", train.window),
      PPOW_REAL("gamma", train.reward.gamma),
      PPOW_REAL("epsilon", train.reward.epsilon),
      PPOW_REAL("eta", train.reward.eta),
      PPOW_BOOL("force_delta", train.reward.force_delta),
      PPOW_REAL("lr", train.lr),
      PPOW_REAL("warmup_ratio", train.warmup_ratio),
      PPOW_REAL("adv_delta", train.adv_delta),
      PPOW_SIZE("total_steps", train.total_steps),
      PPOW_SIZE("inner_epochs", train.inner_epochs),
      PPOW_BOOL("adaw", train.adaw),
      Key{"curriculum",
          [](RunConfig& c, std::string_view v) { c.train.sampler.schedule = parse_curriculum(v); },
          [](const RunConfig& c) { return format_curriculum(c.train.sampler.schedule); }},
      Key{"curriculum_mode",
          [](RunConfig& c, std::string_view v) {
            if (v == "mix") {
              c.train.sampler.mode = CurriculumMode::kMix;
            } else if (v == "quantile") {
              c.train.sampler.mode = CurriculumMode::kQuantile;
            } else {
              throw ConfigError("config key 'curriculum_mode': expected mix or quantile");
            }
          },
          [](const RunConfig& c) {
            return std::string(c.train.sampler.mode == CurriculumMode::kMix ? "mix" : "quantile");
          }},
      PPOW_REAL("hard_quantile", train.sampler.hard_quantile),
      Key{"arm",
          [](RunConfig& c, std::string_view v) {
            if (v == "ppow") {
              c.arm = TrainArm::kPpow;
            } else if (v == "cst") {
              c.arm = TrainArm::kCst;
            } else {
              throw ConfigError("config key 'arm': expected ppow or cst");
            }
          },
          [](const RunConfig& c) { return std::string(c.arm == TrainArm::kPpow ? "ppow" : "cst"); }},
      PPOW_SIZE("log_every", log_every),
      PPOW_SIZE("eval_every", eval_every),
      PPOW_SIZE("checkpoint_every", checkpoint_every),

      PPOW_STR("eval_prompts_path", eval_prompts_path),
      PPOW_SIZE("eval_prompts", eval_prompts),
      PPOW_SIZE("eval_prompt_length", eval_prompt_length),
      PPOW_SIZE("eval_max_tokens", eval_max_tokens),
      PPOW_SIZE_LIST("eval_windows", eval_windows),
      PPOW_SIZE_LIST("eval_candidates", eval_candidates),
      PPOW_REAL_LIST("eval_temperatures", eval_temperatures),

      PPOW_SIZE("analysis_pairs", analysis_pairs),
      PPOW_SIZE_LIST("analysis_vocab_sizes", analysis_vocab_sizes),
      PPOW_SIZE("analysis_mc_trials", analysis_mc_trials),
      PPOW_REAL_LIST("analysis_gammas", analysis_gammas),
      PPOW_SIZE_LIST("analysis_ks", analysis_ks),
      PPOW_REAL("cost_draft", cost_draft),
      PPOW_REAL("cost_verify", cost_verify),
      PPOW_REAL("cost_overhead", cost_overhead),
      PPOW_SIZE("analysis_windows", analysis_windows),
  };
  return k;
}

#undef PPOW_SIZE
#undef PPOW_U64
#undef PPOW_REAL
#undef PPOW_BOOL
#undef PPOW_STR
#undef PPOW_SIZE_LIST
#undef PPOW_REAL_LIST

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

DrafterShape RunConfig::drafter_shape() const {
  const std::size_t vocab = grammar_vocab;
  return DrafterShape{vocab, embed_dim, use_feature ? (target_order - 1) * vocab : 0,
                      context_len, hidden_dim};
}

void RunConfig::validate() const {
  require(!out_dir.empty(), "out_dir must not be empty");
  require(grammar_vocab >= 2, "grammar_vocab must be >= 2");
  require(grammar_order >= 1, "grammar_order must be >= 1");
  require(grammar.peak_mass > 0.0 && grammar.peak_mass < 1.0, "grammar_peak_mass must be in (0, 1)");
  require(grammar.shared_peak_rate >= 0.0 && grammar.shared_peak_rate <= 1.0,
          "grammar_shared_peak_rate must be in [0, 1]");
  require(grammar.tail_concentration > 0.0, "grammar_tail_concentration must be > 0");
  require(corpus_sequences >= 1, "corpus_sequences must be >= 1");
  require(corpus_length >= 2, "corpus_length must be >= 2");
  require(target_order >= 1, "target_order must be >= 1");
  require(target_smoothing >= 0.0, "target_smoothing must be >= 0");
  require(init_scale > 0.0, "init_scale must be > 0");
  require(sft_lr >= 0.0, "sft_lr must be >= 0");
  require(sft_lr_final >= 0.0 && sft_lr_final <= 1.0, "sft_lr_final must be in [0, 1]");
  require(log_every >= 1, "log_every must be >= 1");
  require(eval_prompts >= 1, "eval_prompts must be >= 1");
  require(eval_prompt_length >= 1, "eval_prompt_length must be >= 1");
  require(eval_max_tokens >= 1, "eval_max_tokens must be >= 1");
  require(!eval_windows.empty() && !eval_candidates.empty() && !eval_temperatures.empty(),
          "eval sweep lists must not be empty");
  for (std::size_t k : eval_windows) require(k >= 1, "eval_windows entries must be >= 1");
  for (std::size_t g : eval_candidates) require(g >= 1, "eval_candidates entries must be >= 1");
  for (double t : eval_temperatures) require(t >= 0.0, "eval_temperatures entries must be >= 0");
  require(analysis_pairs >= 1 && analysis_mc_trials >= 1 && analysis_windows >= 1,
          "analysis sizes must be >= 1");
  require(!analysis_vocab_sizes.empty() && !analysis_gammas.empty() && !analysis_ks.empty(),
          "analysis lists must not be empty");
  for (std::size_t v : analysis_vocab_sizes) require(v >= 2, "analysis_vocab_sizes entries must be >= 2");
  require(cost_draft >= 0.0 && cost_verify > 0.0 && cost_overhead >= 0.0,
          "cost model entries must be non-negative with cost_verify > 0");
  try {
    drafter_shape().validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ConfigEcho RunConfig::echo() const {
  ConfigEcho out;
  for (const Key& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    const auto it = std::find_if(keys().begin(), keys().end(),
                                 [&](const Key& k) { return k.name == key; });
    if (it == keys().end()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" +
                        std::string(key) + "'");
    }
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                        std::string(key) + "'");
    }
    it->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& [k, v] : cfg.echo()) out << k << " = " << v << "\n";
}

}  // namespace ppow

// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/corpus.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace ppow {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::bytes() {
  Vocabulary v;
  v.byte_level_ = true;
  v.max_symbol_len_ = 1;
  for (int b = 0; b < 256; ++b) {
    v.symbols_.emplace_back(1, static_cast<char>(b));
    v.index_.emplace(v.symbols_.back(), static_cast<TokenId>(b));
  }
  return v;
}

Vocabulary Vocabulary::from_symbols(std::vector<std::string> symbols) {
  if (symbols.size() < 2) throw VocabularyError("vocabulary needs >= 2 symbols");
  Vocabulary v;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i].empty()) throw VocabularyError("empty symbol");
    if (!v.index_.emplace(symbols[i], static_cast<TokenId>(i)).second) {
      throw VocabularyError("duplicate symbol: " + symbols[i]);
    }
    v.max_symbol_len_ = std::max(v.max_symbol_len_, symbols[i].size());
  }
  v.symbols_ = std::move(symbols);
  return v;
}

Vocabulary Vocabulary::numbered(std::size_t n) {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(std::to_string(i));
  return from_symbols(std::move(s));
}

std::optional<TokenId> Vocabulary::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq out;
  if (vocab.byte_level()) {
    out.reserve(text.size());
    for (unsigned char c : text) out.push_back(c);
    return out;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = std::min(vocab.max_symbol_len_, text.size() - i);
    bool matched = false;
    for (; len > 0; --len) {
      if (auto id = vocab.find(text.substr(i, len))) {
        out.push_back(*id);
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw VocabularyError("symbol not in vocabulary at byte offset " +
                            std::to_string(i));
    }
  }
  return out;
}

std::string detokenize(const TokenSeq& tokens, const Vocabulary& vocab) {
  std::string out;
  for (TokenId t : tokens) out += vocab.symbol(t);
  return out;
}

// ---------------------------------------------------------------------------
// GrammarSpec

const ProbVector& GrammarSpec::row(const TokenSeq& context) const {
  auto it = rows.find(context);
  if (it == rows.end()) throw std::out_of_range("grammar: context has no row");
  return it->second;
}

void GrammarSpec::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("grammar: vocab_size < 2");
  if (order < 1) throw std::invalid_argument("grammar: order < 1");
  for (const auto& [ctx, p] : rows) {
    if (ctx.size() != order - 1) {
      throw std::invalid_argument("grammar: context length != order - 1");
    }
    if (p.size() != vocab_size) {
      throw std::invalid_argument("grammar: row width != vocab_size");
    }
    for (TokenId t : ctx) {
      if (t >= vocab_size) throw std::invalid_argument("grammar: bad token id");
    }
  }
  if (start.empty()) throw std::invalid_argument("grammar: empty start");
  double total = 0.0;
  for (const auto& [ctx, w] : start) {
    if (ctx.size() != order - 1 || !(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("grammar: malformed start entry");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw std::invalid_argument("grammar: start weights do not sum to 1");
  }

  // Breadth-first walk over contexts reachable from the start distribution.
  std::set<TokenSeq> seen;
  std::deque<TokenSeq> frontier;
  for (const auto& [ctx, w] : start) {
    if (w > 0.0 && seen.insert(ctx).second) frontier.push_back(ctx);
  }
  while (!frontier.empty()) {
    TokenSeq ctx = std::move(frontier.front());
    frontier.pop_front();
    auto it = rows.find(ctx);
    if (it == rows.end()) {
      throw std::invalid_argument("grammar: reachable context has no row");
    }
    if (order == 1) continue;
    for (TokenId y = 0; y < vocab_size; ++y) {
      if (it->second[y] <= 0.0) continue;
      TokenSeq next(ctx.begin() + 1, ctx.end());
      next.push_back(y);
      if (seen.insert(next).second) frontier.push_back(std::move(next));
    }
  }
}

namespace {

TokenSeq parse_ids(const std::string& text) {
  std::istringstream ss(text);
  TokenSeq ids;
  long long v;
  while (ss >> v) {
    if (v < 0) throw std::invalid_argument("negative token id");
    ids.push_back(static_cast<TokenId>(v));
  }
  if (!ss.eof()) throw std::invalid_argument("malformed token list: " + text);
  return ids;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

// Format:
//   vocab <V>
//   order <n>
//   start <context tokens> = <weight>
//   <context tokens> -> p_0 ... p_{V-1}
GrammarSpec parse_grammar(std::istream& in) {
  GrammarSpec spec;
  bool have_vocab = false, have_order = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.rfind("vocab", 0) == 0 && line.find("->") == std::string::npos) {
        spec.vocab_size = std::stoul(line.substr(5));
        have_vocab = true;
      } else if (line.rfind("order", 0) == 0) {
        spec.order = std::stoul(line.substr(5));
        have_order = true;
      } else if (line.rfind("start", 0) == 0) {
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("missing '='");
        spec.start.emplace_back(parse_ids(line.substr(5, eq - 5)),
                                std::stod(line.substr(eq + 1)));
      } else {
        auto arrow = line.find("->");
        if (arrow == std::string::npos) throw std::invalid_argument("missing '->'");
        TokenSeq ctx = parse_ids(line.substr(0, arrow));
        std::istringstream ss(line.substr(arrow + 2));
        std::vector<double> p;
        double v;
        while (ss >> v) p.push_back(v);
        if (!ss.eof()) throw std::invalid_argument("malformed probability");
        if (!spec.rows.emplace(std::move(ctx), ProbVector(std::move(p))).second) {
          throw std::invalid_argument("duplicate context row");
        }
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("grammar line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
  }
  if (!have_vocab || !have_order) {
    throw std::invalid_argument("grammar: missing vocab or order header");
  }
  spec.validate();
  return spec;
}

namespace {

void write_ids(std::ostream& out, const TokenSeq& ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
}

}  // namespace

void write_grammar(std::ostream& out, const GrammarSpec& spec) {
  out << "vocab " << spec.vocab_size << "\n";
  out << "order " << spec.order << "\n";
  out << std::setprecision(17);
  for (const auto& [ctx, w] : spec.start) {
    out << "start ";
    write_ids(out, ctx);
    out << (ctx.empty() ? "" : " ") << "= " << w << "\n";
  }
  for (const auto& [ctx, p] : spec.rows) {
    write_ids(out, ctx);
    out << (ctx.empty() ? "->" : " ->");
    for (double v : p) out << " " << v;
    out << "\n";
  }
}

GrammarSpec read_grammar_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grammar file: " + path);
  return parse_grammar(in);
}

void write_grammar_file(const std::string& path, const GrammarSpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write grammar file: " + path);
  write_grammar(out, spec);
}

std::vector<TokenSeq> sample_grammar_corpus(const GrammarSpec& spec,
                                            std::size_t num_sequences,
                                            std::size_t length,
                                            std::uint64_t seed) {
  if (length < spec.order) {
    throw std::invalid_argument("sample_grammar_corpus: length < order");
  }
  std::vector<double> start_weights;
  for (const auto& s : spec.start) start_weights.push_back(s.second);

  RngStream root(seed);
  std::vector<TokenSeq> corpus;
  corpus.reserve(num_sequences);
  TokenSeq ctx;
  for (std::size_t i = 0; i < num_sequences; ++i) {
    RngStream rng = root.child(i);
    TokenSeq seq = spec.start[sample_categorical(start_weights, rng)].first;
    seq.reserve(length);
    while (seq.size() < length) {
      ctx.assign(seq.end() - static_cast<std::ptrdiff_t>(spec.order - 1),
                 seq.end());
      seq.push_back(sample(spec.row(ctx), rng));
    }
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

std::vector<TokenSeq> parse_corpus(std::istream& in) {
  std::vector<TokenSeq> corpus;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    corpus.push_back(parse_ids(line));
  }
  return corpus;
}

void write_corpus(std::ostream& out, const std::vector<TokenSeq>& corpus) {
  for (const auto& seq : corpus) {
    write_ids(out, seq);
    out << "\n";
  }
}

std::vector<TokenSeq> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return parse_corpus(in);
}

GrammarSpec unigram_grammar(const ProbVector& probs) {
  GrammarSpec spec;
  spec.vocab_size = probs.size();
  spec.order = 1;
  spec.rows.emplace(TokenSeq{}, probs);
  spec.start.emplace_back(TokenSeq{}, 1.0);
  spec.validate();
  return spec;
}

GrammarSpec random_grammar(std::size_t vocab_size, std::size_t order,
                           const RandomGrammarOptions& options,
                           std::uint64_t seed) {
  if (vocab_size < 2 || order < 1) {
    throw std::invalid_argument("random_grammar: bad shape");
  }
  RngStream rng(seed);
  std::uniform_int_distribution<TokenId> pick(0, static_cast<TokenId>(vocab_size - 1));
  std::gamma_distribution<double> gamma(options.tail_concentration, 1.0);

  std::vector<TokenId> shared_peak(vocab_size);
  for (auto& t : shared_peak) t = pick(rng);

  GrammarSpec spec;
  spec.vocab_size = vocab_size;
  spec.order = order;

  std::size_t num_contexts = 1;
  for (std::size_t i = 0; i + 1 < order; ++i) num_contexts *= vocab_size;
  const double start_w = 1.0 / static_cast<double>(num_contexts);

  TokenSeq ctx(order - 1, 0);
  for (std::size_t c = 0; c < num_contexts; ++c) {
    std::size_t rem = c;
    for (std::size_t i = ctx.size(); i-- > 0;) {
      ctx[i] = static_cast<TokenId>(rem % vocab_size);
      rem /= vocab_size;
    }
    TokenId peak = pick(rng);
    if (!ctx.empty() && rng.uniform() <= options.shared_peak_rate) {
      peak = shared_peak[ctx.back()];
    }
    std::vector<double> tail(vocab_size);
    double tail_sum = 0.0;
    for (std::size_t y = 0; y < vocab_size; ++y) {
      tail[y] = (y == peak) ? 0.0 : gamma(rng);
      tail_sum += tail[y];
    }
    std::vector<double> p(vocab_size);
    for (std::size_t y = 0; y < vocab_size; ++y) {
      p[y] = (y == peak) ? options.peak_mass
                         : (1.0 - options.peak_mass) * tail[y] / tail_sum;
    }
    spec.rows.emplace(ctx, ProbVector::normalized(std::move(p)));
    spec.start.emplace_back(ctx, start_w);
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Prefix decomposition

PrefixStream::PrefixStream(const std::vector<TokenSeq>& corpus,
                           std::size_t min_prefix, std::size_t window)
    : corpus_(corpus), min_prefix_(min_prefix), window_(window), pos_(min_prefix) {
  advance_to_valid();
}

void PrefixStream::advance_to_valid() {
  while (seq_ < corpus_.size()) {
    const std::size_t len = corpus_[seq_].size();
    if (len < min_prefix_ + window_) {
      ++skipped_;
      ++seq_;
      pos_ = min_prefix_;
      continue;
    }
    if (pos_ + window_ <= len) return;
    ++seq_;
    pos_ = min_prefix_;
  }
}

std::optional<PrefixPair> PrefixStream::next() {
  if (seq_ >= corpus_.size()) return std::nullopt;
  const TokenSeq& seq = corpus_[seq_];
  PrefixPair pair;
  pair.sequence = seq_;
  pair.start = pos_;
  pair.prefix.assign(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(pos_));
  pair.continuation.assign(seq.begin() + static_cast<std::ptrdiff_t>(pos_),
                           seq.begin() + static_cast<std::ptrdiff_t>(pos_ + window_));
  ++pos_;
  advance_to_valid();
  return pair;
}

std::vector<PrefixPair> iter_training_prefixes(
    const std::vector<TokenSeq>& corpus, std::size_t min_prefix,
    std::size_t window) {
  PrefixStream stream(corpus, min_prefix, window);
  std::vector<PrefixPair> out;
  while (auto p = stream.next()) out.push_back(std::move(*p));
  if (stream.skipped() > 0) {
    LOG(INFO) << "iter_training_prefixes: skipped " << stream.skipped()
              << " sequences shorter than " << min_prefix + window;
  }
  return out;
}

}  // namespace ppow

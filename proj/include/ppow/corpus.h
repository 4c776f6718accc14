// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ppow/prob.h"
#include "ppow/types.h"

namespace ppow {

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense id <-> symbol mapping. The byte-level vocabulary maps every byte to
// its own id and can tokenize any input.
class Vocabulary {
 public:
  static Vocabulary bytes();
  static Vocabulary from_symbols(std::vector<std::string> symbols);
  // Symbols "0", "1", ..., used by synthetic grammars.
  static Vocabulary numbered(std::size_t n);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(TokenId id) const { return symbols_.at(id); }
  bool byte_level() const { return byte_level_; }
  std::optional<TokenId> find(std::string_view symbol) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_symbol_len_ = 0;
  bool byte_level_ = false;

  friend TokenSeq tokenize(std::string_view, const Vocabulary&);
};

// Non-byte vocabularies tokenize by longest symbol match.
TokenSeq tokenize(std::string_view text, const Vocabulary& vocab);
std::string detokenize(const TokenSeq& tokens, const Vocabulary& vocab);

// n-gram generative process: rows are keyed by the previous (order - 1)
// tokens, and sequences start from a context drawn from `start`.
struct GrammarSpec {
  std::size_t vocab_size = 0;
  std::size_t order = 1;
  std::map<TokenSeq, ProbVector> rows;
  std::vector<std::pair<TokenSeq, double>> start;

  // Throws std::invalid_argument on malformed rows, bad start weights, or a
  // context reachable from `start` that lacks a row.
  void validate() const;
  const ProbVector& row(const TokenSeq& context) const;
};

GrammarSpec parse_grammar(std::istream& in);
void write_grammar(std::ostream& out, const GrammarSpec& spec);
GrammarSpec read_grammar_file(const std::string& path);
void write_grammar_file(const std::string& path, const GrammarSpec& spec);

// i.i.d. sequences of exactly `length` tokens. Requires length >= order.
std::vector<TokenSeq> sample_grammar_corpus(const GrammarSpec& spec,
                                            std::size_t num_sequences,
                                            std::size_t length,
                                            std::uint64_t seed);

std::vector<TokenSeq> parse_corpus(std::istream& in);
void write_corpus(std::ostream& out, const std::vector<TokenSeq>& corpus);
std::vector<TokenSeq> read_corpus_file(const std::string& path);

// Order-1 grammar emitting i.i.d. draws from `probs`.
GrammarSpec unigram_grammar(const ProbVector& probs);

struct RandomGrammarOptions {
  // Probability mass placed on each row's peak token.
  double peak_mass = 0.8;
  // Fraction of rows whose peak is decided by the most recent token alone;
  // the remaining rows pick a peak from the full context.
  double shared_peak_rate = 0.7;
  // Dirichlet concentration for the off-peak mass.
  double tail_concentration = 1.0;
};

// Random order-n grammar over `vocab_size` symbols with a uniform start over
// all (order - 1)-token contexts.
GrammarSpec random_grammar(std::size_t vocab_size, std::size_t order,
                           const RandomGrammarOptions& options,
                           std::uint64_t seed);

struct PrefixPair {
  TokenSeq prefix;
  TokenSeq continuation;
  std::size_t sequence = 0;
  std::size_t start = 0;
};

// Stride-1 decomposition of a corpus into (prefix, continuation) pairs: one
// pair for every start j with j >= min_prefix and j + K <= length. Sequences
// shorter than min_prefix + K are skipped and counted.
class PrefixStream {
 public:
  PrefixStream(const std::vector<TokenSeq>& corpus, std::size_t min_prefix,
               std::size_t window);

  std::optional<PrefixPair> next();
  std::size_t skipped() const { return skipped_; }

 private:
  void advance_to_valid();

  const std::vector<TokenSeq>& corpus_;
  std::size_t min_prefix_;
  std::size_t window_;
  std::size_t seq_ = 0;
  std::size_t pos_ = 0;
  std::size_t skipped_ = 0;
};

std::vector<PrefixPair> iter_training_prefixes(
    const std::vector<TokenSeq>& corpus, std::size_t min_prefix,
    std::size_t window);

}  // namespace ppow

// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ppow/prob.h"
#include "ppow/types.h"

namespace ppow {

using FeatureVector = std::vector<double>;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Frozen target model: next-token distributions plus a fixed-width feature
// vector describing the context. Implementations must be deterministic.
class TargetAdapter {
 public:
  virtual ~TargetAdapter() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual ProbVector next_dist(std::span<const TokenId> context) const = 0;
  virtual FeatureVector feature(std::span<const TokenId> context) const = 0;
  // Number of trailing context tokens that can influence the outputs, or 0
  // when the whole context matters.
  virtual std::size_t context_horizon() const { return 0; }
};

// Smoothed n-gram counts with backoff:
//   P(y | ctx) = (count(ctx, y) + smoothing) / (count(ctx) + smoothing * |V|)
// A context never seen in training backs off to its (order - 2)-token
// suffix, ending at the unigram table. The feature of a context is the
// concatenated one-hot encoding of its last (order - 1) tokens, with missing
// leading slots left at zero.
class TabularTarget final : public TargetAdapter {
 public:
  static TabularTarget fit(const std::vector<TokenSeq>& corpus,
                           std::size_t vocab_size, std::size_t order,
                           double smoothing);

  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t feature_dim() const override { return (order_ - 1) * vocab_size_; }
  std::size_t order() const { return order_; }
  double smoothing() const { return smoothing_; }
  std::size_t context_horizon() const override { return std::max<std::size_t>(order_ - 1, 1); }

  ProbVector next_dist(std::span<const TokenId> context) const override;
  FeatureVector feature(std::span<const TokenId> context) const override;

  // The row used for `context`, without copying.
  const ProbVector& row(std::span<const TokenId> context) const;

 private:
  TabularTarget(std::size_t vocab_size, std::size_t order, double smoothing)
      : vocab_size_(vocab_size), order_(order), smoothing_(smoothing) {}

  std::uint64_t key(std::span<const TokenId> tokens) const;

  std::size_t vocab_size_;
  std::size_t order_;
  double smoothing_;
  // tables_[L] holds rows for contexts of exactly L tokens.
  std::vector<std::unordered_map<std::uint64_t, ProbVector>> tables_;
};

inline FeatureVector target_feature(const TargetAdapter& adapter,
                                    std::span<const TokenId> context) {
  return adapter.feature(context);
}

// Layer sizes of the neural drafter: |V|, embedding width d, feature width F
// (0 disables the feature channel), context length c and hidden width h.
struct DrafterShape {
  std::size_t vocab = 0;
  std::size_t embed = 0;
  std::size_t feature = 0;
  std::size_t context = 1;
  std::size_t hidden = 0;

  std::size_t input_dim() const { return context * embed + (feature > 0 ? embed : 0); }
  std::size_t num_params() const;
  void validate() const;

  friend bool operator==(const DrafterShape&, const DrafterShape&) = default;
};

// Parameter blocks, in storage and checkpoint order.
enum class Block { kEmbedding, kFeatureProj, kW1, kB1, kW2, kB2 };
inline constexpr std::array<Block, 6> kAllBlocks = {
    Block::kEmbedding, Block::kFeatureProj, Block::kW1,
    Block::kB1,        Block::kW2,          Block::kB2};

std::string_view block_name(Block b);
// Row-major dimensions of a block: embedding [V, d], feature_proj [F, d],
// w1 [h, in], b1 [h], w2 [V, h], b2 [V].
std::vector<std::size_t> block_dims(const DrafterShape& shape, Block b);

// Flat parameter storage with named block views. Every mutable access bumps
// `revision()`; copies receive a fresh `identity()`. Together they let a
// backward pass detect a forward cache computed against other values.
class DrafterParameters {
 public:
  explicit DrafterParameters(const DrafterShape& shape);
  DrafterParameters(const DrafterParameters& other);
  DrafterParameters& operator=(const DrafterParameters& other);
  DrafterParameters(DrafterParameters&&) noexcept = default;
  DrafterParameters& operator=(DrafterParameters&&) noexcept = default;

  // Entries uniform in [-scale, scale].
  static DrafterParameters random(const DrafterShape& shape, std::uint64_t seed,
                                  double scale = 0.05);

  const DrafterShape& shape() const { return shape_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values();
  std::span<const double> block(Block b) const;
  std::span<double> mutable_block(Block b);

  // this += scale * direction
  void add_scaled(const DrafterParameters& direction, double scale);
  void set_zero();

  std::uint64_t identity() const { return identity_; }
  std::uint64_t revision() const { return revision_; }

  bool bitwise_equal(const DrafterParameters& other) const;

 private:
  std::size_t offset(Block b) const;

  DrafterShape shape_;
  std::vector<double> values_;
  std::uint64_t identity_;
  std::uint64_t revision_ = 0;
};

// Forward activations retained for the backward pass.
struct DrafterOutput {
  ProbVector dist;
  std::vector<double> logits;
  std::vector<TokenId> inputs;  // the c context ids used, left-padded with 0
  FeatureVector feature;
  std::vector<double> x;       // embeddings (and projected feature) concatenated
  std::vector<double> hidden;  // tanh activations
  std::uint64_t params_identity = 0;
  std::uint64_t params_revision = 0;
};

// softmax(W2 tanh(W1 [E(t_{-c}) .. E(t_{-1}), Pf^T f] + b1) + b2).
// `feature` must be present iff the shape declares F > 0.
DrafterOutput drafter_forward(const DrafterParameters& params,
                              std::span<const TokenId> context,
                              const FeatureVector* feature);

// grad += d(upstream . logits) / d(params). Throws ModelError if `output`
// was not produced by the current values of `params`.
void accumulate_backward(const DrafterParameters& params,
                         const DrafterOutput& output,
                         std::span<const double> upstream,
                         DrafterParameters& grad);

DrafterParameters drafter_backward(const DrafterParameters& params,
                                   const DrafterOutput& output,
                                   std::span<const double> upstream);

// One gradient-descent step on -log pi(next_token | prefix). Returns the loss
// before the update.
double sft_step(DrafterParameters& params, const TargetAdapter* feature_source,
                std::span<const TokenId> prefix, TokenId next_token, double lr);

// Anything that proposes next-token distributions for drafting.
class DraftPolicy {
 public:
  virtual ~DraftPolicy() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual ProbVector next_dist(std::span<const TokenId> context) const = 0;
  // Proposal inside a speculative window. Only context[0, verified) has been
  // seen by the target; the remainder was drafted in the current window.
  virtual ProbVector window_dist(std::span<const TokenId> context,
                                 std::size_t verified) const {
    (void)verified;
    return next_dist(context);
  }
  // See TargetAdapter::context_horizon.
  virtual std::size_t context_horizon() const { return 0; }
};

// The neural drafter bound to a feature source. `feature_source` may be null
// when the parameters declare no feature channel. Target features exist only
// for verified tokens, so inside a window the feature stays that of the
// verified prefix while the token inputs follow the drafted tokens.
class NeuralDrafter final : public DraftPolicy {
 public:
  NeuralDrafter(const DrafterParameters& params,
                const TargetAdapter* feature_source);

  std::size_t vocab_size() const override { return params_.shape().vocab; }
  ProbVector next_dist(std::span<const TokenId> context) const override;
  ProbVector window_dist(std::span<const TokenId> context,
                         std::size_t verified) const override;
  DrafterOutput forward(std::span<const TokenId> context) const;
  DrafterOutput forward(std::span<const TokenId> context, std::size_t verified) const;
  const DrafterParameters& params() const { return params_; }
  std::size_t context_horizon() const override;

 private:
  const DrafterParameters& params_;
  const TargetAdapter* feature_source_;
};

// Drafts from the target's own distribution: the perfect drafter.
class TargetDrafter final : public DraftPolicy {
 public:
  explicit TargetDrafter(const TargetAdapter& target) : target_(target) {}
  std::size_t vocab_size() const override { return target_.vocab_size(); }
  ProbVector next_dist(std::span<const TokenId> context) const override {
    return target_.next_dist(context);
  }
  std::size_t context_horizon() const override { return target_.context_horizon(); }

 private:
  const TargetAdapter& target_;
};

}  // namespace ppow

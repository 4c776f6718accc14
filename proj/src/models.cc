// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/models.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <cstring>
#include <string>

namespace ppow {

// ---------------------------------------------------------------------------
// TabularTarget

std::uint64_t TabularTarget::key(std::span<const TokenId> tokens) const {
  std::uint64_t k = 0;
  for (TokenId t : tokens) k = k * vocab_size_ + t;
  return k;
}

TabularTarget TabularTarget::fit(const std::vector<TokenSeq>& corpus,
                                 std::size_t vocab_size, std::size_t order,
                                 double smoothing) {
  if (vocab_size < 2) throw ModelError("fit_tabular_target: vocab_size < 2");
  if (order < 1) throw ModelError("fit_tabular_target: order < 1");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw ModelError("fit_tabular_target: smoothing must be finite and >= 0");
  }
  if (std::pow(static_cast<double>(vocab_size), static_cast<double>(order - 1)) >
      static_cast<double>(std::numeric_limits<std::uint64_t>::max())) {
    throw ModelError("fit_tabular_target: context space exceeds 64-bit keys");
  }

  TabularTarget target(vocab_size, order, smoothing);
  std::vector<std::unordered_map<std::uint64_t, std::vector<double>>> counts(order);
  std::size_t total_tokens = 0;
  for (const auto& seq : corpus) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] >= vocab_size) throw ModelError("fit_tabular_target: token id out of range");
      ++total_tokens;
      const std::size_t max_len = std::min(i, order - 1);
      for (std::size_t len = 0; len <= max_len; ++len) {
        std::span<const TokenId> ctx(seq.data() + i - len, len);
        auto& row = counts[len][target.key(ctx)];
        if (row.empty()) row.assign(vocab_size, 0.0);
        row[seq[i]] += 1.0;
      }
    }
  }
  if (total_tokens == 0) throw ModelError("fit_tabular_target: empty corpus");

  target.tables_.resize(order);
  const double denom_extra = smoothing * static_cast<double>(vocab_size);
  for (std::size_t len = 0; len < order; ++len) {
    for (auto& [k, row] : counts[len]) {
      double n = 0.0;
      for (double c : row) n += c;
      std::vector<double> p(vocab_size);
      for (std::size_t y = 0; y < vocab_size; ++y) {
        p[y] = (row[y] + smoothing) / (n + denom_extra);
      }
      target.tables_[len].emplace(k, ProbVector::normalized(std::move(p)));
    }
  }
  return target;
}

const ProbVector& TabularTarget::row(std::span<const TokenId> context) const {
  std::size_t len = std::min(context.size(), order_ - 1);
  for (;; --len) {
    auto ctx = context.subspan(context.size() - len, len);
    auto it = tables_[len].find(key(ctx));
    if (it != tables_[len].end()) return it->second;
    if (len == 0) break;
  }
  throw ModelError("TabularTarget: no unigram row");
}

ProbVector TabularTarget::next_dist(std::span<const TokenId> context) const {
  return row(context);
}

FeatureVector TabularTarget::feature(std::span<const TokenId> context) const {
  const std::size_t slots = order_ - 1;
  FeatureVector f(slots * vocab_size_, 0.0);
  for (std::size_t s = 0; s < slots; ++s) {
    // Slot s holds the token at distance (slots - s) from the end.
    const std::size_t back = slots - s;
    if (back > context.size()) continue;
    f[s * vocab_size_ + context[context.size() - back]] = 1.0;
  }
  return f;
}

// ---------------------------------------------------------------------------
// DrafterShape / DrafterParameters

std::size_t DrafterShape::num_params() const {
  return vocab * embed + feature * embed + hidden * input_dim() + hidden +
         vocab * hidden + vocab;
}

void DrafterShape::validate() const {
  if (vocab < 2 || embed == 0 || context == 0 || hidden == 0) {
    throw ModelError("DrafterShape: vocab >= 2 and embed, context, hidden > 0 required");
  }
}

std::string_view block_name(Block b) {
  switch (b) {
    case Block::kEmbedding: return "embedding";
    case Block::kFeatureProj: return "feature_proj";
    case Block::kW1: return "w1";
    case Block::kB1: return "b1";
    case Block::kW2: return "w2";
    case Block::kB2: return "b2";
  }
  return "?";
}

std::vector<std::size_t> block_dims(const DrafterShape& s, Block b) {
  switch (b) {
    case Block::kEmbedding: return {s.vocab, s.embed};
    case Block::kFeatureProj: return {s.feature, s.embed};
    case Block::kW1: return {s.hidden, s.input_dim()};
    case Block::kB1: return {s.hidden};
    case Block::kW2: return {s.vocab, s.hidden};
    case Block::kB2: return {s.vocab};
  }
  return {};
}

namespace {

std::size_t block_size(const DrafterShape& s, Block b) {
  std::size_t n = 1;
  for (std::size_t d : block_dims(s, b)) n *= d;
  return n;
}

std::uint64_t next_identity() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

DrafterParameters::DrafterParameters(const DrafterShape& shape)
    : shape_(shape), values_(shape.num_params(), 0.0), identity_(next_identity()) {
  shape_.validate();
}

DrafterParameters::DrafterParameters(const DrafterParameters& other)
    : shape_(other.shape_), values_(other.values_), identity_(next_identity()) {}

DrafterParameters& DrafterParameters::operator=(const DrafterParameters& other) {
  if (this != &other) {
    shape_ = other.shape_;
    values_ = other.values_;
    ++revision_;
  }
  return *this;
}

DrafterParameters DrafterParameters::random(const DrafterShape& shape,
                                            std::uint64_t seed, double scale) {
  DrafterParameters p(shape);
  RngStream rng = RngStream(seed).child("init");
  for (double& v : p.values_) v = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

std::span<double> DrafterParameters::mutable_values() {
  ++revision_;
  return values_;
}

std::size_t DrafterParameters::offset(Block b) const {
  std::size_t off = 0;
  for (Block other : kAllBlocks) {
    if (other == b) return off;
    off += block_size(shape_, other);
  }
  return off;
}

std::span<const double> DrafterParameters::block(Block b) const {
  return std::span<const double>(values_).subspan(offset(b), block_size(shape_, b));
}

std::span<double> DrafterParameters::mutable_block(Block b) {
  ++revision_;
  return std::span<double>(values_).subspan(offset(b), block_size(shape_, b));
}

void DrafterParameters::add_scaled(const DrafterParameters& direction, double scale) {
  if (!(direction.shape_ == shape_)) throw ModelError("add_scaled: shape mismatch");
  ++revision_;
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * direction.values_[i];
}

void DrafterParameters::set_zero() {
  ++revision_;
  std::fill(values_.begin(), values_.end(), 0.0);
}

bool DrafterParameters::bitwise_equal(const DrafterParameters& other) const {
  if (!(shape_ == other.shape_)) return false;
  return std::equal(values_.begin(), values_.end(), other.values_.begin(),
                    [](double a, double b) {
                      return std::memcmp(&a, &b, sizeof(double)) == 0;
                    });
}

// ---------------------------------------------------------------------------
// Forward / backward

DrafterOutput drafter_forward(const DrafterParameters& params,
                              std::span<const TokenId> context,
                              const FeatureVector* feature) {
  const DrafterShape& s = params.shape();
  if (context.empty()) throw ModelError("drafter_forward: empty context");
  if ((s.feature > 0) != (feature != nullptr)) {
    throw ModelError("drafter_forward: feature presence does not match shape");
  }
  if (feature != nullptr && feature->size() != s.feature) {
    throw ModelError("drafter_forward: feature dimension " +
                     std::to_string(feature->size()) + " != " +
                     std::to_string(s.feature));
  }

  DrafterOutput out;
  out.params_identity = params.identity();
  out.params_revision = params.revision();

  out.inputs.assign(s.context, 0);
  for (std::size_t i = 0; i < s.context && i < context.size(); ++i) {
    out.inputs[s.context - 1 - i] = context[context.size() - 1 - i];
  }
  for (TokenId t : out.inputs) {
    if (t >= s.vocab) throw ModelError("drafter_forward: token id out of range");
  }

  const auto emb = params.block(Block::kEmbedding);
  out.x.assign(s.input_dim(), 0.0);
  for (std::size_t i = 0; i < s.context; ++i) {
    std::copy_n(emb.begin() + static_cast<std::ptrdiff_t>(out.inputs[i] * s.embed),
                s.embed, out.x.begin() + static_cast<std::ptrdiff_t>(i * s.embed));
  }
  if (feature != nullptr) {
    out.feature = *feature;
    const auto proj = params.block(Block::kFeatureProj);
    double* dst = out.x.data() + s.context * s.embed;
    for (std::size_t f = 0; f < s.feature; ++f) {
      const double fv = out.feature[f];
      if (fv == 0.0) continue;
      for (std::size_t j = 0; j < s.embed; ++j) dst[j] += fv * proj[f * s.embed + j];
    }
  }

  const auto w1 = params.block(Block::kW1);
  const auto b1 = params.block(Block::kB1);
  const std::size_t in = s.input_dim();
  out.hidden.resize(s.hidden);
  for (std::size_t r = 0; r < s.hidden; ++r) {
    double z = b1[r];
    const double* row = w1.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) z += row[c] * out.x[c];
    out.hidden[r] = std::tanh(z);
  }

  const auto w2 = params.block(Block::kW2);
  const auto b2 = params.block(Block::kB2);
  out.logits.resize(s.vocab);
  for (std::size_t v = 0; v < s.vocab; ++v) {
    double z = b2[v];
    const double* row = w2.data() + v * s.hidden;
    for (std::size_t c = 0; c < s.hidden; ++c) z += row[c] * out.hidden[c];
    out.logits[v] = z;
  }
  out.dist = ProbVector::softmax(out.logits);
  return out;
}

void accumulate_backward(const DrafterParameters& params,
                         const DrafterOutput& output,
                         std::span<const double> upstream,
                         DrafterParameters& grad) {
  const DrafterShape& s = params.shape();
  if (output.params_identity != params.identity() ||
      output.params_revision != params.revision()) {
    throw ModelError("drafter_backward: stale forward cache");
  }
  if (!(grad.shape() == s)) throw ModelError("drafter_backward: gradient shape mismatch");
  if (upstream.size() != s.vocab) throw ModelError("drafter_backward: upstream size != |V|");

  const std::size_t in = s.input_dim();
  const auto w1 = params.block(Block::kW1);
  const auto w2 = params.block(Block::kW2);

  auto gw2 = grad.mutable_block(Block::kW2);
  auto gb2 = grad.mutable_block(Block::kB2);
  std::vector<double> dhidden(s.hidden, 0.0);
  for (std::size_t v = 0; v < s.vocab; ++v) {
    const double g = upstream[v];
    if (g == 0.0) continue;
    gb2[v] += g;
    double* grow = gw2.data() + v * s.hidden;
    const double* wrow = w2.data() + v * s.hidden;
    for (std::size_t c = 0; c < s.hidden; ++c) {
      grow[c] += g * output.hidden[c];
      dhidden[c] += g * wrow[c];
    }
  }

  auto gw1 = grad.mutable_block(Block::kW1);
  auto gb1 = grad.mutable_block(Block::kB1);
  std::vector<double> dx(in, 0.0);
  for (std::size_t r = 0; r < s.hidden; ++r) {
    const double a = output.hidden[r];
    const double dz = dhidden[r] * (1.0 - a * a);
    if (dz == 0.0) continue;
    gb1[r] += dz;
    double* grow = gw1.data() + r * in;
    const double* wrow = w1.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) {
      grow[c] += dz * output.x[c];
      dx[c] += dz * wrow[c];
    }
  }

  auto gemb = grad.mutable_block(Block::kEmbedding);
  for (std::size_t i = 0; i < s.context; ++i) {
    double* dst = gemb.data() + output.inputs[i] * s.embed;
    for (std::size_t j = 0; j < s.embed; ++j) dst[j] += dx[i * s.embed + j];
  }
  if (s.feature > 0) {
    auto gproj = grad.mutable_block(Block::kFeatureProj);
    const double* dproj = dx.data() + s.context * s.embed;
    for (std::size_t f = 0; f < s.feature; ++f) {
      const double fv = output.feature[f];
      if (fv == 0.0) continue;
      for (std::size_t j = 0; j < s.embed; ++j) gproj[f * s.embed + j] += fv * dproj[j];
    }
  }
}

DrafterParameters drafter_backward(const DrafterParameters& params,
                                   const DrafterOutput& output,
                                   std::span<const double> upstream) {
  DrafterParameters grad(params.shape());
  accumulate_backward(params, output, upstream, grad);
  return grad;
}

// ---------------------------------------------------------------------------
// Drafter views

NeuralDrafter::NeuralDrafter(const DrafterParameters& params,
                             const TargetAdapter* feature_source)
    : params_(params), feature_source_(feature_source) {
  if (params.shape().feature > 0) {
    if (feature_source == nullptr) {
      throw ModelError("NeuralDrafter: feature channel enabled without a source");
    }
    if (feature_source->feature_dim() != params.shape().feature) {
      throw ModelError("NeuralDrafter: feature dimension mismatch");
    }
  }
}

DrafterOutput NeuralDrafter::forward(std::span<const TokenId> context) const {
  return forward(context, context.size());
}

DrafterOutput NeuralDrafter::forward(std::span<const TokenId> context,
                                     std::size_t verified) const {
  if (verified > context.size()) throw ModelError("NeuralDrafter: verified > context");
  if (params_.shape().feature == 0) return drafter_forward(params_, context, nullptr);
  FeatureVector f = feature_source_->feature(context.first(verified));
  return drafter_forward(params_, context, &f);
}

std::size_t NeuralDrafter::context_horizon() const {
  if (params_.shape().feature == 0) return params_.shape().context;
  const std::size_t h = feature_source_->context_horizon();
  return h == 0 ? 0 : std::max(h, params_.shape().context);
}

ProbVector NeuralDrafter::next_dist(std::span<const TokenId> context) const {
  return forward(context).dist;
}

ProbVector NeuralDrafter::window_dist(std::span<const TokenId> context,
                                      std::size_t verified) const {
  return forward(context, verified).dist;
}

double sft_step(DrafterParameters& params, const TargetAdapter* feature_source,
                std::span<const TokenId> prefix, TokenId next_token, double lr) {
  if (!(lr >= 0.0)) throw ModelError("sft_step: lr must be >= 0");
  if (next_token >= params.shape().vocab) throw ModelError("sft_step: token out of range");
  DrafterOutput out = NeuralDrafter(params, feature_source).forward(prefix);
  const double loss = -out.dist.log_prob(next_token);
  if (lr == 0.0) return loss;
  // d(-log q_y)/d logits = q - onehot(y)
  std::vector<double> upstream(out.dist.begin(), out.dist.end());
  upstream[next_token] -= 1.0;
  DrafterParameters grad = drafter_backward(params, out, upstream);
  params.add_scaled(grad, -lr);
  return loss;
}

}  // namespace ppow

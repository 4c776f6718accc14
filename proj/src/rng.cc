// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/rng.h"

namespace ppow {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream RngStream::child(std::string_view label) const {
  // String and integer labels live in disjoint domains via the tag constant.
  return RngStream(splitmix64(seed_ ^ splitmix64(fnv1a(label) + 0x5bd1e995ULL)) +
                   kGolden);
}

RngStream RngStream::child(std::uint64_t index) const {
  return RngStream(splitmix64(seed_ + splitmix64(index * kGolden + 1)));
}

RngStream::result_type RngStream::operator()() {
  ++counter_;
  return splitmix64(seed_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
}

}  // namespace ppow

// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ppow/models.h"

namespace ppow {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kVersion, kShape, kCorrupt };
  CheckpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

// Text format:
//   PPOWCKPT v1
//   header vocab=V embed=d feature=F context=c hidden=h
//   <block> shape(<dims>) <values...>      (one line per block)
//   end
//   # <key> = <value>                       (config echo)
// Values are written with 17 significant digits and round-trip exactly.
void save_checkpoint(const std::string& path, const DrafterParameters& params,
                     const ConfigEcho& config_echo = {});

// When `expected` is given, a checkpoint of a different shape is rejected
// with Kind::kShape.
DrafterParameters load_checkpoint(
    const std::string& path,
    const std::optional<DrafterShape>& expected = std::nullopt);

}  // namespace ppow

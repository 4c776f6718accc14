// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace ppow {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

}  // namespace ppow

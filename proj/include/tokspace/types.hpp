#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace tokspace {

using TokenId = std::int32_t;
using TokenIds = std::vector<TokenId>;

// Natural-log probability. Never accumulate raw probabilities.
using LogProb = double;

inline constexpr LogProb kLogZero = -std::numeric_limits<double>::infinity();

}  // namespace tokspace

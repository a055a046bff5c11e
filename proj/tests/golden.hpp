#pragma once

#include <cstdint>

namespace spgym::golden {

// Computed once by BFS over the 3x3 state space and frozen.
inline constexpr std::uint64_t k3x3StateCount = 181440;
inline constexpr std::uint64_t k3x3TotalOptimalLength = 3986672;
inline constexpr double k3x3MeanOptimalLength = 21.972398589065257;  // 3986672 / 181440
inline constexpr int k3x3MaxDepth = 31;

}  // namespace spgym::golden

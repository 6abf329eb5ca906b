#pragma once

#include <array>
#include <cstdint>

#include "lka/rng.hpp"

namespace lka::testing {

// Property tests run under each of these seeds.
inline constexpr std::array<std::uint64_t, 3> kSeeds = {11, 2024, 777};

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace lka::testing

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace ftbrain {

struct TrendResult {
  std::int64_t s = 0;     // sum over i<j of sign(x_j - x_i)
  double variance = 0.0;  // tie-corrected variance of S
  double z = 0.0;         // continuity-corrected normal score
  double p_two_sided = 1.0;
  std::size_t n = 0;
};

// Mann-Kendall monotonic trend test with the normal approximation:
//   var = [n(n-1)(2n+5) - sum_t t(t-1)(2t+5)] / 18
//   z   = (S - sgn S) / sqrt(var),  p = 2 (1 - Phi(|z|)).
// A fully tied series has zero variance and reports z = 0, p = 1.
// Requires n >= 3 and finite values.
TrendResult mann_kendall(std::span<const double> series);

}  // namespace ftbrain

#pragma once

// Reference implementations used as test oracles. They are written
// independently of the library code they check.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ftbrain/image.hpp"
#include "ftbrain/volume.hpp"

namespace oracle {

// Shannon entropy (bits) of a [0,1] image with 256 equal bins; the value
// 1.0 falls in the last bin.
double entropy_bits(const ftbrain::Image& img);

// Slice indices in ranking order found by repeated linear scans for the
// largest remaining entropy (lowest index first among equals).
std::vector<std::size_t> rank_by_scan(const std::vector<double>& entropies);

// Mann-Kendall S by explicit double loop.
long long mk_pairs(std::span<const double> x);

// Max relative gradient error per differentiable op at a random point in
// double precision.
struct OpError {
  std::string op;
  double error;
};
std::vector<OpError> op_gradient_errors(std::uint64_t seed);

}  // namespace oracle

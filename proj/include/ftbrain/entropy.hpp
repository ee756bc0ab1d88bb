#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ftbrain/image.hpp"
#include "ftbrain/volume.hpp"

namespace ftbrain {

inline constexpr std::size_t kHistogramBins = 256;

// Equal-width bins over [0,1]; the last bin is closed on the right. Values
// outside [0,1] are clamped.
std::vector<std::uint64_t> histogram(const Image& slice, std::size_t bins = kHistogramBins);

// Shannon entropy in bits of the intensity histogram, -sum p_i log2 p_i over
// non-empty bins.
double image_entropy(const Image& slice, std::size_t bins = kHistogramBins);

struct RankedSlice {
  std::size_t slice_index = 0;
  double entropy_bits = 0.0;

  friend bool operator==(const RankedSlice&, const RankedSlice&) = default;
};

struct EntropyRanking {
  std::string subject_id;
  // Descending entropy; equal entropies keep ascending slice index.
  std::vector<RankedSlice> entries;
};

// Computes the entropy of every slice (pixels must already be normalized)
// and orders them. All slices must belong to one subject.
EntropyRanking rank_slices(std::span<const SliceRecord> slices);

// The first min(k, n) slice indices of the ranking.
std::vector<std::size_t> select_top_k(const EntropyRanking& ranking, std::size_t k);

// Baseline selector: min(k, n) distinct indices drawn uniformly from
// [0, slice_count), returned in ascending order.
std::vector<std::size_t> select_random_k(std::size_t slice_count, std::size_t k, std::uint64_t seed);

}  // namespace ftbrain

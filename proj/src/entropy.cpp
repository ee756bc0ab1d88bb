#include "ftbrain/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ftbrain/error.hpp"
#include "ftbrain/rng.hpp"

namespace ftbrain {

std::vector<std::uint64_t> histogram(const Image& slice, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("entropy", "histogram needs at least one bin");
  std::vector<std::uint64_t> counts(bins, 0);
  const double scale = static_cast<double>(bins);
  for (float v : slice.pixels) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    const auto b = std::min(static_cast<std::size_t>(c * scale), bins - 1);
    ++counts[b];
  }
  return counts;
}

double image_entropy(const Image& slice, std::size_t bins) {
  if (slice.pixels.empty()) throw InvalidArgument("entropy", "entropy of an empty slice");
  auto counts = histogram(slice, bins);
  // Summing over sorted counts makes the result depend only on the multiset
  // of bin counts, so equal-entropy slices tie exactly.
  std::sort(counts.begin(), counts.end());
  const double total = static_cast<double>(slice.pixels.size());
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  // -0.0 for a single-bin histogram.
  return h <= 0.0 ? 0.0 : h;
}

EntropyRanking rank_slices(std::span<const SliceRecord> slices) {
  if (slices.empty()) throw InvalidArgument("entropy", "rank_slices needs at least one slice");
  EntropyRanking r;
  r.subject_id = slices.front().subject_id;
  r.entries.reserve(slices.size());
  for (const auto& s : slices) {
    if (s.subject_id != r.subject_id) {
      throw InvalidArgument("entropy", "rank_slices mixes subjects '" + r.subject_id + "' and '" +
                                           s.subject_id + "'");
    }
    r.entries.push_back(RankedSlice{s.slice_index, image_entropy(s.pixels)});
  }
  std::sort(r.entries.begin(), r.entries.end(), [](const RankedSlice& a, const RankedSlice& b) {
    if (a.entropy_bits != b.entropy_bits) return a.entropy_bits > b.entropy_bits;
    return a.slice_index < b.slice_index;
  });
  return r;
}

std::vector<std::size_t> select_top_k(const EntropyRanking& ranking, std::size_t k) {
  if (k == 0) throw InvalidArgument("entropy", "select_top_k needs k >= 1");
  const std::size_t n = std::min(k, ranking.entries.size());
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ranking.entries[i].slice_index;
  return out;
}

std::vector<std::size_t> select_random_k(std::size_t slice_count, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw InvalidArgument("entropy", "select_random_k needs k >= 1");
  std::vector<std::size_t> idx(slice_count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(std::min(k, slice_count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace ftbrain

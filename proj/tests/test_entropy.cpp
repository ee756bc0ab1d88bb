#include <doctest.h>

#include <algorithm>
#include <random>

#include "ftbrain/entropy.hpp"
#include "ftbrain/error.hpp"
#include "ftbrain/synth.hpp"
#include "support/oracles.hpp"

using namespace ftbrain;

namespace {

Image from_pixels(std::vector<float> px) {
  Image img(1, px.size());
  img.pixels = std::move(px);
  return img;
}

// Random u8 volume with repeated and constant planes, so entropy ties occur.
std::vector<SliceRecord> tied_slices(std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  const std::size_t z = 6 + eng() % 20, side = 4 + eng() % 6;
  Volume v;
  v.subject_id = "S" + std::to_string(seed);
  v.dims = {z, side, side};
  std::vector<std::uint8_t> vox(v.dims.count());
  const std::size_t plane = side * side;
  for (std::size_t k = 0; k < z; ++k) {
    const auto kind = eng() % 4;
    for (std::size_t i = 0; i < plane; ++i) {
      if (kind == 0 && k > 0) vox[k * plane + i] = vox[(k - 1) * plane + i];
      else if (kind == 1) vox[k * plane + i] = 17;
      else vox[k * plane + i] = static_cast<std::uint8_t>(eng() % (2 + eng() % 254));
    }
    // Shuffled copy of an earlier plane: same histogram, different layout.
    if (kind == 3 && k > 0) {
      std::copy(vox.begin() + static_cast<long>((k - 1) * plane), vox.begin() + static_cast<long>(k * plane),
                vox.begin() + static_cast<long>(k * plane));
      std::shuffle(vox.begin() + static_cast<long>(k * plane), vox.begin() + static_cast<long>((k + 1) * plane), eng);
    }
  }
  v.voxels = vox;
  auto slices = extract_axial(v);
  for (auto& s : slices) normalize(s);
  return slices;
}

}  // namespace

TEST_CASE("histogram binning") {
  const auto h = histogram(from_pixels({0.0f, 0.0f, 0.5f, 1.0f}));
  REQUIRE(h.size() == 256);
  CHECK(h[0] == 2);
  CHECK(h[128] == 1);
  CHECK(h[255] == 1);
  const auto z = histogram(Image(3, 5, 0.0f));
  CHECK(z[0] == 15);
}

TEST_CASE("entropy values") {
  CHECK(image_entropy(from_pixels({0.0f, 0.0f, 0.5f, 1.0f})) == 1.5);
  CHECK(image_entropy(Image(4, 4, 0.3f)) == 0.0);
  CHECK(image_entropy(from_pixels({0.1f, 0.9f, 0.1f, 0.9f})) == 1.0);
  CHECK_THROWS_AS(image_entropy(Image()), InvalidArgument);
  // All 256 bins equally used: the 8-bit maximum.
  std::vector<float> all;
  for (int i = 0; i < 256; ++i) all.push_back(static_cast<float>(i) / 255.0f);
  CHECK(image_entropy(from_pixels(all)) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("entropy bounds, permutation invariance and counts") {
  std::mt19937_64 eng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Image img(3 + eng() % 20, 3 + eng() % 20);
    for (auto& v : img.pixels) v = static_cast<float>(eng() % 1001) / 1000.0f;
    const double h = image_entropy(img);
    CHECK(h >= 0.0);
    CHECK(h <= 8.0);
    const auto counts = histogram(img);
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == img.size());
    Image shuffled = img;
    std::shuffle(shuffled.pixels.begin(), shuffled.pixels.end(), eng);
    CHECK(image_entropy(shuffled) == h);
  }
}

TEST_CASE("rank_slices equals the scan oracle, ties included") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto slices = tied_slices(seed);
    std::vector<double> ent;
    for (const auto& s : slices) ent.push_back(oracle::entropy_bits(s.pixels));
    const auto expect = oracle::rank_by_scan(ent);
    const EntropyRanking r = rank_slices(slices);
    REQUIRE(r.entries.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(r.entries[i].slice_index == expect[i]);
      CHECK(r.entries[i].entropy_bits == ent[expect[i]]);
    }
  }
}

TEST_CASE("rank_slices edge cases") {
  std::vector<SliceRecord> same;
  for (std::size_t k = 0; k < 5; ++k) same.push_back({"s", Label::NC, k, 0.0, Image(2, 2, 0.4f), VoxelType::U8});
  const auto r = rank_slices(same);
  for (std::size_t k = 0; k < 5; ++k) CHECK(r.entries[k].slice_index == k);
  CHECK(rank_slices(std::span(same).first(1)).entries.size() == 1);
  same[3].subject_id = "other";
  CHECK_THROWS_AS(rank_slices(same), InvalidArgument);
}

TEST_CASE("select_top_k") {
  const auto slices = tied_slices(5);
  const auto r = rank_slices(slices);
  CHECK(select_top_k(r, 1000).size() == slices.size());
  CHECK_THROWS_AS(select_top_k(r, 0), InvalidArgument);
  for (std::size_t k1 = 1; k1 < slices.size(); ++k1) {
    const auto a = select_top_k(r, k1);
    const auto b = select_top_k(r, k1 + 1);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("top-8 slices of a synthetic volume avoid the empty boundary") {
  const Volume v = synth_generate(Label::NC, 9, {40, 48, 48});
  auto slices = extract_axial(v);
  for (auto& s : slices) normalize(s);
  const auto top = select_top_k(rank_slices(slices), 8);
  for (std::size_t z : top) {
    CHECK(z > 4);
    CHECK(z < 35);
  }
  CHECK(image_entropy(slices.front().pixels) == 0.0);
}

TEST_CASE("select_random_k") {
  const auto a = select_random_k(50, 8, 3);
  CHECK(a.size() == 8);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
  CHECK(select_random_k(50, 8, 3) == a);
  CHECK(select_random_k(5, 8, 3).size() == 5);
}

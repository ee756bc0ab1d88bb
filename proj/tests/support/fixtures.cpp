#include "support/fixtures.hpp"

#include <algorithm>

#include "ftbrain/cam.hpp"
#include "ftbrain/rng.hpp"
#include "ftbrain/train.hpp"

namespace fixture {

using namespace ftbrain;

Image square_image(int quadrant, std::uint64_t seed, std::size_t height, std::size_t width) {
  Rng rng(seed);
  Image img(height, width);
  for (auto& v : img.pixels) v = static_cast<float>(std::clamp(0.35 + 0.08 * rng.normal(), 0.0, 1.0));
  if (quadrant < 0) return img;
  const std::size_t side = std::max<std::size_t>(2, height / 4);
  const std::size_t half_h = height / 2, half_w = width / 2;
  const std::size_t r0 = (quadrant / 2) * half_h + rng.below(half_h - side + 1);
  const std::size_t c0 = (quadrant % 2) * half_w + rng.below(half_w - side + 1);
  for (std::size_t r = r0; r < r0 + side; ++r) {
    for (std::size_t c = c0; c < c0 + side; ++c) img.at(r, c) = 0.95f;
  }
  return img;
}

SampleSet separable_set(std::size_t subjects_per_class, std::size_t per_subject, const ModelSpec& spec,
                        std::uint64_t seed, const std::string& prefix) {
  SampleSet set;
  set.sample_shape = {spec.channels, spec.height, spec.width};
  std::vector<float> sample(set.sample_size());
  for (std::size_t i = 0; i < subjects_per_class; ++i) {
    for (int cls = 0; cls < 2; ++cls) {
      const std::string id = prefix + "-" + std::to_string(cls) + "-" + std::to_string(i);
      for (std::size_t k = 0; k < per_subject; ++k) {
        const std::uint64_t s = derive_seed(seed, (i * 2 + static_cast<std::size_t>(cls)) * 1000 + k);
        const int quadrant = cls == 1 ? static_cast<int>(s % 4) : -1;
        const Image img = square_image(quadrant, s, spec.height, spec.width);
        for (std::size_t ch = 0; ch < spec.channels; ++ch) {
          std::copy(img.pixels.begin(), img.pixels.end(),
                    sample.begin() + static_cast<long>(ch * img.pixels.size()));
        }
        set.append(sample, cls, id);
      }
    }
  }
  return set;
}

SampleSet brightness_set(std::size_t subjects_per_class, std::size_t per_subject, const ModelSpec& spec,
                         std::uint64_t seed, const std::string& prefix) {
  SampleSet set;
  set.sample_shape = {spec.channels, spec.height, spec.width};
  std::vector<float> sample(set.sample_size());
  for (std::size_t i = 0; i < subjects_per_class; ++i) {
    for (int cls = 0; cls < 2; ++cls) {
      const std::string id = prefix + "-" + std::to_string(cls) + "-" + std::to_string(i);
      for (std::size_t k = 0; k < per_subject; ++k) {
        Rng rng(derive_seed(seed, (i * 2 + static_cast<std::size_t>(cls)) * 1000 + k));
        const double mean = cls == 1 ? 0.65 : 0.35;
        for (auto& v : sample) v = static_cast<float>(std::clamp(mean + 0.1 * rng.normal(), 0.0, 1.0));
        set.append(sample, cls, id);
      }
    }
  }
  return set;
}

ModelSpec small_cam_spec() {
  ModelSpec s;
  s.height = s.width = 32;
  s.blocks = {{1, 8}, {1, 16}, {1, 16}};
  s.cam_head = true;
  return s;
}

bool cam_localizes(std::uint64_t seed) {
  const ModelSpec spec = small_cam_spec();
  const SampleSet tr = separable_set(16, 4, spec, derive_seed(seed, 1), "cam");
  Model model(spec, derive_seed(seed, 2));
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 16;
  cfg.lr = 3e-3;
  cfg.seed = seed;
  train(model, tr, SampleSet{}, cfg);

  const int quadrant = static_cast<int>(seed % 4);
  const Image query = square_image(quadrant, derive_seed(seed, 3), spec.height, spec.width);
  const Heatmap h = compute_cam(model, query, 1);
  const int row_half = h.peak_row >= spec.height / 2 ? 1 : 0;
  const int col_half = h.peak_col >= spec.width / 2 ? 1 : 0;
  return row_half * 2 + col_half == quadrant;
}

}  // namespace fixture

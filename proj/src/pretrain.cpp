#include "ftbrain/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ftbrain/error.hpp"
#include "ftbrain/rng.hpp"

namespace ftbrain {

Image source_task_image(int cls, std::uint64_t seed, std::size_t height, std::size_t width) {
  if (cls < 0 || cls >= kSourceClasses) throw InvalidArgument("model", "source class out of range");
  Rng rng(seed);
  Image img(height, width);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  const double s = std::min(h, w);

  // Smooth shading plus pixel noise.
  double fx[2], fy[2], ph[2], amp[2];
  for (int k = 0; k < 2; ++k) {
    fx[k] = rng.uniform(-6.0, 6.0) / w;
    fy[k] = rng.uniform(-6.0, 6.0) / h;
    ph[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    amp[k] = rng.uniform(0.02, 0.07);
  }
  const double base = rng.uniform(0.35, 0.6);

  // One blob whose radius band is the class: small, medium or large.
  struct Blob {
    double cy, cx, ry, rx, cos_t, sin_t, delta;
  };
  Blob b;
  const double radius = (rng.uniform(0.045, 0.07) + 0.045 * cls) * s;
  const double aspect = rng.uniform(0.75, 1.33);
  b.ry = radius * aspect;
  b.rx = radius / aspect;
  const double t = rng.uniform(0.0, std::numbers::pi);
  b.cos_t = std::cos(t);
  b.sin_t = std::sin(t);
  const double reach = std::max(b.ry, b.rx) + 2.0;
  if (2.0 * reach >= std::min(h, w)) throw InvalidArgument("model", "source image too small for the blob");
  b.cy = rng.uniform(reach, h - reach);
  b.cx = rng.uniform(reach, w - reach);
  b.delta = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 0.4);
  const std::vector<Blob> blobs{b};

  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double y = static_cast<double>(r) + 0.5, x = static_cast<double>(c) + 0.5;
      double v = base;
      for (int k = 0; k < 2; ++k) v += amp[k] * std::sin(2.0 * std::numbers::pi * (fx[k] * x + fy[k] * y) + ph[k]);
      for (const Blob& b : blobs) {
        const double dy = y - b.cy, dx = x - b.cx;
        const double u = (b.cos_t * dx + b.sin_t * dy) / b.rx;
        const double q = (-b.sin_t * dx + b.cos_t * dy) / b.ry;
        if (u * u + q * q <= 1.0) v += b.delta;
      }
      v += 0.05 * rng.normal();
      img.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return img;
}

SampleSet make_source_task(std::size_t count, const ModelSpec& spec, std::uint64_t seed) {
  SampleSet set;
  set.sample_shape = {spec.channels, spec.height, spec.width};
  std::vector<float> sample(set.sample_size());
  const std::size_t plane = spec.height * spec.width;
  for (std::size_t i = 0; i < count; ++i) {
    const int cls = static_cast<int>(i % kSourceClasses);
    const Image img = source_task_image(cls, derive_seed(seed, i), spec.height, spec.width);
    for (std::size_t c = 0; c < spec.channels; ++c) {
      std::copy(img.pixels.begin(), img.pixels.end(), sample.begin() + static_cast<std::ptrdiff_t>(c * plane));
    }
    set.append(sample, cls, "source-" + std::to_string(seed) + "-" + std::to_string(i));
  }
  return set;
}

double tensor_variance(const Tensor& t) {
  double mean = 0.0;
  for (float v : t.storage()) mean += v;
  mean /= static_cast<double>(t.size());
  double ss = 0.0;
  for (float v : t.storage()) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(t.size());
}

PretrainResult pretrain_source(const ModelSpec& target, const SourceTaskConfig& cfg, std::uint64_t seed) {
  ModelSpec spec = target;
  spec.head = HeadKind::Softmax3;
  spec.cam_head = false;
  Model model(spec, seed);

  const SampleSet train_set = make_source_task(cfg.train_images, spec, derive_seed(seed, 11));
  const SampleSet val_set = make_source_task(cfg.val_images, spec, derive_seed(seed, 12));

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.lr = cfg.lr;
  tc.seed = seed;
  tc.freeze_group = FreezeGroup::All;

  PretrainResult out;
  out.conv1_init_variance = tensor_variance(model.parameter("conv1.weight").value);
  out.curve = train(model, train_set, val_set, tc);
  out.val_accuracy = evaluate(model, val_set).accuracy;
  out.conv1_final_variance = tensor_variance(model.parameter("conv1.weight").value);
  out.checkpoint = make_checkpoint(model, cfg.epochs);
  return out;
}

}  // namespace ftbrain

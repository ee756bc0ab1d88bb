#pragma once

#include <cstddef>
#include <cstdint>

#include "ftbrain/checkpoint.hpp"
#include "ftbrain/dataset.hpp"
#include "ftbrain/image.hpp"
#include "ftbrain/train.hpp"

namespace ftbrain {

// Synthetic source task standing in for natural-image pretraining: tell
// the size of a single blob (small, medium, large) on a shaded noise
// image. Blobs vary in position, elongation, orientation and contrast
// polarity.
struct SourceTaskConfig {
  std::size_t train_images = 1800;
  std::size_t val_images = 600;
  std::size_t epochs = 12;
  std::size_t batch_size = 25;
  double lr = 3e-4;
};

inline constexpr int kSourceClasses = 3;

// One source-task image of class `cls` (0, 1, 2 -> small, medium, large blob),
// values in [0,1].
Image source_task_image(int cls, std::uint64_t seed, std::size_t height, std::size_t width);

// Balanced source-task samples shaped for `spec`.
SampleSet make_source_task(std::size_t count, const ModelSpec& spec, std::uint64_t seed);

struct PretrainResult {
  Checkpoint checkpoint;
  LearningCurve curve;
  double val_accuracy = 0.0;
  // Variance of conv1 weights at initialization and after pretraining.
  double conv1_init_variance = 0.0;
  double conv1_final_variance = 0.0;
};

// Trains a 3-way softmax model with `target`'s conv stack on the source
// task. The conv tensors of the returned checkpoint seed transfer learning.
PretrainResult pretrain_source(const ModelSpec& target, const SourceTaskConfig& cfg, std::uint64_t seed);

double tensor_variance(const Tensor& t);

}  // namespace ftbrain

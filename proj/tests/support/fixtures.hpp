#pragma once

// Small synthetic datasets for training, CAM and pipeline tests.

#include <cstddef>
#include <cstdint>
#include <string>

#include "ftbrain/dataset.hpp"
#include "ftbrain/model.hpp"

namespace fixture {

// Two-class task that any conv net separates: class 1 images carry a bright
// square on a noisy gray background, class 0 images do not. Each subject
// contributes `per_subject` images; ids are "<prefix>-<class>-<index>".
ftbrain::SampleSet separable_set(std::size_t subjects_per_class, std::size_t per_subject,
                                 const ftbrain::ModelSpec& spec, std::uint64_t seed,
                                 const std::string& prefix = "toy");

// Linearly separable two-class task: class 1 images are bright noise
// (mean 0.65), class 0 images dark noise (mean 0.35).
ftbrain::SampleSet brightness_set(std::size_t subjects_per_class, std::size_t per_subject,
                                  const ftbrain::ModelSpec& spec, std::uint64_t seed,
                                  const std::string& prefix = "lin");

// Bright-square image with the square centered in `quadrant`
// (0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right), or no square
// when quadrant < 0.
ftbrain::Image square_image(int quadrant, std::uint64_t seed, std::size_t height, std::size_t width);

// Small GAP-head binary model used by the CAM tests: 32x32 input, three
// blocks of one conv layer.
ftbrain::ModelSpec small_cam_spec();

// One localization trial: trains small_cam_spec() on square-vs-blank images
// from `seed`, then checks that the positive-class CAM of a fresh image
// peaks in the quadrant holding its square.
bool cam_localizes(std::uint64_t seed);

}  // namespace fixture

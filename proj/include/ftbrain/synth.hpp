#pragma once

#include <cstdint>
#include <string>

#include "ftbrain/volume.hpp"

namespace ftbrain {

// Ventricle and cortical-erosion scale per diagnostic class.
double class_factor(Label cls);

// Volume size used by the desk-scale experiments.
inline constexpr Dims kDeskSynthDims{64, 80, 80};

// Deterministic MRI-like 8-bit volume: an ellipsoidal brain with a CSF rim,
// gray-matter band and white-matter core, plus two dark ventricle lobes near
// the center. Ventricle radius and rim thickness scale with class_factor().
// Anatomy jitter, deformation and noise depend only on the seed, so two
// classes generated with one seed differ only in the class effects.
// Every axis must be at least 16.
Volume synth_generate(Label cls, std::uint64_t subject_seed, Dims dims = kDeskSynthDims,
                      std::string subject_id = {});

}  // namespace ftbrain

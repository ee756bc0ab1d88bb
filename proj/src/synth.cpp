#include "ftbrain/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "ftbrain/error.hpp"
#include "ftbrain/rng.hpp"

namespace ftbrain {

double class_factor(Label cls) {
  switch (cls) {
    case Label::NC: return 1.0;
    case Label::MCI: return 1.3;
    case Label::AD: return 1.6;
  }
  return 1.0;
}

namespace {

struct Wave {
  std::array<double, 3> freq;
  double phase;
  double amp;
  double eval(double u, double v, double w) const {
    return amp * std::sin(freq[0] * u + freq[1] * v + freq[2] * w + phase);
  }
};

Wave random_wave(Rng& rng, double amp_scale, double max_freq) {
  Wave wv;
  for (double& f : wv.freq) f = rng.uniform(-max_freq, max_freq);
  wv.phase = rng.uniform(0.0, 2.0 * 3.141592653589793);
  wv.amp = amp_scale * rng.uniform(0.5, 1.0);
  return wv;
}

// Tissue intensities on the 0..255 scale.
constexpr double kCsf = 40.0;
constexpr double kGray = 110.0;
constexpr double kWhite = 170.0;
constexpr double kVentricle = 28.0;
constexpr double kNoiseSigma = 6.0;

}  // namespace

Volume synth_generate(Label cls, std::uint64_t subject_seed, Dims dims, std::string subject_id) {
  if (dims.z < 16 || dims.y < 16 || dims.x < 16) {
    throw InvalidArgument("dataio", "synthetic volume dims must be at least 16 per axis");
  }
  const double factor = class_factor(cls);
  Rng anat(derive_seed(subject_seed, 1));

  // Brain ellipsoid radii in normalized [-1,1] coordinates.
  const double ax = 0.80 * (1.0 + 0.04 * anat.normal());
  const double ay = 0.88 * (1.0 + 0.04 * anat.normal());
  const double az = 0.82 * (1.0 + 0.04 * anat.normal());
  // Outer CSF rim (erodes the cortex) and gray-matter band, in radius units.
  const double rim = 0.05 * factor * (1.0 + 0.08 * anat.normal());
  const double gray = 0.14 * (1.0 + 0.08 * anat.normal());
  // Two ventricle lobes either side of the midline.
  const double v_jitter = 1.0 + 0.10 * anat.normal();
  const double vx = 0.09 * v_jitter * factor;
  const double vy = 0.20 * v_jitter * factor;
  const double vz = 0.26 * v_jitter * factor;
  const double v_sep = 0.11 * (1.0 + 0.05 * anat.normal());
  const double v_off = -0.06 + 0.02 * anat.normal();

  std::array<Wave, 3> warp_u{}, warp_v{}, warp_w{};
  for (auto* set : {&warp_u, &warp_v, &warp_w}) {
    for (Wave& wv : *set) wv = random_wave(anat, 0.025, 4.0);
  }
  std::array<Wave, 3> bias{};
  for (Wave& wv : bias) wv = random_wave(anat, 0.04, 3.0);
  std::array<Wave, 4> texture{};
  for (Wave& wv : texture) wv = random_wave(anat, 5.0, 14.0);

  Rng noise(derive_seed(subject_seed, 2));

  std::vector<std::uint8_t> vox(dims.count());
  const double hz = 0.5 * static_cast<double>(dims.z - 1), hy = 0.5 * static_cast<double>(dims.y - 1),
               hx = 0.5 * static_cast<double>(dims.x - 1);
  std::size_t i = 0;
  for (std::size_t k = 0; k < dims.z; ++k) {
    const double w0 = (static_cast<double>(k) - hz) / hz;
    for (std::size_t j = 0; j < dims.y; ++j) {
      const double v0 = (static_cast<double>(j) - hy) / hy;
      for (std::size_t l = 0; l < dims.x; ++l, ++i) {
        const double u0 = (static_cast<double>(l) - hx) / hx;
        // Noise is drawn for every voxel so the stream does not depend on class.
        const double eps = noise.normal();

        double u = u0, v = v0, w = w0;
        for (int m = 0; m < 3; ++m) {
          u += warp_u[m].eval(u0, v0, w0);
          v += warp_v[m].eval(u0, v0, w0);
          w += warp_w[m].eval(u0, v0, w0);
        }
        const double r = std::sqrt((u / ax) * (u / ax) + (v / ay) * (v / ay) + (w / az) * (w / az));
        if (r > 1.0) continue;

        double val;
        if (r > 1.0 - rim) {
          val = kCsf;
        } else if (r > 1.0 - rim - gray) {
          val = kGray;
        } else {
          val = kWhite;
        }
        const double dv = (v - v_off) / vy, dw = w / vz;
        const double left = (u + v_sep) / vx, right = (u - v_sep) / vx;
        if (left * left + dv * dv + dw * dw <= 1.0 || right * right + dv * dv + dw * dw <= 1.0) {
          val = kVentricle;
        }
        double tex = 0.0;
        for (const Wave& wv : texture) tex += wv.eval(u0, v0, w0);
        double gain = 1.0;
        for (const Wave& wv : bias) gain += wv.eval(u0, v0, w0);
        val = (val + (val > kCsf ? tex : 0.0)) * gain + kNoiseSigma * eps;
        vox[i] = static_cast<std::uint8_t>(std::clamp(std::lround(val), 1L, 255L));
      }
    }
  }

  Volume out;
  if (subject_id.empty()) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s-%llu", std::string(label_name(cls)).c_str(),
                  static_cast<unsigned long long>(subject_seed));
    subject_id = buf;
  }
  out.subject_id = std::move(subject_id);
  out.label = cls;
  out.dims = dims;
  out.voxels = std::move(vox);
  return out;
}

}  // namespace ftbrain

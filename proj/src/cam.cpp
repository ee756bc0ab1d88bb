#include "ftbrain/cam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ftbrain/error.hpp"

namespace ftbrain {

Heatmap cam_from_features(const Tensor& features, std::span<const float> class_weights,
                          std::size_t out_h, std::size_t out_w, int class_index) {
  const Shape& s = features.shape();
  std::size_t C, h, w;
  if (s.size() == 3) {
    C = s[0], h = s[1], w = s[2];
  } else if (s.size() == 4 && s[0] == 1) {
    C = s[1], h = s[2], w = s[3];
  } else {
    throw InvalidArgument("cam", "features must be [C,h,w] or [1,C,h,w], got " + shape_string(s));
  }
  if (class_weights.size() != C) throw InvalidArgument("cam", "one class weight per feature channel expected");

  Image low(h, w);
  for (std::size_t k = 0; k < C; ++k) {
    const float wk = class_weights[k];
    const float* f = features.data() + k * h * w;
    for (std::size_t p = 0; p < h * w; ++p) low.pixels[p] += wk * f[p];
  }
  for (float& v : low.pixels) v = std::max(v, 0.0f);

  Heatmap out;
  out.class_index = class_index;
  out.values = resize_bilinear(low, out_h, out_w);
  const auto peak = std::max_element(out.values.pixels.begin(), out.values.pixels.end());
  const float m = *peak;
  const std::size_t at = static_cast<std::size_t>(peak - out.values.pixels.begin());
  out.peak_row = at / out_w;
  out.peak_col = at % out_w;
  if (m > 0.0f) {
    for (float& v : out.values.pixels) v /= m;
  }
  return out;
}

namespace {

Tensor image_tensor(const Model& model, const Image& image) {
  const ModelSpec& spec = model.spec();
  if (image.height != spec.height || image.width != spec.width) {
    throw InvalidArgument("cam", "query image size does not match the model input");
  }
  Tensor x({1, spec.channels, spec.height, spec.width});
  for (std::size_t c = 0; c < spec.channels; ++c) {
    std::copy(image.pixels.begin(), image.pixels.end(), x.data() + c * image.size());
  }
  return x;
}

}  // namespace

Heatmap compute_cam(const Model& model, const Image& image, int class_index) {
  const ModelSpec& spec = model.spec();
  if (!spec.cam_head) throw InvalidArgument("cam", "model was not built with a GAP (cam) head");
  const int classes = spec.head == HeadKind::SigmoidBinary ? 2 : 3;
  if (class_index < 0 || class_index >= classes) {
    throw InvalidArgument("cam", "class index " + std::to_string(class_index) + " out of range");
  }
  const Tensor feats = model.features(image_tensor(model, image));
  const Tensor& wout = model.parameter("out.weight").value;  // [C, units]
  const std::size_t C = wout.dim(0), units = wout.dim(1);
  std::vector<float> weights(C);
  for (std::size_t k = 0; k < C; ++k) {
    if (spec.head == HeadKind::SigmoidBinary) {
      weights[k] = class_index == 1 ? wout[k] : -wout[k];
    } else {
      weights[k] = wout[k * units + static_cast<std::size_t>(class_index)];
    }
  }
  return cam_from_features(feats, weights, spec.height, spec.width, class_index);
}

int predicted_class(const Model& model, const Image& image) {
  const Tensor p = model.predict(image_tensor(model, image));
  if (model.spec().head == HeadKind::SigmoidBinary) return p[0] >= 0.5f ? 1 : 0;
  return static_cast<int>(std::max_element(p.data(), p.data() + p.size()) - p.data());
}

RgbImage overlay(const Image& image, const Heatmap& heat, double alpha) {
  if (image.height != heat.values.height || image.width != heat.values.width) {
    throw InvalidArgument("cam", "overlay image and heatmap sizes differ");
  }
  RgbImage out{image.height, image.width, std::vector<std::uint8_t>(image.size() * 3)};
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double g = std::clamp(static_cast<double>(image.pixels[i]), 0.0, 1.0);
    const double a = alpha * std::clamp(static_cast<double>(heat.values.pixels[i]), 0.0, 1.0);
    const double base = (1.0 - a) * g;
    out.rgb[3 * i] = static_cast<std::uint8_t>(std::lround(255.0 * (base + a)));
    out.rgb[3 * i + 1] = static_cast<std::uint8_t>(std::lround(255.0 * base));
    out.rgb[3 * i + 2] = out.rgb[3 * i + 1];
  }
  return out;
}

void write_overlay(const Image& image, const Heatmap& heat, const std::filesystem::path& path, double alpha) {
  write_ppm(overlay(image, heat, alpha), path);
}

void write_heatmap_csv(const Heatmap& heat, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cam", "cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t r = 0; r < heat.values.height; ++r) {
    for (std::size_t c = 0; c < heat.values.width; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", heat.values.at(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace ftbrain

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

#include "ftbrain/image.hpp"
#include "ftbrain/model.hpp"

namespace ftbrain {

struct Heatmap {
  Image values;  // in [0,1], max 1 unless identically zero
  int class_index = 0;
  std::size_t peak_row = 0;
  std::size_t peak_col = 0;
};

// Class activation map from final feature maps `features` [C,h,w] (or
// [1,C,h,w]) and per-channel class weights: sum_k w_k f_k, clipped at 0,
// bilinearly resized to out_h x out_w, divided by its maximum.
Heatmap cam_from_features(const Tensor& features, std::span<const float> class_weights,
                          std::size_t out_h, std::size_t out_w, int class_index = 0);

// CAM for a model built with cam_head. `image` is a preprocessed input of
// the model's size. For a sigmoid head, class 1 (positive) uses the output
// weights and class 0 their negation; for a 3-way head the class column.
Heatmap compute_cam(const Model& model, const Image& image, int class_index);

// Class the model predicts for `image`.
int predicted_class(const Model& model, const Image& image);

// Red-tinted overlay: per pixel a = alpha * heat, channels
// R = (1-a) g + a, G = B = (1-a) g, scaled to 0..255.
RgbImage overlay(const Image& image, const Heatmap& heat, double alpha = 0.5);
void write_overlay(const Image& image, const Heatmap& heat, const std::filesystem::path& path,
                   double alpha = 0.5);
// Heatmap values as CSV rows, nine significant digits.
void write_heatmap_csv(const Heatmap& heat, const std::filesystem::path& path);

}  // namespace ftbrain

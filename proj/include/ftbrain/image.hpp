#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace ftbrain {

// Single-channel 2-D image, row-major.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w, fill) {}

  float& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  float at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  std::size_t size() const { return pixels.size(); }

  friend bool operator==(const Image&, const Image&) = default;
};

enum class VoxelType : std::uint32_t { U8 = 0, F32 = 1 };

// Bilinear resampling with half-pixel centers: output pixel (r, c) samples the
// source at ((r + 0.5) * in_h / out_h - 0.5, ...) with edge clamping.
Image resize_bilinear(const Image& src, std::size_t out_h, std::size_t out_w);

// Maps intensities to [0,1]: 8-bit sources are divided by 255, float sources
// are min-max scaled (a constant image becomes all zeros).
Image normalize(const Image& src, VoxelType source);

// 8-bit grayscale PGM (P5); values in [0,1] are scaled by 255 and rounded.
void write_pgm(const Image& img, const std::filesystem::path& path);
Image read_pgm(const std::filesystem::path& path);

// 8-bit RGB PPM (P6), interleaved.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;
};
void write_ppm(const RgbImage& img, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);

}  // namespace ftbrain

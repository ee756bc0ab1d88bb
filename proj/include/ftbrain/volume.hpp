#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ftbrain/image.hpp"

namespace ftbrain {

enum class Label : int { AD = 0, MCI = 1, NC = 2 };

std::string_view label_name(Label l);
// Accepts "AD", "MCI", "NC" (case-sensitive).
Label parse_label(std::string_view s);

struct Dims {
  std::size_t z = 0;
  std::size_t y = 0;
  std::size_t x = 0;

  std::size_t count() const { return z * y * x; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// A subject's scan, voxels z-major then y then x.
struct Volume {
  std::string subject_id;
  Label label = Label::NC;
  Dims dims;
  std::variant<std::vector<std::uint8_t>, std::vector<float>> voxels;

  VoxelType type() const { return voxels.index() == 0 ? VoxelType::U8 : VoxelType::F32; }
  // Voxel value as float regardless of storage type.
  float value(std::size_t z, std::size_t y, std::size_t x) const;
  // Plane z as a float image in raw intensity units.
  Image plane(std::size_t z) const;
};

struct SliceRecord {
  std::string subject_id;
  Label label = Label::NC;
  std::size_t slice_index = 0;
  double entropy_bits = 0.0;
  Image pixels;
  VoxelType source_type = VoxelType::U8;
};

// One record per z index with the raw plane; entropy is left at 0.
std::vector<SliceRecord> extract_axial(const Volume& v);

// Normalizes pixels in place according to the record's source type.
void normalize(SliceRecord& s);

// MVOL: "MVOL" | u32le z, y, x | u32le dtype (0 = u8, 1 = f32le) | voxels.
// Subject id and label live in the dataset index, not in the file.
void save_volume(const Volume& v, const std::filesystem::path& path);
Volume load_volume(const std::filesystem::path& path, std::string subject_id = {},
                   Label label = Label::NC);

}  // namespace ftbrain

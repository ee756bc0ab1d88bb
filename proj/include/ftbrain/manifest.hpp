#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ftbrain/volume.hpp"

namespace ftbrain {

// One selected slice: `path` points at the subject's MVOL volume and
// `slice_index` at the axial plane inside it.
struct ManifestRow {
  std::string subject_id;
  Label label = Label::NC;
  std::size_t slice_index = 0;
  double entropy_bits = 0.0;
  std::string path;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

// CSV with header `subject_id,label,slice_index,entropy_bits,path`.
// Entropies are written with 17 significant digits so they round-trip.
void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

// Subject index written by the synthesizer: `subject_id,label,path`.
struct SubjectRow {
  std::string subject_id;
  Label label = Label::NC;
  std::string path;
};
void write_subject_index(const std::vector<SubjectRow>& rows, const std::filesystem::path& path);
std::vector<SubjectRow> read_subject_index(const std::filesystem::path& path);

// Splits one CSV line on commas (no quoting; fields never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace ftbrain

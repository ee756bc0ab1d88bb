#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftbrain/model.hpp"

namespace ftbrain {

// In-memory image of an MNET file.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;
  // {"spec": ModelSpec JSON, "epoch": n, "seed": s}
  nlohmann::json metadata;

  const Tensor* find(std::string_view name) const;
  ModelSpec spec() const { return ModelSpec::from_json(metadata.at("spec")); }
};

Checkpoint make_checkpoint(const Model& model, std::size_t epoch = 0);

// MNET: "MNET" | u32 count | per tensor (u32 name length, name, u32 rank,
// u32 dims, f32 data) | u32 JSON length, JSON metadata. Little-endian.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_checkpoint(const Model& model, const std::filesystem::path& path, std::size_t epoch = 0);
// Builds a model for `spec` and fills it from the file. Throws naming the
// first tensor whose presence or shape disagrees with the spec.
Model load_checkpoint(const std::filesystem::path& path, const ModelSpec& spec);
Model model_from_checkpoint(const Checkpoint& ckpt);
void load_parameters(const Checkpoint& ckpt, Model& model);

// Copies every conv.* tensor of `source` into `target` (the transfer-learning
// initialization). Returns the number of tensors copied.
std::size_t transfer_conv_weights(const Checkpoint& source, Model& target);

}  // namespace ftbrain

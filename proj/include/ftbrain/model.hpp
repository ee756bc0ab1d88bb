#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftbrain/tensor.hpp"

namespace ftbrain {

enum class HeadKind { SigmoidBinary, Softmax3 };

// Which prefix of the conv stack is frozen: none, 1-4, 1-8, 1-12, or all.
enum class FreezeGroup { All, G1, G2, G3, G4 };

std::string_view freeze_group_name(FreezeGroup g);
FreezeGroup parse_freeze_group(std::string_view s);
std::string_view head_kind_name(HeadKind h);
HeadKind parse_head_kind(std::string_view s);

struct BlockPlan {
  std::size_t conv_layers = 0;
  std::size_t channels = 0;
  friend bool operator==(const BlockPlan&, const BlockPlan&) = default;
};

// Declarative VGG-style architecture: blocks of 3x3 conv+ReLU layers, each
// block followed by a 2x2 max-pool, then either flatten -> dense(fc_width)
// -> ReLU -> output, or (cam_head) global average pooling -> output.
struct ModelSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t channels = 1;
  std::vector<BlockPlan> blocks;
  std::size_t fc_width = 256;
  HeadKind head = HeadKind::SigmoidBinary;
  bool cam_head = false;

  // 128x128 input, 16 conv layers in blocks [2,2,4,4,4] with widths
  // [64,128,256,512,512], FC-256.
  static ModelSpec paper();
  // Same layer counts with widths [8,16,32,64,64], 64x64 input, FC-64.
  static ModelSpec desk();

  std::size_t conv_layer_count() const;
  std::size_t output_units() const { return head == HeadKind::SigmoidBinary ? 1 : 3; }
  // Final feature map after the last pool: {channels, h, w}.
  Shape feature_shape() const;
  void validate() const;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Number of leading conv layers a group freezes for a stack of `conv_layers`.
std::size_t frozen_conv_count(FreezeGroup g, std::size_t conv_layers);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

class Model {
 public:
  enum class StageKind { Conv, Pool, Flatten, GlobalAvgPool, DenseRelu, Output };

  struct Stage {
    StageKind kind;
    // Index of the weight parameter (bias follows it); -1 for parameter-free stages.
    int param = -1;
  };

  Model(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(std::string_view name);
  const Parameter& parameter(std::string_view name) const;
  const std::vector<Stage>& stages() const { return stages_; }

  // Marks conv layers of the frozen prefix as non-trainable and everything
  // else as trainable. Returns the per-parameter trainable mask.
  std::vector<bool> apply_freeze(FreezeGroup g);
  std::size_t trainable_parameter_count() const;
  std::size_t parameter_count() const;

  // Number of leading stages with no trainable parameters. Their output is a
  // fixed function of the input, so training can start after them.
  std::size_t frozen_stage_prefix() const;

  // Runs stages [begin, end) without caching.
  Tensor forward_stages(const Tensor& x, std::size_t begin, std::size_t end) const;
  // Output logits: [N,1] or [N,3].
  Tensor logits(const Tensor& x, std::size_t begin = 0) const;
  // Class probabilities (sigmoid or softmax of the logits).
  Tensor predict(const Tensor& x, std::size_t begin = 0) const;
  // Activations entering the head: the last pooled conv map [N,C,h,w].
  Tensor features(const Tensor& x) const;
  std::size_t feature_stage_end() const { return conv_stage_end_; }

  // Forward from stage `begin`, mean cross-entropy loss against `labels`,
  // and backward. Gradients are accumulated into trainable parameters only;
  // backpropagation stops below the earliest trainable stage unless
  // `input_grad` is given, in which case it receives dLoss/d(input).
  double accumulate_gradients(const Tensor& x, std::size_t begin, std::span<const int> labels,
                              Tensor* input_grad = nullptr);
  void zero_grad();

  // Probabilities from logits according to the head kind.
  Tensor activate(const Tensor& logits) const;
  // Mean cross-entropy of probabilities against labels.
  double loss(const Tensor& prob, std::span<const int> labels) const;

 private:
  Tensor run_stage(std::size_t s, const Tensor& x, std::vector<std::uint32_t>* argmax) const;

  ModelSpec spec_;
  std::uint64_t seed_;
  std::vector<Parameter> params_;
  std::vector<Stage> stages_;
  std::size_t conv_stage_end_ = 0;
};

}  // namespace ftbrain

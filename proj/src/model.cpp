#include "ftbrain/model.hpp"

#include <algorithm>
#include <cmath>

#include "ftbrain/error.hpp"
#include "ftbrain/ops.hpp"
#include "ftbrain/rng.hpp"

namespace ftbrain {

std::string_view freeze_group_name(FreezeGroup g) {
  switch (g) {
    case FreezeGroup::All: return "All";
    case FreezeGroup::G1: return "G1";
    case FreezeGroup::G2: return "G2";
    case FreezeGroup::G3: return "G3";
    case FreezeGroup::G4: return "G4";
  }
  return "?";
}

FreezeGroup parse_freeze_group(std::string_view s) {
  if (s == "All" || s == "all" || s == "none") return FreezeGroup::All;
  if (s == "G1" || s == "g1") return FreezeGroup::G1;
  if (s == "G2" || s == "g2") return FreezeGroup::G2;
  if (s == "G3" || s == "g3") return FreezeGroup::G3;
  if (s == "G4" || s == "g4") return FreezeGroup::G4;
  throw InvalidArgument("model", "unknown freeze group '" + std::string(s) + "'");
}

std::string_view head_kind_name(HeadKind h) {
  return h == HeadKind::SigmoidBinary ? "sigmoid-binary" : "softmax-3way";
}

HeadKind parse_head_kind(std::string_view s) {
  if (s == "sigmoid-binary") return HeadKind::SigmoidBinary;
  if (s == "softmax-3way") return HeadKind::Softmax3;
  throw InvalidArgument("model", "unknown head '" + std::string(s) + "'");
}

ModelSpec ModelSpec::paper() {
  ModelSpec s;
  s.height = s.width = 128;
  s.channels = 1;
  s.blocks = {{2, 64}, {2, 128}, {4, 256}, {4, 512}, {4, 512}};
  s.fc_width = 256;
  return s;
}

ModelSpec ModelSpec::desk() {
  ModelSpec s;
  s.height = s.width = 64;
  s.channels = 1;
  s.blocks = {{2, 8}, {2, 16}, {4, 32}, {4, 64}, {4, 64}};
  s.fc_width = 64;
  return s;
}

std::size_t ModelSpec::conv_layer_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.conv_layers;
  return n;
}

Shape ModelSpec::feature_shape() const {
  const std::size_t div = std::size_t{1} << blocks.size();
  return {blocks.back().channels, height / div, width / div};
}

void ModelSpec::validate() const {
  if (blocks.empty()) throw InvalidArgument("model", "model needs at least one block");
  if (height == 0 || width == 0 || channels == 0 || fc_width == 0) {
    throw InvalidArgument("model", "model dims must be positive");
  }
  for (const auto& b : blocks) {
    if (b.conv_layers == 0 || b.channels == 0) {
      throw InvalidArgument("model", "every block needs at least one conv layer and channel");
    }
  }
  const std::size_t div = std::size_t{1} << blocks.size();
  if (height % div != 0 || width % div != 0) {
    throw InvalidArgument("model", "input " + std::to_string(height) + "x" + std::to_string(width) +
                                       " is not divisible by 2^" + std::to_string(blocks.size()));
  }
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json b = nlohmann::json::array();
  for (const auto& blk : blocks) b.push_back({blk.conv_layers, blk.channels});
  return {{"height", height},
          {"width", width},
          {"channels", channels},
          {"blocks", b},
          {"fc_width", fc_width},
          {"head", std::string(head_kind_name(head))},
          {"cam_head", cam_head}};
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    s.height = j.at("height").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    s.channels = j.at("channels").get<std::size_t>();
    for (const auto& b : j.at("blocks")) {
      s.blocks.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>()});
    }
    s.fc_width = j.at("fc_width").get<std::size_t>();
    s.head = parse_head_kind(j.at("head").get<std::string>());
    s.cam_head = j.at("cam_head").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model", std::string("bad model spec JSON: ") + e.what());
  }
  s.validate();
  return s;
}

std::size_t frozen_conv_count(FreezeGroup g, std::size_t conv_layers) {
  switch (g) {
    case FreezeGroup::All: return 0;
    case FreezeGroup::G1: return std::min<std::size_t>(4, conv_layers);
    case FreezeGroup::G2: return std::min<std::size_t>(8, conv_layers);
    case FreezeGroup::G3: return std::min<std::size_t>(12, conv_layers);
    case FreezeGroup::G4: return conv_layers;
  }
  return 0;
}

namespace {

// Uniform fan-in scaling: limit sqrt(gain / fan_in).
Tensor init_uniform(Shape shape, std::size_t fan_in, double gain, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(gain / static_cast<double>(fan_in));
  for (float& v : t.storage()) v = static_cast<float>(rng.uniform(-limit, limit));
  return t;
}

}  // namespace

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
  spec_.validate();
  Rng rng(derive_seed(seed, 0x1417));
  auto add_param = [&](std::string name, Tensor value) {
    Tensor grad(value.shape());
    params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad), true});
  };

  std::size_t in_ch = spec_.channels;
  std::size_t conv_index = 0;
  for (const auto& block : spec_.blocks) {
    for (std::size_t l = 0; l < block.conv_layers; ++l) {
      const std::string base = "conv" + std::to_string(++conv_index);
      stages_.push_back({StageKind::Conv, static_cast<int>(params_.size())});
      add_param(base + ".weight", init_uniform({block.channels, in_ch, 3, 3}, in_ch * 9, 6.0, rng));
      add_param(base + ".bias", Tensor({block.channels}));
      in_ch = block.channels;
    }
    stages_.push_back({StageKind::Pool, -1});
  }
  conv_stage_end_ = stages_.size();

  const Shape fs = spec_.feature_shape();
  std::size_t head_in = 0;
  if (spec_.cam_head) {
    stages_.push_back({StageKind::GlobalAvgPool, -1});
    head_in = fs[0];
  } else {
    stages_.push_back({StageKind::Flatten, -1});
    const std::size_t flat = shape_size(fs);
    stages_.push_back({StageKind::DenseRelu, static_cast<int>(params_.size())});
    add_param("fc.weight", init_uniform({flat, spec_.fc_width}, flat, 6.0, rng));
    add_param("fc.bias", Tensor({spec_.fc_width}));
    head_in = spec_.fc_width;
  }
  stages_.push_back({StageKind::Output, static_cast<int>(params_.size())});
  add_param("out.weight", init_uniform({head_in, spec_.output_units()}, head_in, 3.0, rng));
  add_param("out.bias", Tensor({spec_.output_units()}));
}

Parameter& Model::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("model", "no parameter named '" + std::string(name) + "'");
}

const Parameter& Model::parameter(std::string_view name) const {
  return const_cast<Model*>(this)->parameter(name);
}

std::vector<bool> Model::apply_freeze(FreezeGroup g) {
  const std::size_t frozen = frozen_conv_count(g, spec_.conv_layer_count());
  std::vector<bool> mask;
  std::size_t conv_seen = 0;
  for (const auto& st : stages_) {
    if (st.param < 0) continue;
    bool trainable = true;
    if (st.kind == StageKind::Conv) trainable = ++conv_seen > frozen;
    params_[st.param].trainable = trainable;
    params_[st.param + 1].trainable = trainable;
  }
  for (const auto& p : params_) mask.push_back(p.trainable);
  return mask;
}

std::size_t Model::trainable_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.trainable ? p.value.size() : 0;
  return n;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::size_t Model::frozen_stage_prefix() const {
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const int p = stages_[s].param;
    if (p >= 0 && (params_[p].trainable || params_[p + 1].trainable)) return s;
  }
  return stages_.size();
}

Tensor Model::run_stage(std::size_t s, const Tensor& x, std::vector<std::uint32_t>* argmax) const {
  const Stage& st = stages_[s];
  switch (st.kind) {
    case StageKind::Conv:
      return ops::relu(ops::conv2d(x, params_[st.param].value, params_[st.param + 1].value));
    case StageKind::Pool: {
      auto r = ops::maxpool2(x);
      if (argmax != nullptr) *argmax = std::move(r.argmax);
      return std::move(r.out);
    }
    case StageKind::Flatten:
      return x.reshaped({x.dim(0), x.size() / x.dim(0)});
    case StageKind::GlobalAvgPool:
      return ops::global_avg_pool(x);
    case StageKind::DenseRelu:
      return ops::relu(ops::dense(x, params_[st.param].value, params_[st.param + 1].value));
    case StageKind::Output:
      return ops::dense(x, params_[st.param].value, params_[st.param + 1].value);
  }
  return x;
}

Tensor Model::forward_stages(const Tensor& x, std::size_t begin, std::size_t end) const {
  if (begin > end || end > stages_.size()) throw InvalidArgument("model", "bad stage range");
  if (begin == 0) {
    const Shape want{spec_.channels, spec_.height, spec_.width};
    if (x.rank() != 4 || Shape(x.shape().begin() + 1, x.shape().end()) != want) {
      throw InvalidArgument("model", "input shape " + shape_string(x.shape()) + " does not match [N," +
                                         std::to_string(spec_.channels) + "," +
                                         std::to_string(spec_.height) + "," +
                                         std::to_string(spec_.width) + "]");
    }
  }
  Tensor cur = x;
  for (std::size_t s = begin; s < end; ++s) cur = run_stage(s, cur, nullptr);
  return cur;
}

Tensor Model::logits(const Tensor& x, std::size_t begin) const {
  Tensor z = forward_stages(x, begin, stages_.size());
  require_finite(z, "model logits");
  return z;
}

Tensor Model::activate(const Tensor& z) const {
  return spec_.head == HeadKind::SigmoidBinary ? ops::sigmoid(z) : ops::softmax(z);
}

Tensor Model::predict(const Tensor& x, std::size_t begin) const { return activate(logits(x, begin)); }

Tensor Model::features(const Tensor& x) const { return forward_stages(x, 0, conv_stage_end_); }

double Model::loss(const Tensor& prob, std::span<const int> labels) const {
  return spec_.head == HeadKind::SigmoidBinary ? ops::bce_loss(prob, labels)
                                               : ops::cce_loss(prob, labels);
}

void Model::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0f);
}

double Model::accumulate_gradients(const Tensor& x, std::size_t begin, std::span<const int> labels,
                                   Tensor* input_grad) {
  const std::size_t end = stages_.size();
  // Lowest stage whose input gradient is still needed.
  std::size_t stop = end;
  if (input_grad != nullptr) {
    stop = begin;
  } else {
    for (std::size_t s = begin; s < end; ++s) {
      const int p = stages_[s].param;
      if (p >= 0 && (params_[p].trainable || params_[p + 1].trainable)) {
        stop = s;
        break;
      }
    }
  }

  // Inputs of every stage from `begin`, plus pool routing.
  std::vector<Tensor> inputs;
  std::vector<std::vector<std::uint32_t>> argmax(end);
  inputs.reserve(end - begin + 1);
  inputs.push_back(x);
  for (std::size_t s = begin; s < end; ++s) {
    inputs.push_back(run_stage(s, inputs.back(), &argmax[s]));
  }
  const Tensor& z = inputs.back();
  require_finite(z, "training logits");
  const Tensor prob = activate(z);
  const double value = loss(prob, labels);

  Tensor grad = spec_.head == HeadKind::SigmoidBinary ? ops::sigmoid_bce_logit_grad(prob, labels)
                                                      : ops::softmax_cce_logit_grad(prob, labels);
  for (std::size_t s = end; s-- > begin;) {
    if (s < stop) break;
    const Stage& st = stages_[s];
    const Tensor& in = inputs[s - begin];
    const Tensor& out = inputs[s - begin + 1];
    const bool need_dx = s > stop || input_grad != nullptr;
    Tensor dx;
    Parameter* w = st.param >= 0 ? &params_[st.param] : nullptr;
    Parameter* b = st.param >= 0 ? &params_[st.param + 1] : nullptr;
    switch (st.kind) {
      case StageKind::Conv: {
        const Tensor dz = ops::relu_backward(out, grad);
        ops::conv2d_backward(in, w->value, dz, need_dx ? &dx : nullptr,
                             w->trainable ? &w->grad : nullptr, b->trainable ? &b->grad : nullptr);
        break;
      }
      case StageKind::Pool:
        if (need_dx) dx = ops::maxpool2_backward(grad, argmax[s], in.shape());
        break;
      case StageKind::Flatten:
        if (need_dx) dx = grad.reshaped(in.shape());
        break;
      case StageKind::GlobalAvgPool:
        if (need_dx) dx = ops::global_avg_pool_backward(grad, in.shape());
        break;
      case StageKind::DenseRelu: {
        const Tensor dz = ops::relu_backward(out, grad);
        ops::dense_backward(in, w->value, dz, need_dx ? &dx : nullptr,
                            w->trainable ? &w->grad : nullptr, b->trainable ? &b->grad : nullptr);
        break;
      }
      case StageKind::Output:
        ops::dense_backward(in, w->value, grad, need_dx ? &dx : nullptr,
                            w->trainable ? &w->grad : nullptr, b->trainable ? &b->grad : nullptr);
        break;
    }
    if (!need_dx) break;
    grad = std::move(dx);
  }
  if (input_grad != nullptr) *input_grad = std::move(grad);
  return value;
}

}  // namespace ftbrain

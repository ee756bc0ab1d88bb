#pragma once

#include <cstdint>

#include "ftbrain/tensor.hpp"

namespace ftbrain {

struct AdamConfig {
  double lr = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter Adam moments. `m` and `v` take the parameter's shape on
// construction.
template <typename T>
struct BasicAdamState {
  BasicAdamState() = default;
  BasicAdamState(const Shape& shape, AdamConfig cfg) : m(shape), v(shape), config(cfg) {}

  BasicTensor<T> m;
  BasicTensor<T> v;
  std::uint64_t t = 0;
  AdamConfig config;
};

using AdamState = BasicAdamState<float>;

// Bias-corrected Adam update of `param` in place; increments state.t.
template <typename T>
void adam_step(BasicTensor<T>& param, const BasicTensor<T>& grad, BasicAdamState<T>& state);

}  // namespace ftbrain

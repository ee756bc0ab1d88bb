#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ftbrain/tensor.hpp"

// Forward and backward kernels for the layer types of a VGG-style network.
// Every kernel is instantiated for float (training) and double (gradient
// checks). Backward kernels *accumulate* into weight and bias gradients and
// *overwrite* the input gradient, so a caller can sum weight gradients over
// several calls.
namespace ftbrain::ops {

// Probability clamp applied inside the log-likelihood losses.
inline constexpr double kProbClip = 1e-7;

// 3x3 "same" cross-correlation, stride 1, zero padding 1.
// x: [N,C,H,W], w: [K,C,3,3], b: [K] -> [N,K,H,W].
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);

// Any of dx, dw, db may be null to skip that gradient.
template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db);

template <typename T>
struct PoolResult {
  BasicTensor<T> out;
  // Flat index into the input for each output element.
  std::vector<std::uint32_t> argmax;
};

// 2x2 max-pool with stride 2. Ties resolve to the first offset in
// (row, col) order.
template <typename T>
PoolResult<T> maxpool2(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& dy, std::span<const std::uint32_t> argmax,
                                 const Shape& input_shape);

// x: [N,D], w: [D,U], b: [U] -> [N,U].
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);

template <typename T>
void dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                    BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);
// `y` is the forward output; the derivative at 0 is taken as 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy);

// Row-wise over the last axis of a [N,U] tensor.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy);

// [N,C,H,W] -> [N,C].
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> global_avg_pool_backward(const BasicTensor<T>& dy, const Shape& input_shape);

// Mean binary cross-entropy. `prob` holds N probabilities (shape [N] or
// [N,1]); labels are 0 or 1.
template <typename T>
T bce_loss(const BasicTensor<T>& prob, std::span<const int> labels);
// Gradient w.r.t. `prob`; zero where the clamp is active.
template <typename T>
BasicTensor<T> bce_loss_backward(const BasicTensor<T>& prob, std::span<const int> labels);

// Mean categorical cross-entropy over rows of a [N,U] probability tensor.
template <typename T>
T cce_loss(const BasicTensor<T>& prob, std::span<const int> labels);
template <typename T>
BasicTensor<T> cce_loss_backward(const BasicTensor<T>& prob, std::span<const int> labels);

// Gradient of the mean loss w.r.t. the pre-activation logits for the fused
// sigmoid+BCE and softmax+CCE heads: (p - onehot(label)) / N. Used in
// training because it stays informative when the clamp saturates.
template <typename T>
BasicTensor<T> sigmoid_bce_logit_grad(const BasicTensor<T>& prob, std::span<const int> labels);
template <typename T>
BasicTensor<T> softmax_cce_logit_grad(const BasicTensor<T>& prob, std::span<const int> labels);

}  // namespace ftbrain::ops

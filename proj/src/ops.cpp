#include "ftbrain/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace ftbrain {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument("numcore", msg);
}

template <typename T>
void check_conv_args(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  require(x.rank() == 4, "conv2d input must be [N,C,H,W], got " + shape_string(x.shape()));
  require(w.rank() == 4, "conv2d kernels must be [K,C,3,3], got " + shape_string(w.shape()));
  require(w.dim(2) == 3 && w.dim(3) == 3,
          "conv2d kernels must be 3x3, got " + shape_string(w.shape()));
  require(w.dim(1) == x.dim(1), "conv2d channel mismatch: input " + shape_string(x.shape()) +
                                    " vs kernels " + shape_string(w.shape()));
  require(b.size() == w.dim(0), "conv2d bias length must equal kernel count");
}

// Unfolds one [C,H,W] image into rows (c*9 + ky*3 + kx) of a column matrix
// whose row stride is `ld`; the image occupies columns [offset, offset+H*W).
template <typename T>
void im2col3x3(const T* img, std::size_t C, std::size_t H, std::size_t W, T* cols, std::size_t ld,
               std::size_t offset) {
  for (std::size_t c = 0; c < C; ++c) {
    const T* plane = img + c * H * W;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* row = cols + (c * 9 + ky * 3 + kx) * ld + offset;
        for (std::size_t h = 0; h < H; ++h) {
          T* dst = row + h * W;
          const std::ptrdiff_t sh = static_cast<std::ptrdiff_t>(h + ky) - 1;
          if (sh < 0 || sh >= static_cast<std::ptrdiff_t>(H)) {
            std::fill(dst, dst + W, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(sh) * W;
          if (kx == 0) {
            dst[0] = T{0};
            std::copy(src, src + W - 1, dst + 1);
          } else if (kx == 1) {
            std::copy(src, src + W, dst);
          } else {
            std::copy(src + 1, src + W, dst);
            dst[W - 1] = T{0};
          }
        }
      }
    }
  }
}

// Adjoint of im2col3x3: scatters column gradients back onto a zeroed image.
template <typename T>
void col2im3x3(const T* cols, std::size_t C, std::size_t H, std::size_t W, std::size_t ld,
               std::size_t offset, T* img) {
  for (std::size_t c = 0; c < C; ++c) {
    T* plane = img + c * H * W;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* row = cols + (c * 9 + ky * 3 + kx) * ld + offset;
        for (std::size_t h = 0; h < H; ++h) {
          const std::ptrdiff_t sh = static_cast<std::ptrdiff_t>(h + ky) - 1;
          if (sh < 0 || sh >= static_cast<std::ptrdiff_t>(H)) continue;
          const T* src = row + h * W;
          T* dst = plane + static_cast<std::size_t>(sh) * W;
          if (kx == 0) {
            for (std::size_t i = 1; i < W; ++i) dst[i - 1] += src[i];
          } else if (kx == 1) {
            for (std::size_t i = 0; i < W; ++i) dst[i] += src[i];
          } else {
            for (std::size_t i = 0; i + 1 < W; ++i) dst[i + 1] += src[i];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T> unfold_batch(const BasicTensor<T>& x) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t hw = H * W, ld = N * hw;
  std::vector<T> cols(C * 9 * ld);
  for (std::size_t n = 0; n < N; ++n) {
    im2col3x3(x.data() + n * C * hw, C, H, W, cols.data(), ld, n * hw);
  }
  return cols;
}

template <typename T>
void check_labels(std::span<const int> labels, std::size_t n, int classes) {
  require(labels.size() == n, "label count " + std::to_string(labels.size()) +
                                  " does not match batch size " + std::to_string(n));
  for (int l : labels) {
    require(l >= 0 && l < classes, "label " + std::to_string(l) + " out of range [0," +
                                       std::to_string(classes) + ")");
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  check_conv_args(x, w, b);
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3), K = w.dim(0);
  const std::size_t hw = H * W, ld = N * hw;
  std::vector<T> cols = unfold_batch(x);
  RowMat<T> y(K, ld);
  y.noalias() = CMapMat<T>(w.data(), K, C * 9) * CMapMat<T>(cols.data(), C * 9, ld);
  BasicTensor<T> out({N, K, H, W});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      const T* src = y.data() + k * ld + n * hw;
      T* dst = out.data() + (n * K + k) * hw;
      const T bias = b[k];
      for (std::size_t p = 0; p < hw; ++p) dst[p] = src[p] + bias;
    }
  }
  return out;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3), K = w.dim(0);
  require(dy.shape() == Shape({N, K, H, W}), "conv2d_backward: gradient shape mismatch");
  const std::size_t hw = H * W, ld = N * hw;

  RowMat<T> g(K, ld);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      std::copy_n(dy.data() + (n * K + k) * hw, hw, g.data() + k * ld + n * hw);
    }
  }
  if (db != nullptr) {
    require(db->size() == K, "conv2d_backward: bias gradient shape mismatch");
    for (std::size_t k = 0; k < K; ++k) {
      T s{0};
      const T* row = g.data() + k * ld;
      for (std::size_t p = 0; p < ld; ++p) s += row[p];
      (*db)[k] += s;
    }
  }
  if (dw == nullptr && dx == nullptr) return;

  if (dw != nullptr) {
    require(dw->shape() == w.shape(), "conv2d_backward: kernel gradient shape mismatch");
    std::vector<T> cols = unfold_batch(x);
    MapMat<T>(dw->data(), K, C * 9).noalias() += g * CMapMat<T>(cols.data(), C * 9, ld).transpose();
  }
  if (dx != nullptr) {
    RowMat<T> dcols(C * 9, ld);
    dcols.noalias() = CMapMat<T>(w.data(), K, C * 9).transpose() * g;
    *dx = BasicTensor<T>(x.shape());
    for (std::size_t n = 0; n < N; ++n) {
      col2im3x3(dcols.data(), C, H, W, ld, n * hw, dx->data() + n * C * hw);
    }
  }
}

template <typename T>
PoolResult<T> maxpool2(const BasicTensor<T>& x) {
  require(x.rank() == 4, "maxpool2 input must be [N,C,H,W]");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0,
          "maxpool2 needs even spatial dims, got " + shape_string(x.shape()));
  const std::size_t oh = H / 2, ow = W / 2;
  PoolResult<T> r{BasicTensor<T>({N, C, oh, ow}), std::vector<std::uint32_t>(N * C * oh * ow)};
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < N * C; ++plane) {
    const std::size_t base = plane * H * W;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j, ++o) {
        const std::size_t cand[4] = {base + 2 * i * W + 2 * j, base + 2 * i * W + 2 * j + 1,
                                     base + (2 * i + 1) * W + 2 * j,
                                     base + (2 * i + 1) * W + 2 * j + 1};
        std::size_t best = cand[0];
        for (int q = 1; q < 4; ++q) {
          if (x[cand[q]] > x[best]) best = cand[q];
        }
        r.out[o] = x[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& dy, std::span<const std::uint32_t> argmax,
                                 const Shape& input_shape) {
  require(argmax.size() == dy.size(), "maxpool2_backward: argmax map size mismatch");
  BasicTensor<T> dx(input_shape);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
  return dx;
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  require(x.rank() == 2 && w.rank() == 2, "dense expects [N,D] input and [D,U] weights");
  require(x.dim(1) == w.dim(0), "dense inner dimension mismatch: " + shape_string(x.shape()) +
                                    " vs " + shape_string(w.shape()));
  require(b.size() == w.dim(1), "dense bias length must equal output width");
  const std::size_t N = x.dim(0), D = x.dim(1), U = w.dim(1);
  BasicTensor<T> out({N, U});
  MapMat<T> y(out.data(), N, U);
  y.noalias() = CMapMat<T>(x.data(), N, D) * CMapMat<T>(w.data(), D, U);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t u = 0; u < U; ++u) y(n, u) += b[u];
  }
  return out;
}

template <typename T>
void dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                    BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db) {
  const std::size_t N = x.dim(0), D = x.dim(1), U = w.dim(1);
  require(dy.shape() == Shape({N, U}), "dense_backward: gradient shape mismatch");
  CMapMat<T> g(dy.data(), N, U);
  if (db != nullptr) {
    for (std::size_t u = 0; u < U; ++u) {
      T s{0};
      for (std::size_t n = 0; n < N; ++n) s += g(n, u);
      (*db)[u] += s;
    }
  }
  if (dw != nullptr) {
    MapMat<T>(dw->data(), D, U).noalias() += CMapMat<T>(x.data(), N, D).transpose() * g;
  }
  if (dx != nullptr) {
    *dx = BasicTensor<T>({N, D});
    MapMat<T>(dx->data(), N, D).noalias() = g * CMapMat<T>(w.data(), D, U).transpose();
  }
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.storage()) v = v > T{0} ? v : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy) {
  BasicTensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(y[i] > T{0})) dx[i] = T{0};
  }
  return dx;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.storage()) {
    // Branch keeps exp() from overflowing for large |v|.
    if (v >= T{0}) {
      v = T{1} / (T{1} + std::exp(-v));
    } else {
      const T e = std::exp(v);
      v = e / (T{1} + e);
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy) {
  BasicTensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (T{1} - y[i]);
  return dx;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x) {
  require(x.rank() == 2, "softmax expects [N,U]");
  const std::size_t N = x.dim(0), U = x.dim(1);
  BasicTensor<T> y(x.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const T* in = x.data() + n * U;
    T* out = y.data() + n * U;
    const T m = *std::max_element(in, in + U);
    T s{0};
    for (std::size_t u = 0; u < U; ++u) {
      out[u] = std::exp(in[u] - m);
      s += out[u];
    }
    for (std::size_t u = 0; u < U; ++u) out[u] /= s;
  }
  return y;
}

template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy) {
  const std::size_t N = y.dim(0), U = y.dim(1);
  BasicTensor<T> dx(y.shape());
  for (std::size_t n = 0; n < N; ++n) {
    T dot{0};
    for (std::size_t u = 0; u < U; ++u) dot += dy[n * U + u] * y[n * U + u];
    for (std::size_t u = 0; u < U; ++u) dx[n * U + u] = y[n * U + u] * (dy[n * U + u] - dot);
  }
  return dx;
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  require(x.rank() == 4, "global_avg_pool expects [N,C,H,W]");
  const std::size_t N = x.dim(0), C = x.dim(1), hw = x.dim(2) * x.dim(3);
  BasicTensor<T> y({N, C});
  for (std::size_t i = 0; i < N * C; ++i) {
    T s{0};
    for (std::size_t p = 0; p < hw; ++p) s += x[i * hw + p];
    y[i] = s / static_cast<T>(hw);
  }
  return y;
}

template <typename T>
BasicTensor<T> global_avg_pool_backward(const BasicTensor<T>& dy, const Shape& input_shape) {
  const std::size_t hw = input_shape[2] * input_shape[3];
  BasicTensor<T> dx(input_shape);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    const T g = dy[i] / static_cast<T>(hw);
    for (std::size_t p = 0; p < hw; ++p) dx[i * hw + p] = g;
  }
  return dx;
}

template <typename T>
T bce_loss(const BasicTensor<T>& prob, std::span<const int> labels) {
  check_labels<T>(labels, prob.size(), 2);
  const T lo = static_cast<T>(kProbClip), hi = T{1} - static_cast<T>(kProbClip);
  double total = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const T p = std::clamp(prob[i], lo, hi);
    total -= labels[i] == 1 ? std::log(static_cast<double>(p)) : std::log1p(-static_cast<double>(p));
  }
  return static_cast<T>(total / static_cast<double>(prob.size()));
}

template <typename T>
BasicTensor<T> bce_loss_backward(const BasicTensor<T>& prob, std::span<const int> labels) {
  check_labels<T>(labels, prob.size(), 2);
  const T lo = static_cast<T>(kProbClip), hi = T{1} - static_cast<T>(kProbClip);
  const T inv_n = T{1} / static_cast<T>(prob.size());
  BasicTensor<T> g(prob.shape());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const T p = prob[i];
    if (p <= lo || p >= hi) continue;
    g[i] = (labels[i] == 1 ? -T{1} / p : T{1} / (T{1} - p)) * inv_n;
  }
  return g;
}

template <typename T>
T cce_loss(const BasicTensor<T>& prob, std::span<const int> labels) {
  require(prob.rank() == 2, "cce_loss expects [N,U] probabilities");
  const std::size_t N = prob.dim(0), U = prob.dim(1);
  check_labels<T>(labels, N, static_cast<int>(U));
  const T lo = static_cast<T>(kProbClip), hi = T{1} - static_cast<T>(kProbClip);
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    total -= std::log(static_cast<double>(std::clamp(prob[n * U + labels[n]], lo, hi)));
  }
  return static_cast<T>(total / static_cast<double>(N));
}

template <typename T>
BasicTensor<T> cce_loss_backward(const BasicTensor<T>& prob, std::span<const int> labels) {
  require(prob.rank() == 2, "cce_loss expects [N,U] probabilities");
  const std::size_t N = prob.dim(0), U = prob.dim(1);
  check_labels<T>(labels, N, static_cast<int>(U));
  const T lo = static_cast<T>(kProbClip), hi = T{1} - static_cast<T>(kProbClip);
  BasicTensor<T> g(prob.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const T p = prob[n * U + labels[n]];
    if (p <= lo || p >= hi) continue;
    g[n * U + labels[n]] = -T{1} / (p * static_cast<T>(N));
  }
  return g;
}

template <typename T>
BasicTensor<T> sigmoid_bce_logit_grad(const BasicTensor<T>& prob, std::span<const int> labels) {
  check_labels<T>(labels, prob.size(), 2);
  const T inv_n = T{1} / static_cast<T>(prob.size());
  BasicTensor<T> g(prob.shape());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    g[i] = (prob[i] - static_cast<T>(labels[i])) * inv_n;
  }
  return g;
}

template <typename T>
BasicTensor<T> softmax_cce_logit_grad(const BasicTensor<T>& prob, std::span<const int> labels) {
  require(prob.rank() == 2, "softmax_cce_logit_grad expects [N,U] probabilities");
  const std::size_t N = prob.dim(0), U = prob.dim(1);
  check_labels<T>(labels, N, static_cast<int>(U));
  const T inv_n = T{1} / static_cast<T>(N);
  BasicTensor<T> g = prob;
  for (std::size_t n = 0; n < N; ++n) {
    g[n * U + labels[n]] -= T{1};
    for (std::size_t u = 0; u < U; ++u) g[n * U + u] *= inv_n;
  }
  return g;
}

#define FTBRAIN_INSTANTIATE_OPS(T)                                                              \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                 const BasicTensor<T>&);                                        \
  template void conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,        \
                                BasicTensor<T>*);                                               \
  template PoolResult<T> maxpool2(const BasicTensor<T>&);                                       \
  template BasicTensor<T> maxpool2_backward(const BasicTensor<T>&,                              \
                                            std::span<const std::uint32_t>, const Shape&);      \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                const BasicTensor<T>&);                                         \
  template void dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                               const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,         \
                               BasicTensor<T>*);                                                \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                          \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                       \
  template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                       \
  template BasicTensor<T> softmax_backward(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                               \
  template BasicTensor<T> global_avg_pool_backward(const BasicTensor<T>&, const Shape&);        \
  template T bce_loss(const BasicTensor<T>&, std::span<const int>);                             \
  template BasicTensor<T> bce_loss_backward(const BasicTensor<T>&, std::span<const int>);       \
  template T cce_loss(const BasicTensor<T>&, std::span<const int>);                             \
  template BasicTensor<T> cce_loss_backward(const BasicTensor<T>&, std::span<const int>);       \
  template BasicTensor<T> sigmoid_bce_logit_grad(const BasicTensor<T>&, std::span<const int>);  \
  template BasicTensor<T> softmax_cce_logit_grad(const BasicTensor<T>&, std::span<const int>);

FTBRAIN_INSTANTIATE_OPS(float)
FTBRAIN_INSTANTIATE_OPS(double)

#undef FTBRAIN_INSTANTIATE_OPS

}  // namespace ops
}  // namespace ftbrain

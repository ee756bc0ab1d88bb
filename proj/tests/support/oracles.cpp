#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <random>

#include "ftbrain/gradcheck.hpp"
#include "ftbrain/ops.hpp"

namespace oracle {

double entropy_bits(const ftbrain::Image& img) {
  std::map<int, long> counts;
  for (float v : img.pixels) {
    int bin = static_cast<int>(std::floor(static_cast<double>(v) * 256.0));
    bin = std::max(0, std::min(255, bin));
    counts[bin]++;
  }
  std::multiset<long> by_count;
  for (const auto& [bin, c] : counts) by_count.insert(c);
  const double n = static_cast<double>(img.pixels.size());
  double h = 0.0;
  for (long c : by_count) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h <= 0.0 ? 0.0 : h;
}

std::vector<std::size_t> rank_by_scan(const std::vector<double>& entropies) {
  std::vector<bool> used(entropies.size(), false);
  std::vector<std::size_t> order;
  for (std::size_t round = 0; round < entropies.size(); ++round) {
    std::size_t best = entropies.size();
    for (std::size_t i = 0; i < entropies.size(); ++i) {
      if (used[i]) continue;
      if (best == entropies.size() || entropies[i] > entropies[best]) best = i;
    }
    used[best] = true;
    order.push_back(best);
  }
  return order;
}

long long mk_pairs(std::span<const double> x) {
  long long s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (x[j] > x[i]) ++s;
      if (x[j] < x[i]) --s;
    }
  }
  return s;
}

namespace {

using T64 = ftbrain::Tensor64;
using ftbrain::Shape;

struct Gen {
  std::mt19937_64 eng;
  double uni(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  T64 tensor(const Shape& s, double lo = -1.0, double hi = 1.0) {
    T64 t(s);
    for (auto& v : t.storage()) v = uni(lo, hi);
    return t;
  }
};

std::vector<double> flat(const T64& t) { return {t.storage().begin(), t.storage().end()}; }

T64 from(std::span<const double> v, const Shape& s) {
  T64 t(s);
  std::copy(v.begin(), v.end(), t.storage().begin());
  return t;
}

double dot(const T64& a, const T64& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Error of d<r, f(x)>/dx for a unary op with backward `back(x, y, r)`.
double unary(const T64& x, const T64& r, const std::function<T64(const T64&)>& f,
             const std::function<T64(const T64&, const T64&, const T64&)>& back) {
  const T64 g = back(x, f(x), r);
  const Shape s = x.shape();
  const auto fn = [&](std::span<const double> p) { return dot(f(from(p, s)), r); };
  const auto px = flat(x);
  return ftbrain::grad_check(fn, px, flat(g));
}

}  // namespace

std::vector<OpError> op_gradient_errors(std::uint64_t seed) {
  namespace ops = ftbrain::ops;
  Gen g{std::mt19937_64(seed)};
  std::vector<OpError> out;

  {  // conv2d: input, kernels, bias
    const T64 x = g.tensor({2, 3, 5, 6}), w = g.tensor({4, 3, 3, 3}), b = g.tensor({4});
    const T64 r = g.tensor({2, 4, 5, 6});
    T64 dx(x.shape()), dw(w.shape()), db(b.shape());
    ops::conv2d_backward(x, w, r, &dx, &dw, &db);
    const auto fx = [&](std::span<const double> p) { return dot(ops::conv2d(from(p, x.shape()), w, b), r); };
    const auto fw = [&](std::span<const double> p) { return dot(ops::conv2d(x, from(p, w.shape()), b), r); };
    const auto fb = [&](std::span<const double> p) { return dot(ops::conv2d(x, w, from(p, b.shape())), r); };
    out.push_back({"conv2d.input", ftbrain::grad_check(fx, flat(x), flat(dx))});
    out.push_back({"conv2d.kernel", ftbrain::grad_check(fw, flat(w), flat(dw))});
    out.push_back({"conv2d.bias", ftbrain::grad_check(fb, flat(b), flat(db))});
  }
  {  // dense
    const T64 x = g.tensor({3, 5}), w = g.tensor({5, 4}), b = g.tensor({4}), r = g.tensor({3, 4});
    T64 dx(x.shape()), dw(w.shape()), db(b.shape());
    ops::dense_backward(x, w, r, &dx, &dw, &db);
    const auto fx = [&](std::span<const double> p) { return dot(ops::dense(from(p, x.shape()), w, b), r); };
    const auto fw = [&](std::span<const double> p) { return dot(ops::dense(x, from(p, w.shape()), b), r); };
    const auto fb = [&](std::span<const double> p) { return dot(ops::dense(x, w, from(p, b.shape())), r); };
    out.push_back({"dense.input", ftbrain::grad_check(fx, flat(x), flat(dx))});
    out.push_back({"dense.weight", ftbrain::grad_check(fw, flat(w), flat(dw))});
    out.push_back({"dense.bias", ftbrain::grad_check(fb, flat(b), flat(db))});
  }
  {  // maxpool2 on a point without near-ties: a shuffled grid of distinct values
    const Shape s{2, 2, 6, 8};
    T64 x(s);
    std::vector<double> vals(x.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.05 * static_cast<double>(i) + g.uni(0.0, 0.01);
    std::shuffle(vals.begin(), vals.end(), g.eng);
    std::copy(vals.begin(), vals.end(), x.storage().begin());
    const T64 r = g.tensor({2, 2, 3, 4});
    out.push_back({"maxpool2", unary(x, r, [](const T64& a) { return ops::maxpool2(a).out; },
                                     [](const T64& a, const T64&, const T64& dy) {
                                       return ops::maxpool2_backward(dy, ops::maxpool2(a).argmax, a.shape());
                                     })});
  }
  {  // relu away from the kink
    T64 x = g.tensor({4, 7});
    for (auto& v : x.storage()) v = (v < 0 ? -1.0 : 1.0) * (0.05 + std::abs(v));
    const T64 r = g.tensor({4, 7});
    out.push_back({"relu", unary(x, r, [](const T64& a) { return ops::relu(a); },
                                 [](const T64&, const T64& y, const T64& dy) { return ops::relu_backward(y, dy); })});
  }
  {
    const T64 x = g.tensor({4, 7}, -4.0, 4.0), r = g.tensor({4, 7});
    out.push_back({"sigmoid", unary(x, r, [](const T64& a) { return ops::sigmoid(a); },
                                    [](const T64&, const T64& y, const T64& dy) {
                                      return ops::sigmoid_backward(y, dy);
                                    })});
  }
  {
    const T64 x = g.tensor({4, 3}, -3.0, 3.0), r = g.tensor({4, 3});
    out.push_back({"softmax", unary(x, r, [](const T64& a) { return ops::softmax(a); },
                                    [](const T64&, const T64& y, const T64& dy) {
                                      return ops::softmax_backward(y, dy);
                                    })});
  }
  {
    const T64 x = g.tensor({2, 3, 4, 4}), r = g.tensor({2, 3});
    out.push_back({"global_avg_pool", unary(x, r, [](const T64& a) { return ops::global_avg_pool(a); },
                                            [](const T64& a, const T64&, const T64& dy) {
                                              return ops::global_avg_pool_backward(dy, a.shape());
                                            })});
  }
  {  // losses as functions of the probabilities
    const T64 p = g.tensor({6}, 0.05, 0.95);
    std::vector<int> y(6);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(g.eng() % 2);
    const auto f = [&](std::span<const double> v) { return ops::bce_loss(from(v, p.shape()), y); };
    out.push_back({"bce_loss", ftbrain::grad_check(f, flat(p), flat(ops::bce_loss_backward(p, y)))});

    const T64 q = g.tensor({5, 3}, 0.05, 0.9);
    std::vector<int> c(5);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<int>(g.eng() % 3);
    const auto fc = [&](std::span<const double> v) { return ops::cce_loss(from(v, q.shape()), c); };
    out.push_back({"cce_loss", ftbrain::grad_check(fc, flat(q), flat(ops::cce_loss_backward(q, c)))});

    // Fused head gradients w.r.t. logits.
    const T64 z = g.tensor({6, 1}, -3.0, 3.0);
    const auto fz = [&](std::span<const double> v) { return ops::bce_loss(ops::sigmoid(from(v, z.shape())), y); };
    out.push_back({"sigmoid+bce", ftbrain::grad_check(fz, flat(z), flat(ops::sigmoid_bce_logit_grad(ops::sigmoid(z), y)))});
    const T64 zc = g.tensor({5, 3}, -3.0, 3.0);
    const auto fzc = [&](std::span<const double> v) { return ops::cce_loss(ops::softmax(from(v, zc.shape())), c); };
    out.push_back({"softmax+cce",
                   ftbrain::grad_check(fzc, flat(zc), flat(ops::softmax_cce_logit_grad(ops::softmax(zc), c)))});
  }
  return out;
}

}  // namespace oracle

#include "ftbrain/adam.hpp"

#include <cmath>

namespace ftbrain {

template <typename T>
void adam_step(BasicTensor<T>& param, const BasicTensor<T>& grad, BasicAdamState<T>& state) {
  if (param.shape() != grad.shape() || state.m.shape() != param.shape() ||
      state.v.shape() != param.shape()) {
    throw InvalidArgument("numcore", "adam_step shape mismatch: param " +
                                         shape_string(param.shape()) + ", grad " +
                                         shape_string(grad.shape()));
  }
  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T corr1 = static_cast<T>(1.0 - std::pow(c.beta1, t));
  const T corr2 = static_cast<T>(1.0 - std::pow(c.beta2, t));
  const T lr = static_cast<T>(c.lr), eps = static_cast<T>(c.epsilon);

  T* p = param.data();
  T* m = state.m.data();
  T* v = state.v.data();
  const T* g = grad.data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (T{1} - b1) * g[i];
    v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
    const T mhat = m[i] / corr1;
    const T vhat = v[i] / corr2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template void adam_step(BasicTensor<float>&, const BasicTensor<float>&, BasicAdamState<float>&);
template void adam_step(BasicTensor<double>&, const BasicTensor<double>&, BasicAdamState<double>&);

}  // namespace ftbrain

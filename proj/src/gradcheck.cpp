#include "ftbrain/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ftbrain/error.hpp"

namespace ftbrain {

std::vector<double> numeric_gradient(const ScalarFn& f, std::span<const double> point, double eps) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double up = f(x);
    x[i] = orig - eps;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

double grad_check(const ScalarFn& f, std::span<const double> point,
                  std::span<const double> analytic, double eps, double floor) {
  if (analytic.size() != point.size()) {
    throw InvalidArgument("numcore", "grad_check: analytic gradient length mismatch");
  }
  const std::vector<double> numeric = numeric_gradient(f, point, eps);
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace ftbrain

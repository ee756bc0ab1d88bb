#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ftbrain {

// Scalar function of a flat parameter vector.
using ScalarFn = std::function<double(std::span<const double>)>;

// Component-wise comparison of an analytic gradient against central finite
// differences (f(x+eps) - f(x-eps)) / 2eps. The relative error of a component
// is |a - n| / max(|a|, |n|, floor); the maximum over components is returned.
// The floor keeps components that are zero up to rounding from dominating.
double grad_check(const ScalarFn& f, std::span<const double> point,
                  std::span<const double> analytic, double eps = 1e-5, double floor = 1e-6);

// Central finite-difference gradient alone.
std::vector<double> numeric_gradient(const ScalarFn& f, std::span<const double> point,
                                     double eps = 1e-5);

}  // namespace ftbrain

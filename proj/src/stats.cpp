#include "ftbrain/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ftbrain/error.hpp"

namespace ftbrain {

TrendResult mann_kendall(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 3) throw InvalidArgument("stats", "mann_kendall needs at least 3 values");
  for (double x : series) {
    if (!std::isfinite(x)) throw InvalidArgument("stats", "mann_kendall input must be finite");
  }
  TrendResult r;
  r.n = n;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      r.s += (series[j] > series[i]) - (series[j] < series[i]);
    }
  }

  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
    i = j;
  }
  const double nd = static_cast<double>(n);
  r.variance = std::max(0.0, (nd * (nd - 1.0) * (2.0 * nd + 5.0) - tie_term) / 18.0);

  if (r.s == 0 || r.variance == 0.0) {
    r.z = 0.0;
    r.p_two_sided = 1.0;
    return r;
  }
  const double s = static_cast<double>(r.s);
  r.z = (s > 0 ? s - 1.0 : s + 1.0) / std::sqrt(r.variance);
  r.p_two_sided = std::clamp(std::erfc(std::abs(r.z) / std::sqrt(2.0)), 0.0, 1.0);
  return r;
}

}  // namespace ftbrain

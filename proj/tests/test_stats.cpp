#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ftbrain/error.hpp"
#include "ftbrain/stats.hpp"
#include "support/oracles.hpp"

using namespace ftbrain;

TEST_CASE("strictly increasing length-5 series") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const TrendResult t = mann_kendall(x);
  CHECK(t.s == 10);
  CHECK(t.n == 5);
  CHECK(t.variance == doctest::Approx(50.0 / 3.0));
  // Closed form: z = (S - 1) / sqrt(var), p = erfc(|z| / sqrt 2).
  const double z = 9.0 / std::sqrt(50.0 / 3.0);
  CHECK(t.z == doctest::Approx(z));
  CHECK(t.z == doctest::Approx(2.2045).epsilon(1e-4));
  CHECK(t.p_two_sided == doctest::Approx(std::erfc(z / std::sqrt(2.0))));
  CHECK(std::abs(t.p_two_sided - 0.0275) < 0.0005);
}

TEST_CASE("constant and reversed series") {
  const std::vector<double> c{3, 3, 3, 3};
  const TrendResult tc = mann_kendall(c);
  CHECK(tc.s == 0);
  CHECK(tc.z == 0.0);
  CHECK(tc.p_two_sided == 1.0);

  const std::vector<double> down{5, 4, 3, 2, 1};
  const TrendResult td = mann_kendall(down);
  CHECK(td.s == -10);
  CHECK(td.p_two_sided == mann_kendall(std::vector<double>{1, 2, 3, 4, 5}).p_two_sided);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(mann_kendall(std::vector<double>{1, 2}), InvalidArgument);
  CHECK_THROWS_AS(mann_kendall(std::vector<double>{1, NAN, 2}), InvalidArgument);
}

TEST_CASE("tie-corrected variance") {
  // Ties {2,2} and {4,4,4}: var = [n(n-1)(2n+5) - sum t(t-1)(2t+5)] / 18.
  const std::vector<double> x{1, 2, 2, 4, 4, 4, 7};
  const double n = 7;
  const double expect = (n * (n - 1) * (2 * n + 5) - 2 * 1 * 9 - 3 * 2 * 11) / 18.0;
  CHECK(mann_kendall(x).variance == doctest::Approx(expect));
}

TEST_CASE("S matches the pair-count oracle for every permutation of 7 values") {
  std::vector<double> x{0.5, 1.5, 2.25, 3, 4.75, 6, 9};
  int perms = 0;
  do {
    CHECK(mann_kendall(x).s == oracle::mk_pairs(x));
    ++perms;
  } while (std::next_permutation(x.begin(), x.end()));
  CHECK(perms == 5040);
}

TEST_CASE("properties on random series with ties") {
  std::mt19937_64 eng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3 + eng() % 10);
    for (auto& v : x) v = static_cast<double>(eng() % 6);
    const TrendResult t = mann_kendall(x);
    CHECK(t.s == oracle::mk_pairs(x));
    const long long n = static_cast<long long>(x.size());
    CHECK(std::llabs(t.s) <= n * (n - 1) / 2);
    CHECK(t.p_two_sided >= 0.0);
    CHECK(t.p_two_sided <= 1.0);

    std::vector<double> rev(x.rbegin(), x.rend());
    const TrendResult tr = mann_kendall(rev);
    CHECK(tr.s == -t.s);
    CHECK(tr.p_two_sided == t.p_two_sided);

    std::vector<double> mono;
    for (double v : x) mono.push_back(std::exp(0.7 * v) - 3.0);
    const TrendResult tm = mann_kendall(mono);
    CHECK(tm.s == t.s);
    CHECK(tm.variance == t.variance);
    CHECK(tm.z == t.z);
    CHECK(tm.p_two_sided == t.p_two_sided);
  }
}

TEST_CASE("p falls strictly as |S| grows for fixed n") {
  // Distinct values: swapping one adjacent pair of a sorted series lowers S by 1.
  const int n = 8;
  std::vector<double> x(n);
  std::iota(x.begin(), x.end(), 0.0);
  double last_p = -1.0;
  long long last_s = 1000;
  // Walk from the reversed order (S = -28) to sorted order (S = 28) by
  // bubble-sort swaps; |S| shrinks, then grows.
  std::reverse(x.begin(), x.end());
  std::vector<std::pair<long long, double>> seen;
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (int i = 0; i + 1 < n; ++i) {
      if (x[i] > x[i + 1]) {
        std::swap(x[i], x[i + 1]);
        swapped = true;
        const TrendResult t = mann_kendall(x);
        seen.emplace_back(t.s, t.p_two_sided);
      }
    }
  }
  (void)last_p;
  (void)last_s;
  for (const auto& [s1, p1] : seen) {
    for (const auto& [s2, p2] : seen) {
      if (std::llabs(s1) > std::llabs(s2) && s2 != 0) CHECK(p1 < p2);
    }
  }
}

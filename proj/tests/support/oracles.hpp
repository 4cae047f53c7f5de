#pragma once
// Independent reference computations used by the tests. Nothing here calls
// into the analytic gradient or sampler code paths it is used to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace lagbias::testing {

// Central finite-difference gradient.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Binomial pmf by direct multiplication, no logarithms.
inline double binomial_pmf_direct(int f, int n, double theta) {
  double coef = 1.0;
  for (int i = 1; i <= f; ++i) coef = coef * (n - f + i) / i;
  return coef * std::pow(theta, f) * std::pow(1.0 - theta, n - f);
}

struct GridMoments {
  double mass = 0;
  double mean = 0;
  double prob_ge_one = 0;
};

// Midpoint-rule quadrature of an unnormalized log density over (lo, hi).
inline GridMoments grid_moments(const std::function<double(double)>& log_density, double lo, double hi,
                                std::size_t n) {
  const double dx = (hi - lo) / static_cast<double>(n);
  std::vector<double> lp(n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    lp[i] = log_density(lo + (static_cast<double>(i) + 0.5) * dx);
    if (lp[i] > peak) peak = lp[i];
  }
  double z = 0, m1 = 0, tail = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + (static_cast<double>(i) + 0.5) * dx;
    const double w = std::exp(lp[i] - peak);
    z += w;
    m1 += w * x;
    if (x >= 1.0) tail += w;
  }
  return {z * dx * std::exp(peak), m1 / z, tail / z};
}

}  // namespace lagbias::testing

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qmcvi::testing {

// Central differences with a step scaled to each coordinate.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const double step = h * std::max(1.0, std::abs(xk));
    x[k] = xk + step;
    const double up = f(x);
    x[k] = xk - step;
    const double down = f(x);
    x[k] = xk;
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

// max |a - b| / max(1, max |a|)
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(a[k]));
  }
  return diff / scale;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  const auto n = static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += x;
  const double mean = s / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace qmcvi::testing

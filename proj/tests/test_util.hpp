#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "t2t/autodiff.hpp"

namespace t2t::testutil {

inline std::vector<double> random_values(std::mt19937_64& rng, int n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = dist(rng);
  return v;
}

inline ad::Tensor random_vector(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  return ad::Tensor::from_vector(random_values(rng, n, lo, hi));
}

inline ad::Tensor random_matrix(std::mt19937_64& rng, int r, int c, double lo = -1.0,
                                double hi = 1.0) {
  return ad::Tensor::matrix(r, c, random_values(rng, r * c, lo, hi));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace t2t::testutil

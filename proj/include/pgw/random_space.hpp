#pragma once

#include "pgw/mmspace.hpp"

#include <random>

namespace pgw {

/// Random full-support pmm-space: i.i.d. uniform(0.1, 1) symmetric
/// distances repaired into a metric by shortest paths, and flat-Dirichlet
/// weights (floored at 1e-3 before normalizing, so no atom is negligible).
template <class Rng>
MMSpace random_space(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Matrix d = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = u(rng);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  std::exponential_distribution<double> e(1.0);
  Vector w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = e(rng) + 1e-3;
  return MMSpace(std::move(d), w / w.sum());
}

} // namespace pgw

#pragma once

#include "evoeq/signal.hpp"

#include <random>

namespace evoeq::testutil {

inline std::mt19937& rng() {
  static std::mt19937 gen(0x5eed);
  return gen;
}

inline WeightedSignal random_signal(const TimeGrid& grid, double nu, int dim,
                                    unsigned seed = 0) {
  std::mt19937 gen(seed ? seed : rng()());
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat vals(dim, grid.n);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < dim; ++i) vals(i, j) = cx(dist(gen), dist(gen));
  return {grid, nu, std::move(vals)};
}

/// Random signal supported in [a, infinity) intersected with the window.
inline WeightedSignal random_causal_signal(const TimeGrid& grid, double nu, int dim,
                                           double a, unsigned seed = 0) {
  WeightedSignal f = random_signal(grid, nu, dim, seed);
  for (int j = 0; j < grid.n; ++j)
    if (grid.time(j) < a) f.values().col(j).setZero();
  return f;
}

/// Scalar indicator 1_{[lo,hi)} sampled on the grid.
inline WeightedSignal indicator(const TimeGrid& grid, double nu, double lo, double hi) {
  Mat vals = Mat::Zero(1, grid.n);
  for (int j = 0; j < grid.n; ++j) {
    double t = grid.time(j);
    if (t >= lo - 1e-12 && t < hi - 1e-12) vals(0, j) = 1.0;
  }
  return {grid, nu, std::move(vals)};
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace evoeq::testutil

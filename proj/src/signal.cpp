#include "evoeq/signal.hpp"

#include <cmath>

namespace evoeq {

TimeGrid make_grid(double t0, double dt, int n) {
  if (!(dt > 0.0)) throw std::invalid_argument("make_grid: dt must be > 0");
  if (n < 2) throw std::invalid_argument("make_grid: n must be >= 2");
  if (!std::isfinite(t0) || !std::isfinite(dt))
    throw std::invalid_argument("make_grid: non-finite grid parameters");
  return TimeGrid{t0, dt, n};
}

WeightedSignal::WeightedSignal(TimeGrid grid, double nu, Mat values)
    : grid_(grid), nu_(nu), values_(std::move(values)) {
  if (values_.cols() != grid_.n)
    throw std::invalid_argument("WeightedSignal: sample count does not match grid");
  if (values_.rows() < 1)
    throw std::invalid_argument("WeightedSignal: dim must be >= 1");
  if (!values_.allFinite())
    throw std::invalid_argument("WeightedSignal: non-finite sample");
}

WeightedSignal WeightedSignal::zero(TimeGrid grid, double nu, int dim) {
  return {grid, nu, Mat::Zero(dim, grid.n)};
}

namespace {

void require_compatible(const WeightedSignal& f, const WeightedSignal& g) {
  if (f.grid() != g.grid() || f.nu() != g.nu() || f.dim() != g.dim())
    throw std::invalid_argument("weighted_inner: grid/nu/dim mismatch");
}

}  // namespace

cx weighted_inner(const WeightedSignal& f, const WeightedSignal& g) {
  require_compatible(f, g);
  const TimeGrid& grid = f.grid();
  cx acc = 0.0;
  for (int j = 0; j < grid.n; ++j) {
    double w = std::exp(-2.0 * f.nu() * grid.time(j)) * grid.dt;
    acc += w * f.values().col(j).dot(g.values().col(j));  // Eigen dot conjugates lhs
  }
  return acc;
}

double weighted_norm_sq(const WeightedSignal& f) {
  const TimeGrid& grid = f.grid();
  double acc = 0.0;
  for (int j = 0; j < grid.n; ++j) {
    double w = std::exp(-2.0 * f.nu() * grid.time(j)) * grid.dt;
    acc += w * f.values().col(j).squaredNorm();
  }
  return acc;
}

double weighted_norm(const WeightedSignal& f) { return std::sqrt(weighted_norm_sq(f)); }

WeightedSignal exp_weight(const WeightedSignal& f, WeightDirection direction, double nu) {
  const TimeGrid& grid = f.grid();
  Mat out = f.values();
  if (direction == WeightDirection::Forward) {
    for (int j = 0; j < grid.n; ++j) out.col(j) *= std::exp(-f.nu() * grid.time(j));
    return {grid, 0.0, std::move(out)};
  }
  for (int j = 0; j < grid.n; ++j) out.col(j) *= std::exp(nu * grid.time(j));
  return {grid, nu, std::move(out)};
}

SupportReport support_mass(const WeightedSignal& f, double a) {
  const TimeGrid& grid = f.grid();
  int cut = grid_index(grid, a);
  SupportReport report;
  report.cut = grid.t0 + cut * grid.dt;
  for (int j = 0; j < grid.n; ++j) {
    double w = std::exp(-2.0 * f.nu() * grid.time(j)) * grid.dt;
    double mass = w * f.values().col(j).squaredNorm();
    (j < cut ? report.pre_mass : report.post_mass) += mass;
  }
  return report;
}

int grid_index(const TimeGrid& grid, double a) {
  double idx = (a - grid.t0) / grid.dt;
  long k = std::lround(idx);
  if (k < 0) k = 0;
  if (k > grid.n) k = grid.n;
  return static_cast<int>(k);
}

bool grid_aligned(const TimeGrid& grid, double h, int* steps) {
  double idx = h / grid.dt;
  long k = std::lround(idx);
  if (std::abs(idx - static_cast<double>(k)) > 1e-9 * (1.0 + std::abs(idx))) return false;
  if (steps) *steps = static_cast<int>(k);
  return true;
}

}  // namespace evoeq

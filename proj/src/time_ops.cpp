#include "evoeq/time_ops.hpp"

#include <cmath>
#include <numbers>

namespace evoeq {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310002;
}

WeightedSignal derivative(const WeightedSignal& f) {
  return apply_multiplier(f, [](cx z) { return z; });
}

WeightedSignal integrate(const WeightedSignal& f) {
  const double nu = f.nu();
  if (nu == 0.0) throw std::domain_error("integrate: I_0 is not defined (nu = 0)");
  const TimeGrid& grid = f.grid();
  Mat out(f.dim(), grid.n);
  if (nu > 0.0) {
    Vec acc = Vec::Zero(f.dim());
    for (int j = 0; j < grid.n; ++j) {
      out.col(j) = acc;
      acc += grid.dt * f.values().col(j);
    }
  } else {
    Vec acc = Vec::Zero(f.dim());
    for (int j = grid.n - 1; j >= 0; --j) {
      acc += grid.dt * f.values().col(j);
      out.col(j) = -acc;
    }
  }
  return {grid, nu, std::move(out)};
}

WeightedSignal integrate_spectral(const WeightedSignal& f) {
  if (f.nu() == 0.0)
    throw std::domain_error("integrate_spectral: I_0 is not defined (nu = 0)");
  return apply_multiplier(f, [](cx z) { return 1.0 / z; });
}

WeightedSignal adjoint_derivative(const WeightedSignal& f) {
  return apply_multiplier(f, [](cx z) { return std::conj(z); });
}

WeightedSignal shift(const WeightedSignal& f, double h) {
  const TimeGrid& grid = f.grid();
  int steps = 0;
  if (!grid_aligned(grid, h, &steps))
    throw std::invalid_argument("shift: h is not grid-aligned");
  Mat out = Mat::Zero(f.dim(), grid.n);
  for (int j = 0; j < grid.n; ++j) {
    int src = j + steps;
    if (src >= 0 && src < grid.n) out.col(j) = f.values().col(src);
  }
  return {grid, f.nu(), std::move(out)};
}

WeightedSignal fractional_integrate(const WeightedSignal& f, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("fractional_integrate: alpha must be in [0,1]");
  if (!(f.nu() > 0.0))
    throw std::domain_error("fractional_integrate: requires nu > 0");
  if (alpha == 0.0) return f;
  // std::pow uses the principal branch (r e^{i theta})^a = r^a e^{i a theta},
  // theta in (-pi, pi]; the cut on (-inf, 0] is never sampled since Re z = nu > 0.
  return apply_multiplier(f, [alpha](cx z) { return std::pow(z, -alpha); });
}

cx SampledKernel::laplace(cx z) const {
  cx acc = 0.0;
  for (int i = 0; i < size(); ++i) acc += values[i] * std::exp(-z * (i * dt));
  return acc * dt;
}

double SampledKernel::l1_norm(double nu) const {
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) acc += std::abs(values[i]) * std::exp(-nu * i * dt);
  return acc * dt;
}

double SampledKernel::exponential_order() const {
  // Log-linear fit of |k| over the samples where it is nonzero; clamped at 0.
  // Heuristic: a kernel in L_{1,nu} has abscissa <= nu, which samples on a
  // finite window cannot pin down exactly.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = 0; i < size(); ++i) {
    double v = std::abs(values[i]);
    if (v <= 0.0) continue;
    double t = i * dt;
    double y = std::log(v);
    sx += t; sy += y; sxx += t * t; sxy += t * y;
    ++cnt;
  }
  if (cnt < 2) return 0.0;
  double denom = cnt * sxx - sx * sx;
  if (denom <= 0.0) return 0.0;
  double slope = (cnt * sxy - sx * sy) / denom;
  return std::max(0.0, slope);
}

WeightedSignal convolve(const SampledKernel& k, const WeightedSignal& f) {
  const TimeGrid& grid = f.grid();
  if (std::abs(k.dt - grid.dt) > 1e-12 * grid.dt)
    throw std::invalid_argument("convolve: kernel step does not match signal grid");
  Mat out = Mat::Zero(f.dim(), grid.n);
  const int K = k.size();
  for (int j = 0; j < grid.n; ++j) {
    int imax = std::min(K - 1, j);
    Vec acc = Vec::Zero(f.dim());
    for (int i = 0; i <= imax; ++i) acc += k.values[i] * f.values().col(j - i);
    out.col(j) = grid.dt * acc;
  }
  return {grid, f.nu(), std::move(out)};
}

double history_norm(const WeightedSignal& f, double window) {
  if (!(f.nu() > 0.0)) throw std::invalid_argument("history_norm: requires nu > 0");
  if (window == 0.0) return 0.0;
  const TimeGrid& grid = f.grid();
  const int wsteps = window < 0.0 ? grid.n : static_cast<int>(std::floor(window / grid.dt));
  // ||Theta f||^2 = int m(t) e^{-2 nu t} dt with m(t) the squared mass of the
  // trailing window; left-endpoint in both integrals.
  std::vector<double> mass(grid.n, 0.0);
  for (int j = 0; j < grid.n; ++j) mass[j] = grid.dt * f.values().col(j).squaredNorm();
  double acc = 0.0;
  double running = 0.0;
  for (int j = 0; j < grid.n; ++j) {
    if (j > 0) running += mass[j - 1];
    if (j - 1 - wsteps >= 0) running -= mass[j - 1 - wsteps];
    acc += running * std::exp(-2.0 * f.nu() * grid.time(j)) * grid.dt;
  }
  return std::sqrt(std::max(0.0, acc));
}

double integrator_norm(const TimeGrid& grid, double nu) {
  if (nu == 0.0) throw std::domain_error("integrator_norm: nu = 0");
  // Weight-conjugated integrator W L W^{-1} with entries dt * rho^{j-l}
  // (l < j), rho = e^{-|nu| dt}; largest singular value by power iteration
  // using O(n) recurrences for the matvec and its adjoint.
  const int n = grid.n;
  const double rho = std::exp(-std::abs(nu) * grid.dt);
  auto matvec = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    // s entering step j equals sum_{l<j} rho^{j-l} x_l
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      y[j] = grid.dt * s;
      s = rho * (s + x[j]);
    }
  };
  auto matvec_adj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    double s = 0.0;
    for (int j = n - 1; j >= 0; --j) {
      y[j] = grid.dt * s;
      s = rho * (s + x[j]);
    }
  };
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  Eigen::VectorXd w(n), u(n);
  double sigma = 0.0;
  for (int it = 0; it < 200; ++it) {
    matvec(v, w);
    matvec_adj(w, u);
    double norm = u.norm();
    if (norm == 0.0) return 0.0;
    u /= norm;
    double next = std::sqrt(norm);
    if (std::abs(next - sigma) < 1e-12 * next && it > 4) {
      sigma = next;
      break;
    }
    sigma = next;
    v = u;
  }
  return sigma;
}

double shift_norm_probe(const TimeGrid& grid, double nu, double h) {
  int steps = 0;
  if (!grid_aligned(grid, h, &steps))
    throw std::invalid_argument("shift_norm_probe: h is not grid-aligned");
  double best = 0.0;
  for (int l = 0; l < grid.n; ++l) {
    int dst = l - steps;  // probe e_l appears at index l - steps after shift
    if (dst < 0 || dst >= grid.n) continue;
    // ratio of weights between destination and source sample
    double ratio = std::exp(-nu * (grid.time(dst) - grid.time(l)));
    best = std::max(best, ratio);
  }
  return best;
}

}  // namespace evoeq

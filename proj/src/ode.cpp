#include "evoeq/ode.hpp"

#include "evoeq/time_ops.hpp"

#include <cmath>
#include <random>

namespace evoeq {

ContractionResult contraction_solve(const CausalMap& F, TimeGrid grid, int dim,
                                    double nu, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("contraction_solve: tol must be > 0");
  if (!(nu > F.lipschitz))
    throw contraction_violation("contraction_solve: nu must exceed the Lipschitz constant");

  WeightedSignal u = WeightedSignal::zero(grid, nu, dim);
  double prev_delta = 0.0;
  double factor = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    WeightedSignal next = integrate(F.evaluator(u));
    double delta = weighted_norm(WeightedSignal{grid, nu, next.values() - u.values()});
    u = std::move(next);
    if (it > 1 && prev_delta > 0.0) factor = delta / prev_delta;
    prev_delta = delta;
    if (delta < tol) {
      ContractionResult res{std::move(u), it, factor, delta};
      return res;
    }
  }
  throw non_convergence("contraction_solve: iteration limit reached", factor);
}

double probe_lipschitz(const CausalMap& F, TimeGrid grid, int dim, double nu,
                       int probes, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    Mat a(dim, grid.n), b(dim, grid.n);
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < dim; ++i) {
        a(i, j) = cx(dist(gen), dist(gen));
        b(i, j) = a(i, j) + 0.1 * cx(dist(gen), dist(gen));
      }
    WeightedSignal fa{grid, nu, a}, fb{grid, nu, b};
    double num = weighted_norm(
        WeightedSignal{grid, nu, F.evaluator(fa).values() - F.evaluator(fb).values()});
    double den = weighted_norm(WeightedSignal{grid, nu, a - b});
    if (den > 0.0) worst = std::max(worst, num / den);
  }
  return worst;
}

IvpResult solve_classical_ivp(const OdeField& f, double t0, const Vec& x0,
                              double delta, double nu, double lipschitz,
                              double radius, int steps) {
  const int dim = static_cast<int>(x0.size());
  TimeGrid grid = make_grid(0.0, delta / steps, steps);

  // shifted field g(t, v) = f(t0 + t, x0 + P(v)) with the metric projection
  // P onto the closed ball of the declared radius (Lipschitz semi-norm 1)
  auto project = [radius](const Vec& v) {
    double n = v.norm();
    return n <= radius ? v : Vec((radius / n) * v);
  };
  CausalMap F;
  F.lipschitz = lipschitz;
  F.evaluator = [&](const WeightedSignal& u) {
    Mat out(dim, grid.n);
    for (int j = 0; j < grid.n; ++j)
      out.col(j) = f(t0 + grid.time(j), Vec(x0 + project(u.values().col(j))));
    return WeightedSignal{grid, nu, std::move(out)};
  };

  ContractionResult sol = contraction_solve(F, grid, dim, nu, 1e-13, 256);

  IvpResult res;
  res.times.resize(grid.n);
  res.states = Mat(dim, grid.n);
  res.achieved_horizon = delta;
  for (int j = 0; j < grid.n; ++j) {
    res.times[j] = t0 + grid.time(j);
    Vec v = sol.u.values().col(j);
    if (v.norm() > radius * (1.0 + 1e-12)) {
      // the solution left the declared tube: everything after this point is
      // the projected surrogate, not the IVP solution
      res.tube_exited = true;
      res.achieved_horizon = grid.time(j);
      res.times.resize(j);
      res.states = res.states.leftCols(j).eval();
      return res;
    }
    res.states.col(j) = x0 + v;
  }
  return res;
}

ContractionResult solve_discrete_delay(const DelayField& G,
                                       const std::vector<double>& delays,
                                       TimeGrid grid, int dim, double nu,
                                       double lipschitz, double tol, int max_iter) {
  std::vector<int> steps(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (delays[i] > 0.0)
      throw std::invalid_argument("solve_discrete_delay: anticipating delays (h > 0) are not causal");
    if (!grid_aligned(grid, delays[i], &steps[i]))
      throw std::invalid_argument("solve_discrete_delay: delay is not grid-aligned");
  }

  CausalMap F;
  F.lipschitz = lipschitz;
  F.evaluator = [&](const WeightedSignal& u) {
    std::vector<WeightedSignal> shifted;
    shifted.reserve(delays.size());
    for (double h : delays) shifted.push_back(shift(u, h));
    Mat out(dim, grid.n);
    std::vector<Vec> args(delays.size());
    for (int j = 0; j < grid.n; ++j) {
      for (std::size_t i = 0; i < delays.size(); ++i) args[i] = shifted[i].values().col(j);
      out.col(j) = G(grid.time(j), args);
    }
    return WeightedSignal{grid, nu, std::move(out)};
  };
  return contraction_solve(F, grid, dim, nu, tol, max_iter);
}

IvpResult solve_ivp_delay(const DelayIvpField& f, double h,
                          const std::function<Vec(double)>& u0, int dim,
                          double horizon, double nu, double lipschitz, int steps) {
  if (!(h > 0.0)) throw std::invalid_argument("solve_ivp_delay: h must be > 0");
  TimeGrid grid = make_grid(0.0, horizon / steps, steps);
  int hsteps = 0;
  if (!grid_aligned(grid, h, &hsteps)) {
    // snap the step so the delay is grid-aligned
    double dt = h / std::max(1.0, std::round(h / grid.dt));
    int n = static_cast<int>(std::ceil(horizon / dt));
    grid = make_grid(0.0, dt, n);
    grid_aligned(grid, h, &hsteps);
  }
  Vec head = u0(0.0);

  CausalMap F;
  F.lipschitz = lipschitz;
  F.evaluator = [&](const WeightedSignal& phi) {
    Mat out(dim, grid.n);
    for (int j = 0; j < grid.n; ++j) {
      double t = grid.time(j);
      Vec x = phi.values().col(j);
      if (t >= 0.0) x += head;
      int jd = j - hsteps;
      Vec y = Vec::Zero(dim);
      if (jd >= 0) y = phi.values().col(jd);
      if (t - h >= 0.0) y += head;
      if (t >= 0.0 && t < h) y += u0(t - h);
      out.col(j) = t >= 0.0 ? Vec(f(t, x, y)) : Vec(Vec::Zero(dim));
    }
    return WeightedSignal{grid, nu, std::move(out)};
  };

  ContractionResult sol = contraction_solve(F, grid, dim, nu, 1e-13, 256);

  IvpResult res;
  res.times.resize(grid.n);
  res.states = Mat(dim, grid.n);
  res.achieved_horizon = grid.length();
  for (int j = 0; j < grid.n; ++j) {
    res.times[j] = grid.time(j);
    res.states.col(j) = sol.u.values().col(j) + head;
  }
  return res;
}

}  // namespace evoeq

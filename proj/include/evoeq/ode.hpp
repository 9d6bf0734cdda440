#pragma once

#include "evoeq/signal.hpp"

#include <functional>

namespace evoeq {

/// A causal map on signals with a caller-declared Lipschitz constant.
/// The claim is spot-verified on random probe pairs, not proven.
struct CausalMap {
  std::function<WeightedSignal(const WeightedSignal&)> evaluator;
  double lipschitz = 0.0;
};

struct contraction_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct non_convergence : std::runtime_error {
  non_convergence(const std::string& what, double factor_)
      : std::runtime_error(what), factor(factor_) {}
  double factor;
};

struct ContractionResult {
  WeightedSignal u;
  int iterations = 0;
  double factor_estimate = 0.0;  // observed per-iteration reduction
  double last_delta = 0.0;
};

/// Fixed point of u -> integrate(F(u)) by Picard iteration.  The causal
/// left-endpoint quadrature makes the discrete map strictly lower
/// triangular, so causality statements are exact rather than asymptotic.
ContractionResult contraction_solve(const CausalMap& F, TimeGrid grid, int dim,
                                    double nu, double tol, int max_iter);

/// Spot check of the declared Lipschitz constant on random probe pairs;
/// returns the largest observed ratio.
double probe_lipschitz(const CausalMap& F, TimeGrid grid, int dim, double nu,
                       int probes = 8, unsigned seed = 1u);

struct IvpResult {
  std::vector<double> times;
  Mat states;  // dim x steps
  double achieved_horizon = 0.0;
  bool tube_exited = false;
};

using OdeField = std::function<Vec(double, const Vec&)>;

/// Classical initial value problem x' = f(t, x), x(t0) = x0 on a horizon
/// delta: reduction to the shifted problem, metric projection onto the ball
/// |v| <= radius (Lipschitz-1), causal contraction, restriction to the
/// horizon.  A detected tube exit shrinks the reported horizon.
IvpResult solve_classical_ivp(const OdeField& f, double t0, const Vec& x0,
                              double delta, double nu, double lipschitz,
                              double radius, int steps);

using DelayField = std::function<Vec(double, const std::vector<Vec>&)>;

/// Fixed point of u -> integrate(G(tau_{h_1} u, ..., tau_{h_N} u)) for
/// nonpositive grid-aligned delays.
ContractionResult solve_discrete_delay(const DelayField& G,
                                       const std::vector<double>& delays,
                                       TimeGrid grid, int dim, double nu,
                                       double lipschitz, double tol, int max_iter);

using DelayIvpField = std::function<Vec(double, const Vec&, const Vec&)>;

/// Initial value problem with one discrete delay h > 0 and history u0 on
/// [-h, 0]: x'(t) = f(t, x(t), x(t-h)) for t > 0, x = u0 on [-h, 0].
/// Realized through the causal lift
///   F(phi)(t) = f(t, phi(t) + 1_{[0,inf)}(t) u0(0),
///                  phi(t-h) + 1_{[0,inf)}(t-h) u0(0) + 1_{[0,h)}(t) u0(t-h))
/// and reassembly u = v + 1_{[0,inf)} u0(0) + 1_{[-h,0)} u0.
IvpResult solve_ivp_delay(const DelayIvpField& f, double h,
                          const std::function<Vec(double)>& u0, int dim,
                          double horizon, double nu, double lipschitz, int steps);

}  // namespace evoeq

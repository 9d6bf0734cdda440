#pragma once

#include "evoeq/signal.hpp"
#include "evoeq/transform.hpp"

namespace evoeq {

/// Spectral time derivative: multiplier (i w + nu).  Exact inverse of
/// integrate_spectral; eigenvalues of the assembled operator are {i w_k + nu}.
WeightedSignal derivative(const WeightedSignal& f);

/// Causal quadrature realization of I_nu.  For nu > 0 the strictly causal
/// left-endpoint cumulative integral int_{-inf}^t f; for nu < 0 the
/// anticausal -int_t^inf.  Strictly lower (resp. upper) triangular, so
/// causality is exact, at the price of first-order quadrature error.
WeightedSignal integrate(const WeightedSignal& f);

/// Spectral realization of I_nu: multiplier 1/(i w + nu).  Exact inverse of
/// derivative; wrap-around instead of exact causality.
WeightedSignal integrate_spectral(const WeightedSignal& f);

/// Adjoint of the derivative w.r.t. the weighted inner product: -d/dt + 2 nu,
/// i.e. the multiplier conj(i w + nu).  Exact identity in the discrete model.
WeightedSignal adjoint_derivative(const WeightedSignal& f);

/// Time shift f(.+h) for grid-aligned h with zero fill at the vacated end.
/// Causal for h <= 0; the weighted operator norm is e^{h nu} (up to the
/// zero-fill bias at the window edge).
WeightedSignal shift(const WeightedSignal& f, double h);

/// Riemann-Liouville fractional integral of order alpha in [0,1]:
/// spectral multiplier (i w + nu)^{-alpha}, principal branch.
WeightedSignal fractional_integrate(const WeightedSignal& f, double alpha);

/// Causal scalar kernel sampled at s_i = i*dt, i = 0..size-1.
struct SampledKernel {
  double dt = 1.0;
  Vec values;

  int size() const { return static_cast<int>(values.size()); }
  /// Laplace transform int_0^inf e^{-z t} k(t) dt by left-endpoint quadrature.
  cx laplace(cx z) const;
  /// Weighted L1 norm on the sampled window.
  double l1_norm(double nu) const;
  /// Heuristic exponential order: max(0, fitted growth rate of |k|).
  double exponential_order() const;
};

/// Causal discrete convolution (k*f)(t_j) = dt * sum_i k_i f_{j-i}.
/// Kernel dt must match the signal grid.
WeightedSignal convolve(const SampledKernel& k, const WeightedSignal& f);

/// Weighted norm of the history map u -> u_(.) (sliding squared-mass
/// integral).  For the infinite window pass window < 0; the induced operator
/// norm tends to 1/sqrt(2 nu).
double history_norm(const WeightedSignal& f, double window);

/// Weighted operator norm of the assembled causal quadrature integrator,
/// computed by power iteration on the weight-conjugated Toeplitz matrix.
/// Approaches 1/|nu| as nu*T grows.
double integrator_norm(const TimeGrid& grid, double nu);

/// Operator norm of shift over the weighted probe basis (exact on the
/// retained columns): e^{h nu} for grid-aligned h.
double shift_norm_probe(const TimeGrid& grid, double nu, double h);

}  // namespace evoeq

#pragma once

#include "evoeq/signal.hpp"

#include <functional>
#include <vector>

namespace evoeq {

/// Image of the discrete Fourier-Laplace transform L_nu = F exp(-nu m).
///
/// Normalization: coeffs_k approximates (1/sqrt(2*pi)) * integral of
/// e^{-(i w_k + nu) t} f(t) dt over the window,
///   coeffs_k = (dt / sqrt(2*pi)) * e^{-i w_k t0} * sum_j e^{-2*pi*i*j*k/n} g_j
/// with g_j = e^{-nu t_j} f(t_j).  The spectral measure carries the weight
/// 2*pi/T per bin, which makes the discrete Plancherel identity exact:
///   (2*pi/T) * sum_k |coeffs_k|^2 == ||f||_{2,nu}^2.
class Spectrum {
public:
  Spectrum(TimeGrid grid, double nu, Mat coeffs);

  const TimeGrid& grid() const { return grid_; }
  double nu() const { return nu_; }
  int dim() const { return static_cast<int>(coeffs_.rows()); }
  int bins() const { return grid_.n; }

  const Mat& coeffs() const { return coeffs_; }
  Mat& coeffs() { return coeffs_; }

  /// Signed angular frequency w_k in (-pi/dt, pi/dt].
  double freq(int k) const;
  /// Frequency-domain evaluation point z_k = i w_k + nu.
  cx zpoint(int k) const { return {nu_, freq(k)}; }

private:
  TimeGrid grid_;
  double nu_;
  Mat coeffs_;  // dim x n
};

Spectrum forward(const WeightedSignal& f);
WeightedSignal inverse(const Spectrum& s);

double spectrum_norm_sq(const Spectrum& s);
double spectrum_norm(const Spectrum& s);

/// Applies a scalar spectral multiplier z -> phi(z) and transforms back.
WeightedSignal apply_multiplier(const WeightedSignal& f,
                                const std::function<cx(cx)>& phi);

/// Causality diagnostic: max over rates of the normalized gap between the
/// full weighted norm and the norm of the part supported in [0, inf).
/// ~0 iff f is causal; the discrete stand-in for membership of the Laplace
/// transform in the Hardy space of the right half-plane.
double hardy_residual(const WeightedSignal& f, const std::vector<double>& nus);

}  // namespace evoeq

#pragma once

#include <Eigen/Core>
#include <complex>
#include <stdexcept>

namespace evoeq {

using cx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

/// Uniform time grid t_j = t0 + j*dt, j = 0..n-1, window length T = n*dt.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  int n = 2;

  double length() const { return n * dt; }
  double time(int j) const { return t0 + j * dt; }

  bool operator==(const TimeGrid& other) const {
    return t0 == other.t0 && dt == other.dt && n == other.n;
  }
  bool operator!=(const TimeGrid& other) const { return !(*this == other); }
};

TimeGrid make_grid(double t0, double dt, int n);

/// Sampled H-valued function of time with attached exponential weight rate nu.
/// The discrete model of L_{2,nu}(R;C^m); samples are stored column-per-time.
class WeightedSignal {
public:
  WeightedSignal(TimeGrid grid, double nu, Mat values);

  static WeightedSignal zero(TimeGrid grid, double nu, int dim);

  const TimeGrid& grid() const { return grid_; }
  double nu() const { return nu_; }
  int dim() const { return static_cast<int>(values_.rows()); }
  int samples() const { return grid_.n; }

  const Mat& values() const { return values_; }
  Mat& values() { return values_; }
  Vec sample(int j) const { return values_.col(j); }

  /// Same samples, different weight tag. The samples are *not* rescaled;
  /// only the measure the signal is read against changes.
  WeightedSignal retagged(double nu2) const { return {grid_, nu2, values_}; }

private:
  TimeGrid grid_;
  double nu_;
  Mat values_;  // dim x n
};

struct SupportReport {
  double pre_mass = 0.0;   // weighted squared mass strictly before the cut
  double post_mass = 0.0;  // weighted squared mass at/after the cut
  double cut = 0.0;        // cut time snapped to the grid
};

enum class WeightDirection { Forward, Inverse };

/// <f,g>_{2,nu} = sum_j <f(t_j),g(t_j)> e^{-2 nu t_j} dt, conjugate-linear in f.
cx weighted_inner(const WeightedSignal& f, const WeightedSignal& g);
double weighted_norm_sq(const WeightedSignal& f);
double weighted_norm(const WeightedSignal& f);

/// Unitary weight map: Forward sends f to t -> e^{-nu t} f(t) retagged with
/// nu = 0; Inverse multiplies by e^{+nu t} and retags with nu, undoing a
/// Forward at that rate. Forward reads the rate off the signal; Inverse
/// requires it explicitly (the forward image carries tag 0).
WeightedSignal exp_weight(const WeightedSignal& f, WeightDirection direction,
                          double nu = 0.0);

/// Splits the weighted squared norm at the grid point nearest a.
SupportReport support_mass(const WeightedSignal& f, double a);

/// Nearest grid index to time a, clamped into [0, n].  Index n means
/// "past the window"; useful as an exclusive cut.
int grid_index(const TimeGrid& grid, double a);

/// True if h is an integer multiple of dt up to a relative tolerance.
bool grid_aligned(const TimeGrid& grid, double h, int* steps = nullptr);

}  // namespace evoeq

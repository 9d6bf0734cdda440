#include "evoeq/transform.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace evoeq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2Pi = 2.5066282746310002;

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// In-place complex DFT along each row of a dim x n matrix.
void dft_rows(Mat& data, int sign) {
  const int n = static_cast<int>(data.cols());
  const int rows = static_cast<int>(data.rows());
  Vec buf(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf.data()),
                            reinterpret_cast<fftw_complex*>(buf.data()), sign,
                            FFTW_ESTIMATE);
  }
  for (int r = 0; r < rows; ++r) {
    buf = data.row(r).transpose();
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));
    data.row(r) = buf.transpose();
  }
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
}

}  // namespace

Spectrum::Spectrum(TimeGrid grid, double nu, Mat coeffs)
    : grid_(grid), nu_(nu), coeffs_(std::move(coeffs)) {
  if (coeffs_.cols() != grid_.n)
    throw std::invalid_argument("Spectrum: bin count does not match grid");
}

double Spectrum::freq(int k) const {
  const int n = grid_.n;
  int kk = k <= n / 2 ? k : k - n;  // signed range (-pi/dt, pi/dt]
  return kTwoPi * kk / grid_.length();
}

Spectrum forward(const WeightedSignal& f) {
  const TimeGrid& grid = f.grid();
  Mat data = exp_weight(f, WeightDirection::Forward).values();
  dft_rows(data, FFTW_FORWARD);
  Spectrum s(grid, f.nu(), std::move(data));
  const double scale = grid.dt / kSqrt2Pi;
  for (int k = 0; k < grid.n; ++k) {
    cx phase = std::exp(cx(0.0, -s.freq(k) * grid.t0));
    s.coeffs().col(k) *= scale * phase;
  }
  return s;
}

WeightedSignal inverse(const Spectrum& s) {
  const TimeGrid& grid = s.grid();
  Mat data = s.coeffs();
  const double scale = kSqrt2Pi / (grid.dt * grid.n);
  for (int k = 0; k < grid.n; ++k) {
    cx phase = std::exp(cx(0.0, s.freq(k) * grid.t0));
    data.col(k) *= scale * phase;
  }
  dft_rows(data, FFTW_BACKWARD);
  WeightedSignal g(grid, 0.0, std::move(data));
  return exp_weight(g, WeightDirection::Inverse, s.nu());
}

double spectrum_norm_sq(const Spectrum& s) {
  return kTwoPi / s.grid().length() * s.coeffs().squaredNorm();
}

double spectrum_norm(const Spectrum& s) { return std::sqrt(spectrum_norm_sq(s)); }

WeightedSignal apply_multiplier(const WeightedSignal& f,
                                const std::function<cx(cx)>& phi) {
  Spectrum s = forward(f);
  for (int k = 0; k < s.bins(); ++k) s.coeffs().col(k) *= phi(s.zpoint(k));
  return inverse(s);
}

double hardy_residual(const WeightedSignal& f, const std::vector<double>& nus) {
  if (nus.empty()) throw std::invalid_argument("hardy_residual: empty rate list");
  for (double nu : nus)
    if (!(nu > 0.0)) throw std::invalid_argument("hardy_residual: rates must be > 0");

  const double base = weighted_norm(f);
  if (base == 0.0) return 0.0;

  double worst = 0.0;
  for (double nu : nus) {
    WeightedSignal g = f.retagged(nu);
    SupportReport rep = support_mass(g, 0.0);
    double full = std::sqrt(rep.pre_mass + rep.post_mass);
    double causal_part = std::sqrt(rep.post_mass);
    worst = std::max(worst, std::abs(full - causal_part) / full);
  }
  return worst;
}

}  // namespace evoeq

#include "evoeq/time_ops.hpp"

#include <Eigen/Dense>

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace evoeq;
using namespace evoeq::testutil;

namespace {

// Assembles the matrix of a signal operation over the impulse basis.
template <typename Op>
Mat assemble(const TimeGrid& g, double nu, Op&& op) {
  Mat out(g.n, g.n);
  for (int l = 0; l < g.n; ++l) {
    Mat vals = Mat::Zero(1, g.n);
    vals(0, l) = 1.0;
    WeightedSignal e{g, nu, vals};
    out.col(l) = op(e).values().row(0).transpose();
  }
  return out;
}

}  // namespace

TEST_CASE("derivative multiplies Fourier modes by i w + nu") {
  TimeGrid g = make_grid(0.0, 1.0 / 64, 128);
  double nu = 2.0;
  int k0 = 9;
  double w = 2.0 * std::numbers::pi * k0 / g.length();
  Mat vals(1, g.n);
  for (int j = 0; j < g.n; ++j)
    vals(0, j) = std::exp(nu * g.time(j)) * std::exp(cx(0, w * g.time(j)));
  WeightedSignal mode{g, nu, vals};
  WeightedSignal d = derivative(mode);
  cx expect = cx(nu, w);
  for (int j = 0; j < g.n; j += 13)
    CHECK(std::abs(d.values()(0, j) - expect * mode.values()(0, j)) <
          1e-10 * std::abs(expect * mode.values()(0, j)));
}

TEST_CASE("derivative of a band-limited bump matches the analytic derivative") {
  // sin^4 bump: band-limited trigonometric polynomial on the periodic window
  TimeGrid g = make_grid(0.0, 1.0 / 256, 256);
  double nu = 1.0;
  double w = 2.0 * std::numbers::pi;  // one period over the window
  Mat vals(1, g.n), dvals(1, g.n);
  for (int j = 0; j < g.n; ++j) {
    double t = g.time(j);
    double s = std::sin(w * t);
    double c = std::cos(w * t);
    vals(0, j) = std::exp(nu * t) * std::pow(s, 4);
    // d/dt [e^{nu t} sin^4] = e^{nu t}(nu sin^4 + 4 sin^3 cos * w)
    dvals(0, j) = std::exp(nu * t) * (nu * std::pow(s, 4) + 4.0 * w * std::pow(s, 3) * c);
  }
  WeightedSignal f{g, nu, vals};
  WeightedSignal d = derivative(f);
  CHECK(max_abs_diff(d.values(), dvals) < 1e-9 * dvals.cwiseAbs().maxCoeff());
}

TEST_CASE("assembled derivative has eigenvalues i w_k + nu") {
  TimeGrid g = make_grid(-0.5, 0.125, 16);
  double nu = 1.5;
  Mat D = assemble(g, nu, [](const WeightedSignal& e) { return derivative(e); });
  Eigen::ComplexEigenSolver<Mat> es(D);
  std::vector<double> got, want;
  for (int i = 0; i < g.n; ++i) got.push_back(es.eigenvalues()(i).imag());
  Spectrum probe{g, nu, Mat::Zero(1, g.n)};
  for (int k = 0; k < g.n; ++k) {
    want.push_back(probe.freq(k));
    CHECK(std::abs(es.eigenvalues()(k).real() - nu) < 1e-9);
  }
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  for (int k = 0; k < g.n; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-9));
}

TEST_CASE("causal quadrature integrator reproduces the step ramp exactly") {
  TimeGrid g = make_grid(-1.0, 1.0 / 128, 512);
  WeightedSignal f = indicator(g, 2.0, 0.0, 1.0);
  WeightedSignal u = integrate(f);
  for (int j = 0; j < g.n; ++j) {
    double t = g.time(j);
    double expect = t < 0 ? 0.0 : (t <= 1.0 ? t : 1.0);
    CHECK(std::abs(u.values()(0, j) - expect) < 1e-12);
  }
}

TEST_CASE("integrator norm approaches 1/nu") {
  TimeGrid g = make_grid(0.0, 5.0 / 4096, 4096);  // T = 5
  for (double nu : {4.0, 8.0}) {                  // nu T in {20, 40}
    double norm = integrator_norm(g, nu);
    CHECK(std::abs(norm - 1.0 / nu) < 0.02 / nu);
  }
}

TEST_CASE("derivative and spectral integrator are exact inverses") {
  TimeGrid g = make_grid(-1.0, 1.0 / 64, 256);
  WeightedSignal f = random_signal(g, 3.0, 2, 5);
  WeightedSignal a = derivative(integrate_spectral(f));
  WeightedSignal b = integrate_spectral(derivative(f));
  double scale = weighted_norm(f);
  CHECK(weighted_norm(WeightedSignal{g, 3.0, a.values() - f.values()}) < 1e-12 * scale);
  CHECK(weighted_norm(WeightedSignal{g, 3.0, b.values() - f.values()}) < 1e-12 * scale);
  CHECK_THROWS_AS((void)integrate(f.retagged(0.0)), std::domain_error);
}

TEST_CASE("quadrature and spectral integrators agree to quadrature order") {
  TimeGrid g = make_grid(-2.0, 4.0 / 4096, 4096);
  double nu = 4.0;  // e^{-nu T} = e^{-16}: wrap below quadrature error
  Mat vals(1, g.n);
  for (int j = 0; j < g.n; ++j) {
    double t = g.time(j);
    vals(0, j) = t < 0 ? 0.0 : t * t * std::exp(-3.0 * t);
  }
  WeightedSignal f{g, nu, vals};
  WeightedSignal uq = integrate(f);
  WeightedSignal us = integrate_spectral(f);
  CHECK(weighted_norm(WeightedSignal{g, nu, uq.values() - us.values()}) <
        5.0 * g.dt * weighted_norm(f));
}

TEST_CASE("adjoint identity of the derivative") {
  TimeGrid g = make_grid(-0.5, 1.0 / 64, 128);
  double nu = 1.2;
  for (unsigned seed : {1u, 2u}) {
    WeightedSignal f = random_signal(g, nu, 2, seed);
    WeightedSignal h = random_signal(g, nu, 2, seed + 10);
    cx lhs = weighted_inner(derivative(f), h);
    cx rhs = weighted_inner(f, adjoint_derivative(h));
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
  }
}

TEST_CASE("nu = 0 derivative is skew-adjoint and the operator is normal") {
  TimeGrid g = make_grid(0.0, 1.0 / 32, 64);
  WeightedSignal f = random_signal(g, 0.0, 1, 3);
  WeightedSignal h = random_signal(g, 0.0, 1, 4);
  cx lhs = weighted_inner(derivative(f), h);
  cx rhs = -weighted_inner(f, derivative(h));
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));

  // normality: derivative commutes with its adjoint
  double nu = 1.1;
  WeightedSignal x = random_signal(g, nu, 1, 5);
  WeightedSignal ab = derivative(adjoint_derivative(x));
  WeightedSignal ba = adjoint_derivative(derivative(x));
  CHECK(max_abs_diff(ab.values(), ba.values()) < 1e-10 * ab.values().cwiseAbs().maxCoeff());
}

TEST_CASE("shift: norm, identity, causality") {
  TimeGrid g = make_grid(-1.0, 1.0 / 128, 512);
  double nu = 2.0;
  double h = -0.25;

  CHECK(shift_norm_probe(g, nu, h) == doctest::Approx(std::exp(h * nu)).epsilon(0.01));

  WeightedSignal f = random_signal(g, nu, 2, 8);
  WeightedSignal same = shift(f, 0.0);
  CHECK(max_abs_diff(same.values(), f.values()) == 0.0);

  WeightedSignal c = random_causal_signal(g, nu, 1, 0.0, 9);
  WeightedSignal sc = shift(c, h);
  CHECK(support_mass(sc, -h).pre_mass == 0.0);

  CHECK_THROWS_AS((void)shift(f, 0.3 * g.dt), std::invalid_argument);
}

TEST_CASE("fractional integral endpoints and semigroup") {
  TimeGrid g = make_grid(-1.0, 1.0 / 256, 1024);
  double nu = 3.0;
  WeightedSignal f = random_causal_signal(g, nu, 1, 0.0, 12);

  WeightedSignal a1 = fractional_integrate(f, 1.0);
  WeightedSignal is = integrate_spectral(f);
  CHECK(max_abs_diff(a1.values(), is.values()) < 1e-10 * is.values().cwiseAbs().maxCoeff());

  WeightedSignal a0 = fractional_integrate(f, 0.0);
  CHECK(max_abs_diff(a0.values(), f.values()) == 0.0);

  WeightedSignal ab = fractional_integrate(fractional_integrate(f, 0.3), 0.45);
  WeightedSignal once = fractional_integrate(f, 0.75);
  CHECK(max_abs_diff(ab.values(), once.values()) < 1e-8 * once.values().cwiseAbs().maxCoeff());

  CHECK_THROWS_AS((void)fractional_integrate(f, 1.5), std::invalid_argument);
}

TEST_CASE("fractional kernel transform matches the spectral symbol") {
  // g_alpha(t) = 1_{t>=0} t^{alpha-1}: L_nu g_alpha = Gamma(alpha) (i w + nu)^{-alpha} / sqrt(2 pi).
  // The integrable singularity at 0 is handled by sampling closed-form cell
  // averages on a midpoint grid, which leaves only the O((|z| dt)^2) phase
  // error of the transform itself.
  double alpha = 0.6;
  double nu = 2.0;
  int n = 1 << 17;
  double dt = 20.0 / n;
  TimeGrid g = make_grid(0.5 * dt, dt, n);
  Mat vals(1, g.n);
  for (int j = 0; j < g.n; ++j) {
    double lo = j * dt, hi = (j + 1) * dt;
    vals(0, j) = (std::pow(hi, alpha) - std::pow(lo, alpha)) / (alpha * dt);
  }
  WeightedSignal ga{g, nu, vals};
  Spectrum s = forward(ga);
  double sqrt2pi = std::sqrt(2.0 * std::numbers::pi);
  double worst = 0.0;
  for (int k = 0; k < s.bins(); ++k) {
    double w = s.freq(k);
    if (std::abs(w) > nu) continue;
    cx expect = std::tgamma(alpha) * std::pow(cx(nu, w), -alpha) / sqrt2pi;
    worst = std::max(worst, std::abs(s.coeffs()(0, k) - expect) / std::abs(expect));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("convolution: identity kernel, cumulative kernel, norm bound") {
  TimeGrid g = make_grid(-1.0, 1.0 / 128, 512);
  double nu = 2.0;
  WeightedSignal f = random_signal(g, nu, 2, 14);

  SampledKernel delta{g.dt, Vec::Zero(1)};
  delta.values(0) = 1.0 / g.dt;
  WeightedSignal same = convolve(delta, f);
  CHECK(max_abs_diff(same.values(), f.values()) < 1e-12 * f.values().cwiseAbs().maxCoeff());

  SampledKernel ones{g.dt, Vec::Ones(g.n)};
  WeightedSignal ci = convolve(ones, f);
  WeightedSignal qi = integrate(f);
  CHECK(weighted_norm(WeightedSignal{g, nu, ci.values() - qi.values()}) <
        2.0 * g.dt * weighted_norm(f));

  // ||k*f|| <= ||k||_{1,nu} ||f||
  SampledKernel k{g.dt, Vec::Zero(64)};
  std::mt19937 gen(77);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 64; ++i) k.values(i) = dist(gen);
  WeightedSignal kf = convolve(k, f);
  CHECK(weighted_norm(kf) <= k.l1_norm(nu) * weighted_norm(f) * (1.0 + 1e-9));
}

TEST_CASE("history functional norm tends to 1/sqrt(2 nu)") {
  TimeGrid g = make_grid(-1.0, 4.0 / 2048, 2048);
  double nu = 3.0;
  for (unsigned seed : {3u, 4u}) {
    WeightedSignal f = random_causal_signal(g, nu, 1, 0.0, seed);
    double ratio = history_norm(f, -1.0) / weighted_norm(f);
    CHECK(ratio <= (1.0 + 0.02) / std::sqrt(2.0 * nu));
  }
  WeightedSignal z = WeightedSignal::zero(g, nu, 1);
  CHECK(history_norm(z, -1.0) == 0.0);
  WeightedSignal f = random_signal(g, nu, 1, 6);
  CHECK(history_norm(f, 0.0) == 0.0);
  CHECK_THROWS_AS((void)history_norm(f.retagged(-1.0), -1.0), std::invalid_argument);
}

TEST_CASE("history map saturates its norm on slowly varying signals") {
  // u = 1_{[0,T)} nearly saturates ||Theta|| = 1/sqrt(2 nu) as nu T grows
  TimeGrid g = make_grid(-1.0, 8.0 / 4096, 4096);
  double nu = 2.0;
  WeightedSignal f = indicator(g, nu, 0.0, 100.0);
  double ratio = history_norm(f, -1.0) / weighted_norm(f);
  CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0 * nu)).epsilon(0.02));
}

TEST_CASE("causality of the causal operations") {
  TimeGrid g = make_grid(-2.0, 1.0 / 128, 512);
  double nu = 2.5;
  double a = 0.0;
  WeightedSignal f = random_causal_signal(g, nu, 1, a, 19);
  double bound = 1e-12 * weighted_norm_sq(f);

  CHECK(support_mass(integrate(f), a).pre_mass <= bound);
  CHECK(support_mass(shift(f, -0.5), a).pre_mass <= bound);
  SampledKernel k{g.dt, Vec::Ones(16)};
  CHECK(support_mass(convolve(k, f), a).pre_mass <= bound);
}

TEST_CASE("discrete Sobolev embedding bound") {
  TimeGrid g = make_grid(-1.0, 1.0 / 256, 1024);
  double nu = 2.0;
  WeightedSignal gsig = random_signal(g, nu, 1, 23);
  WeightedSignal u = integrate(gsig);
  double bound = weighted_norm(gsig) / std::sqrt(2.0 * nu);
  double worst = 0.0;
  for (int j = 0; j < g.n; ++j)
    worst = std::max(worst, std::abs(u.values()(0, j)) * std::exp(-nu * g.time(j)));
  CHECK(worst <= bound * (1.0 + 5.0 * g.dt));
}

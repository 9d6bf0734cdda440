#pragma once

#include "evoeq/material.hpp"
#include "evoeq/signal.hpp"
#include "evoeq/spatial.hpp"

#include <functional>
#include <vector>

namespace evoeq {

/// Hypotheses of the parabolic exponential-stability theorem:
/// M0 Hermitian >= c0, Re M1(z) >= c1 on Re z > -rho1, C boundedly
/// invertible after range compression.
struct StabilitySetup {
  double c0 = 1.0;
  double norm_m0 = 1.0;
  double c1 = 1.0;        // sampled lower bound of Re M1 on Re z > -rho1
  double m1_sup = 1.0;    // sampled sup ||M1|| on Re z > -rho1
  double rho1 = std::numeric_limits<double>::infinity();
  double c_inv_norm = 1.0;  // ||C~^{-1}|| = 1/sigma_min
};

/// rho0 = min{ rho1, c1 / (||M1||^2 ||M0|| ||C^{-1}||^2) }.
double decay_rate_bound(const StabilitySetup& s);

/// Samples the M1 data of a StabilitySetup on the line Re z = -rho1 + eps
/// and rays into the half-plane Re z > -rho1.
StabilitySetup make_stability_setup(const Mat& M0, const MaterialLaw& M1law, double rho1,
                                    double c_inv_norm);

struct DecayFit {
  double rate = 0.0;        // fitted decay rate (slope of -log||U||)
  double half_width = 0.0;  // 95% confidence half-width of the slope
  int samples = 0;
};

struct underflow_window : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Log-linear least squares fit of t -> log ||U(t)|| on [t_begin, t_end].
DecayFit measure_decay(const WeightedSignal& u, double t_begin, double t_end);

struct WeakLimitRow {
  int n = 0;
  cx pairing = 0.0;
  double gap = 0.0;  // |pairing - limit|
};

/// Pairings integral f(n x) g(x) dx per n against the weak* limit
/// (integral_Y f)(integral g); f periodic on [0,1), g sampled on [lo,hi).
std::vector<WeakLimitRow> weak_limit_mean(const std::function<cx(double)>& f,
                                          const std::function<cx(double)>& g, double lo,
                                          double hi, const std::vector<int>& n_list,
                                          int quad_points = 1 << 16);

struct CellSolution {
  Vec corrector;     // v_xi on the faces of the cell grid
  double residual;   // || div_sharp (a v_xi) ||
};

struct invalid_coefficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 1D cell problem: v_xi = grad_sharp w + xi with a v_xi divergence free.
CellSolution cell_problem_1d(const Vec& a_faces, cx xi);

/// a_hom in 1D: the flux average; equals the harmonic mean of the samples.
cx homogenized_coefficient_1d(const Vec& a_faces);

/// 2D tensor-product cell problem on an m x m periodic grid; a is sampled
/// per direction on the face grids (dim 2 entries of a 2x2 matrix field).
struct Cell2D {
  int m = 16;
  std::function<Mat(double, double)> a;  // 2x2 coefficient field on the cell
};
Mat homogenized_matrix_2d(const Cell2D& cell);

/// Truncated moment series sum_{k=0}^K (-d^{-1})^k C_k d^{-1} f applied
/// spectrally; the WOT limit of (d/dt + B_n)^{-1} f for B_n with moments C_k.
WeightedSignal wot_limit_series(const std::vector<double>& moments,
                                const WeightedSignal& f, int K);

struct SweepRow {
  int n = 0;
  double error = 0.0;
};

/// Oscillatory wave sweep: solves d^2 u_n - div_sharp a(n.) grad_sharp u_n = f
/// per n on the periodic cell and reports ||u_n - u_hom||_{2,nu} relative to
/// ||u_hom||, with u_hom the constant-coefficient a_hom reference.
std::vector<SweepRow> oscillation_sweep_wave(const std::function<double(double)>& a,
                                             const std::vector<int>& n_list, int cells,
                                             const TimeGrid& grid, double nu);

struct BesselCompare {
  double vs_bessel = 0.0;  // max gap of the x-averaged solution vs the J-formula
  double vs_series = 0.0;  // max gap vs wot_limit_series
};

/// ode-sin-memory: (d/dt + sin(2 pi n x)) u = 1_{[0,inf)} fbar, compared
/// against ubar(t) = integral_0^t J(-(t-s)) ds * fbar with
/// J(s) = integral_0^1 e^{s sin(2 pi x)} dx (modified Bessel I_0).
BesselCompare ode_sin_memory(int n, int cells, const TimeGrid& grid, double nu, int K = 20);

/// J(s) by 2048-point periodic trapezoid (spectrally accurate).
double bessel_J(double s);

}  // namespace evoeq

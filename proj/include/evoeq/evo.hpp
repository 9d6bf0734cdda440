#pragma once

#include "evoeq/material.hpp"
#include "evoeq/signal.hpp"
#include "evoeq/spatial.hpp"
#include "evoeq/transform.hpp"

#include <optional>
#include <string>

namespace evoeq {

/// (d/dt M(d/dt) + A) U = F on a fixed window, solved per frequency.
struct EvoProblem {
  LawPtr M;
  SpMat A;
  double nu = 1.0;
  WeightedSignal F;
};

struct SolverConfig {
  double wrap_tol = 1e-9;       // required bound on e^{-nu T}
  double residual_bound = 1e-8; // accepted relative residual
  int threads = 0;              // 0: ask the hardware
  int cert_extra_stride = 8;    // stride of solve frequencies added to the certificate
  bool compute_attainment = false;  // IVP: report the dual-norm attainment defect
};

struct solve_singular : std::runtime_error {
  solve_singular(const std::string& what, cx at_, double sigma_)
      : std::runtime_error(what), at(at_), sigma(sigma_) {}
  cx at;
  double sigma;
};

struct EvoSolution {
  WeightedSignal U;
  PositivityCertificate cert;
  double residual = 0.0;    // ||(dM(d)+A)U - F||_{2,nu} / ||F||_{2,nu}
  double norm_ratio = 0.0;  // ||U|| * c_cert / ||F||  (must stay <= 1 + 1e-6)
  double attainment = -1.0; // IVP only: dual-norm defect of M0 U(0+) = M0 U0
};

EvoSolution solve(const EvoProblem& p, const SolverConfig& cfg = {});

/// Initial value problem for M(z) = M0 + z^{-1} M1 via the equivalent
/// L2 formulation: V solves (d M0 + M1 + A) V = -(M1 + A) U0 1_{[0,inf)}
/// and U = V + 1_{[0,inf)} U0.
EvoSolution solve_ivp(const SpMat& M0, const SpMat& M1, const SpMat& A, const Vec& u0,
                      double nu, const TimeGrid& grid, const SolverConfig& cfg = {});

struct CausalityReport {
  double pre_mass = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// F supported in [a, inf): the pre-a weighted mass of U must stay below
/// max(1e-10 ||U||^2, e^{-2 nu T} ||F||^2).
CausalityReport verify_causality(const EvoProblem& p, double a,
                                 const SolverConfig& cfg = {});

struct AutonomyReport {
  double discrepancy = 0.0;
  bool pass = false;
};

/// Shifting F by a grid-aligned delta >= 0 shifts U by delta (discrepancy in
/// the weighted norm, relative).
AutonomyReport verify_autonomy(const EvoProblem& p, double delta,
                               const SolverConfig& cfg = {});

struct NuIndependenceReport {
  double discrepancy = 0.0;
  bool pass = false;
};

/// Solves at p.nu and nu2 and compares in the larger-rate weighted norm.
NuIndependenceReport verify_nu_independence(const EvoProblem& p, double nu2,
                                            const SolverConfig& cfg = {});

/// ---- preset catalog -------------------------------------------------

struct PresetParams {
  SpaceGrid space{0.0, 1.0, 128};
  std::string bc = "dirichlet";  // heat only: dirichlet | neumann

  std::function<cx(double)> a;      // conductivity / stiffness profile
  std::function<cx(double)> a2;     // delayed coefficient (delay-heat)
  std::function<cx(double)> eps;    // maxwell permittivity (may vanish)
  std::function<cx(double)> sigma;  // maxwell conductivity
  std::function<cx(double)> mu;     // maxwell permeability
  std::function<double(double)> s;  // mixed-type weight s(x) in [0,1]

  double delay = 0.5;               // h > 0 (delay-heat)
  double s_q = 0.5, s_theta = 1.0;  // dual phase lag
  double alpha = 0.75;              // frac-elastic, in [1/2, 1]
  std::function<cx(double)> rho;    // frac-elastic density
  std::function<cx(double)> dcoef;  // frac-elastic D >= c
  std::function<cx(double)> ccoef;  // frac-elastic C >= 0
  SampledKernel kernel;             // memory-heat, ||k||_{L1} < 1
  cx robin_beta{0.0, 1.0};
};

struct Preset {
  std::string name;
  LawPtr M;
  SpMat A;
  int dim = 0;
  SpaceGrid space;
  int cells = 0;   // first block length (theta / v / E)
  int fluxes = 0;  // second block length (q / sigma / H)
  std::optional<SpMat> M0, M1;  // present when M(z) = M0 + z^{-1} M1
  std::optional<SpMat> full_div;  // unconstrained divergence (Neumann lift)
  double nu_cert_onset = 1.0;     // smallest doubling-search rate with a certificate

  /// Smallest rate meeting both the certificate and e^{-nu T} < 1e-12.
  double recommended_nu(const TimeGrid& grid) const;
};

/// Assembles one of: heat, wave, maxwell1d, mixed, dpl, delay-heat,
/// frac-elastic, robin-heat, memory-heat.
Preset make_preset(const std::string& name, const PresetParams& params = {});

struct BvpSolution {
  WeightedSignal u;       // cells
  WeightedSignal q;       // full faces (m+1), boundary flux included
  double trace_error = 0.0;
  EvoSolution inner;
};

/// Inhomogeneous Neumann data on a heat-type preset: prescribes the normal
/// flux gamma_n q = (g_left, g_right) with causal time profiles, lifts it to
/// a face field, and solves the homogeneous-boundary problem for the
/// remainder.  Profiles must be causal; a jump profile should be smoothed
/// (see smooth_step) since the lift is differentiated in time.
BvpSolution solve_neumann_bvp(const Preset& preset,
                              const std::function<cx(double)>& g_left,
                              const std::function<cx(double)>& g_right, double nu,
                              const TimeGrid& grid, const SolverConfig& cfg = {},
                              int lift_variant = 0);

/// C^3 ramp: 0 for t <= 0, 1 for t >= width.
double smooth_step(double t, double width);

}  // namespace evoeq

#pragma once

#include "evoeq/signal.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evoeq {

struct MatrixPair {
  Mat M0, M1;
};

struct tolerance_conflict : std::runtime_error {
  explicit tolerance_conflict(const std::string& what, double gap_ = 0.0)
      : std::runtime_error(what), gap(gap_) {}
  double gap;
};

struct not_regular : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numerical_ambiguity : std::runtime_error {
  numerical_ambiguity(const std::string& what, int a, int b)
      : std::runtime_error(what), candidate_a(a), candidate_b(b) {}
  int candidate_a, candidate_b;
};

struct inconsistent_initial_value : std::runtime_error {
  inconsistent_initial_value(const std::string& what, double residual_)
      : std::runtime_error(what), residual(residual_) {}
  double residual;
};

/// Spectrum of the pencil z M0 + M1: either finitely many roots or all of C.
struct PairSpectrum {
  bool whole_plane = false;
  std::vector<cx> points;
};

/// Similarity split E = Q diag(J, N0) Q^{-1} with J invertible and N0 in the
/// numerically-nilpotent cluster (eigenvalues within tol of 0).  Obtained by
/// a complex Schur form, a bubble reordering that moves the zero cluster to
/// the trailing block, and a triangular Sylvester decoupling: the same
/// invariant-subspace split a Jordan form would give, computed stably.
struct CoreNilpotent {
  Mat Q, Qinv;
  Mat J;   // k x k, invertible
  Mat N0;  // (n-k) x (n-k), nilpotent cluster
  int k = 0;
  int nilpotency = 0;   // degree of N0 (0 when the block is empty)
  double max_zeroed = 0.0;  // largest cluster eigenvalue magnitude zeroed out
  double cond_proxy = 1.0;  // ||Q|| * ||Q^{-1}||
};

CoreNilpotent split_core_nilpotent(const Mat& E, double tol = 1e-8);

struct WeierstrassData {
  Mat P, Q;
  Mat C;  // k x k
  Mat N;  // (n-k) x (n-k), nilpotent
  int k = 0;
  double residual0 = 0.0;  // || P M0 Q - diag(I,N) ||
  double residual1 = 0.0;  // || P M1 Q - diag(C,I) ||
};

struct WongData {
  std::vector<Mat> bases;   // orthonormal bases of IV_0 >= IV_1 >= ...
  int stabilization = 0;    // first k with IV_k = IV_{k+1}
};

PairSpectrum pair_spectrum(const MatrixPair& p);
bool pair_regular(const MatrixPair& p);

WeierstrassData weierstrass_form(const MatrixPair& p, double tol = 1e-8);
int pair_index(const MatrixPair& p);
WongData wong_sequence(const MatrixPair& p);
Mat consistent_subspace(const MatrixPair& p);

/// Drazin inverse via the core-nilpotent split; the defining identities
/// E X = X E, X E X = X, X E^{k+1} = E^k hold to roundoff.
Mat drazin(const Mat& E);

struct DaeTrajectory {
  std::vector<double> times;
  Mat states;  // n x steps
  bool projected = false;
  double inconsistency = 0.0;
};

/// Propagates M0 U' + M1 U = 0, U(0) = U0 on [0, horizon].  U0 must lie in
/// the consistent subspace up to a small angle (it is projected, with the
/// defect recorded); a gross inconsistency throws.  When M0 and M1 commute
/// the Drazin flow e^{-t M0^D M1} is used as a cross-checked second path.
DaeTrajectory dae_solve(const MatrixPair& p, const Vec& u0, double horizon, int steps);

/// Commuting reduction E = (zM0+M1)^{-1} M0, A = (zM0+M1)^{-1} M1 at a
/// resolvent point: same consistent space, same trajectories, E A = A E.
MatrixPair commuting_reduction(const MatrixPair& p);

/// Verifies the Fourier-Laplace resolvent formula
///   (L_rho U)(w) = ((i w + rho) M0 + M1)^{-1} M0 U0 / sqrt(2 pi)
/// against the transform of the computed trajectory (Euler-Maclaurin
/// corrected at the jump).  Returns the max deviation over sampled
/// in-band frequencies.
double laplace_solution_check(const MatrixPair& p, const Vec& u0,
                              const DaeTrajectory& traj, double rho);

/// Largest principal angle proxy: || A A* - B B* ||_2 for orthonormal A, B.
double subspace_gap(const Mat& a, const Mat& b);

/// Orthonormal basis of the column span, rank cut at tol * sigma_max.
Mat orthonormal_range(const Mat& a, double tol = 1e-10);

/// Orthonormal basis of the kernel, rank cut at tol * sigma_max.
Mat kernel_basis(const Mat& a, double tol = 1e-10);

}  // namespace evoeq

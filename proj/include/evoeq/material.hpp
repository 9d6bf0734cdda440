#pragma once

#include "evoeq/signal.hpp"
#include "evoeq/spatial.hpp"
#include "evoeq/time_ops.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace evoeq {

class MaterialLaw;
using LawPtr = std::shared_ptr<const MaterialLaw>;

enum class LawKind {
  Const,     // B
  ZInvPow,   // z^{-k} B, k >= 0
  Series,    // sum_k z^{-k} B_k, finitely many terms, radius r
  Delay,     // e^{z h} B, h <= 0 (the symbol of tau_h)
  FracPow,   // z^{-alpha} B, alpha in [0,1], principal branch
  KernelLT,  // (int_0^inf e^{-zt} k(t) dt) B, causal sampled kernel
  Sum,
  Product,   // pointwise operator product, left to right
  Scale,     // lambda * child
  Block,     // block matrix of laws (null entry = zero block)
  Inverse,   // child(z)^{-1}, carries a sampled invertibility onset
};

/// Certificate data attached to an Inverse node at construction time.
struct InverseCertificate {
  double onset = 0.0;        // rate from which sampled invertibility holds
  double sigma_floor = 0.0;  // smallest sampled singular value at the onset
  bool neumann = false;      // onset from the a + b*e^{zh} Neumann criterion
};

/// Immutable expression tree over the complex frequency z producing an
/// m x m operator; the house of the M(d/dt) calculus.
class MaterialLaw {
public:
  LawKind kind;
  int dim = 0;

  SpMat coeff;                       // Const/ZInvPow/Delay/FracPow/KernelLT
  int power = 0;                     // ZInvPow
  double alpha = 0.0;                // FracPow
  double delay_h = 0.0;              // Delay, <= 0
  std::vector<SpMat> series_coeffs;  // Series
  double series_radius = 0.0;
  SampledKernel kernel;              // KernelLT
  cx scalar = 1.0;                   // Scale
  std::vector<LawPtr> children;                   // Sum/Product/Scale/Inverse
  std::vector<std::vector<LawPtr>> block_rows;    // Block (nullptr = zero)
  std::vector<int> block_dims;                    // Block row/col sizes
  std::optional<InverseCertificate> inverse_cert;

  MaterialLaw() = default;
};

namespace law {

LawPtr constant(SpMat B);
LawPtr constant(const Mat& B);
LawPtr constant_diag(const Vec& d);
LawPtr identity(int m);
LawPtr zinv_pow(int k, SpMat B);
LawPtr zinv_pow(int k, const Mat& B);
LawPtr series(std::vector<SpMat> coeffs, double radius);
LawPtr delay(double h, SpMat B);
LawPtr frac_pow(double alpha, SpMat B);
LawPtr kernel_lt(SampledKernel k, SpMat B);
LawPtr sum(LawPtr a, LawPtr b);
LawPtr sum(std::vector<LawPtr> terms);
LawPtr product(LawPtr a, LawPtr b);
LawPtr scale(cx lambda, LawPtr child);
LawPtr block(std::vector<std::vector<LawPtr>> rows, std::vector<int> dims);
LawPtr block_diag(std::vector<LawPtr> diag);
/// Builds an Inverse node; certifies invertibility by a Neumann-series
/// check when the child matches a + b e^{zh}, otherwise by a sampled
/// smallest-singular-value doubling search.
LawPtr inverse(LawPtr child);

}  // namespace law

struct no_certificate : std::runtime_error {
  explicit no_certificate(const std::string& what, cx witness_ = 0.0)
      : std::runtime_error(what), witness(witness_) {}
  cx witness;
};

struct not_invertible : std::runtime_error {
  explicit not_invertible(const std::string& what, cx at_ = 0.0)
      : std::runtime_error(what), at(at_) {}
  cx at;
};

/// Recursive evaluation of M(z).  Throws std::domain_error left of the
/// estimated abscissa and not_invertible on a singular Inverse child.
SpMat evaluate(const MaterialLaw& m, cx z);

/// Structural abscissa-of-boundedness estimate (-inf for Const/Delay, 0 for
/// genuine z^{-k} or fractional content, the radius for Series, a sampled
/// heuristic for KernelLT and Inverse onsets, max over children otherwise).
double abscissa_estimate(const MaterialLaw& m);

struct PositivityCertificate {
  double nu0 = 0.0;     // onset rate the certificate was sampled at
  double c = 0.0;       // min over samples of lambda_min(Re z M(z))
  double c_cert = 0.0;  // reported bound: 0.9 * c (sampling safety factor)
  bool ok = false;
  cx witness = 0.0;     // sample achieving the minimum
  int sample_count = 0;
};

struct SamplingSpec {
  int line_points = 33;     // points on the boundary line Re z = nu0
  double omega_span = 1e4;  // log-spaced |omega| up to omega_span * nu0
  int ray_doublings = 8;    // rays Re z = nu0 * 2^j
  std::vector<cx> extra;    // caller-supplied points (e.g. solver grid)
};

/// Samples lambda_min(Re z M(z)) on the line Re z = nu0 and on rays into the
/// half-plane.  Sampling, not proof: the paper's hypothesis quantifies over a
/// half-plane, which no finite procedure decides; hence the 0.9 safety factor.
PositivityCertificate try_positivity_certificate(const MaterialLaw& m, double nu0,
                                                 const SamplingSpec& spec = {});

/// Throwing variant: no_certificate (with witness) when c <= 0.
PositivityCertificate positivity_certificate(const MaterialLaw& m, double nu0,
                                             const SamplingSpec& spec = {});

/// Constructive shifted-positivity rate: given Hermitian N0 >= c0 on ran(N0)
/// and Re N1 >= c1 > c1_target on ker(N0), returns nu0 with
/// lambda_min(nu0 N0 + Re N1) >= c1_target, verified by eigensolve.
double shifted_positivity(const Mat& N0, const Mat& N1, double c1_target);

/// M(d/dt) f: applies M(i w_k + nu) per frequency.
WeightedSignal apply(const MaterialLaw& m, const WeightedSignal& f);

/// lambda_min of the Hermitian part of a sparse matrix (cheap path for
/// diagonal matrices, dense eigensolve otherwise).
double lambda_min_hermitian_part(const SpMat& a);

/// True if every structural nonzero sits on the diagonal.
bool is_diagonal(const SpMat& a);

double operator_norm_estimate(const SpMat& a);
double sigma_min_estimate(const SpMat& a);

}  // namespace evoeq

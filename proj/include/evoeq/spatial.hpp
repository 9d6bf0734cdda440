#pragma once

#include "evoeq/signal.hpp"

#include <Eigen/SparseCore>

namespace evoeq {

using SpMat = Eigen::SparseMatrix<cx>;

/// Staggered 1D grid on (a,b): m cells with centers a + (i+1/2)h and m+1
/// faces a + i h, h = (b-a)/m.
struct SpaceGrid {
  double a = 0.0;
  double b = 1.0;
  int m = 2;

  double h() const { return (b - a) / m; }
  double center(int i) const { return a + (i + 0.5) * h(); }
  double face(int i) const { return a + i * h(); }
};

SpaceGrid make_space_grid(double a, double b, int m);

enum class SpatialKind {
  Grad0,        // Dirichlet gradient, (m+1) x m
  Div,          // full divergence, m x (m+1); Div = -Grad0^T
  Div0,         // zero-flux divergence over interior faces, m x (m-1)
  Grad,         // full gradient to interior faces, (m-1) x m; Grad = -Div0^T
  GradPeriodic, // circulant difference, m x m
  DivPeriodic,  // -GradPeriodic^T
  Block,
  Other,
};

/// A finite-difference operator with its grid and a registered adjoint
/// partner; all duality relations hold at the level of exact transposes.
class SpatialOperator {
public:
  SpatialOperator(SpMat matrix, SpatialKind kind, SpaceGrid grid);

  const SpMat& matrix() const { return mat_; }
  SpatialKind kind() const { return kind_; }
  const SpaceGrid& grid() const { return grid_; }
  Eigen::Index rows() const { return mat_.rows(); }
  Eigen::Index cols() const { return mat_.cols(); }

  Vec apply(const Vec& x) const { return mat_ * x; }

private:
  SpMat mat_;
  SpatialKind kind_;
  SpaceGrid grid_;
};

/// Dirichlet pair: grad0 folds homogeneous boundary values into the boundary
/// face rows; div := -grad0^T is the unconstrained divergence.
std::pair<SpatialOperator, SpatialOperator> build_grad0_div(const SpaceGrid& grid);

/// Neumann pair: div0 acts on interior faces (zero normal flux built in);
/// grad := -div0^T is the unconstrained gradient restricted to interior faces.
std::pair<SpatialOperator, SpatialOperator> build_div0_grad(const SpaceGrid& grid);

/// Circulant periodic gradient on the unit cell; kernel = constants.
SpatialOperator build_periodic_grad(const SpaceGrid& grid);
SpatialOperator build_periodic_div(const SpaceGrid& grid);

/// Skew block [[0, -C^*],[C, 0]]; exactly skew-Hermitian by construction.
/// State ordering: the C-domain variables first, then the C-range variables.
SpMat skew_block(const SpatialOperator& C);

/// Heat/wave block with Robin coupling gamma_n q + beta*gamma u = 0 folded
/// into the boundary faces.  beta = i (the default) gives an exactly
/// skew-Hermitian block; general beta with -Re beta >= 0 gives Re<x,Ax> >= 0.
SpMat robin_block(const SpaceGrid& grid, cx beta = cx(0.0, 1.0));

struct RangeCompression {
  Eigen::VectorXd singular_values;  // positive part only, descending
  Mat left;                         // orthonormal basis of ran(C)
  Mat right;                        // orthonormal basis of (ker C)^perp
  int rank = 0;
  double sigma_min = 0.0;           // smallest positive singular value
  double inv_norm = 0.0;            // ||C~^{-1}|| = 1/sigma_min
};

/// ran/ker split by SVD with relative rank tolerance; the compressed
/// operator iota* C restricted to (ker C)^perp is boundedly invertible with
/// norm 1/sigma_min.
RangeCompression range_compress(const SpMat& C, double rank_tol = 1e-10);

enum class Side { Left, Right };

/// Endpoint value extrapolated from the two nearest cell centers.
cx trace_1d(const Vec& cells, const SpaceGrid& grid, Side end);

}  // namespace evoeq

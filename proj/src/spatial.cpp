#include "evoeq/spatial.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <vector>

namespace evoeq {

SpaceGrid make_space_grid(double a, double b, int m) {
  if (!(b > a)) throw std::invalid_argument("make_space_grid: b must exceed a");
  if (m < 2) throw std::invalid_argument("make_space_grid: m must be >= 2");
  return SpaceGrid{a, b, m};
}

SpatialOperator::SpatialOperator(SpMat matrix, SpatialKind kind, SpaceGrid grid)
    : mat_(std::move(matrix)), kind_(kind), grid_(grid) {
  mat_.makeCompressed();
}

namespace {

SpMat from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<cx>>& ts) {
  SpMat m(rows, cols);
  m.setFromTriplets(ts.begin(), ts.end());
  m.makeCompressed();
  return m;
}

SpMat neg_adjoint(const SpMat& m) {
  SpMat t = SpMat(m.adjoint());
  t *= cx(-1.0);
  t.makeCompressed();
  return t;
}

}  // namespace

std::pair<SpatialOperator, SpatialOperator> build_grad0_div(const SpaceGrid& grid) {
  const int m = grid.m;
  const double ih = 1.0 / grid.h();
  // Boundary faces sit at distance h/2 from the nearest cell center, so the
  // folded Dirichlet value enters with weight 2/h.
  std::vector<Eigen::Triplet<cx>> ts;
  ts.reserve(2 * m);
  for (int f = 1; f < m; ++f) {
    ts.emplace_back(f, f, cx(ih));
    ts.emplace_back(f, f - 1, cx(-ih));
  }
  ts.emplace_back(0, 0, cx(2.0 * ih));
  ts.emplace_back(m, m - 1, cx(-2.0 * ih));
  SpMat grad0 = from_triplets(m + 1, m, ts);
  SpMat div = neg_adjoint(grad0);
  return {SpatialOperator(std::move(grad0), SpatialKind::Grad0, grid),
          SpatialOperator(std::move(div), SpatialKind::Div, grid)};
}

std::pair<SpatialOperator, SpatialOperator> build_div0_grad(const SpaceGrid& grid) {
  const int m = grid.m;
  const double ih = 1.0 / grid.h();
  // Interior faces f = 1..m-1 carry the flux; boundary faces are pinned to 0.
  std::vector<Eigen::Triplet<cx>> ts;
  ts.reserve(2 * (m - 1));
  for (int i = 0; i < m; ++i) {
    // (div0 q)_i = (q_{i+1} - q_i)/h with q_0 = q_m = 0
    if (i + 1 <= m - 1) ts.emplace_back(i, i, cx(ih));      // q at interior face i+1
    if (i >= 1) ts.emplace_back(i, i - 1, cx(-ih));         // q at interior face i
  }
  SpMat div0 = from_triplets(m, m - 1, ts);
  SpMat grad = neg_adjoint(div0);
  return {SpatialOperator(std::move(div0), SpatialKind::Div0, grid),
          SpatialOperator(std::move(grad), SpatialKind::Grad, grid)};
}

SpatialOperator build_periodic_grad(const SpaceGrid& grid) {
  const int m = grid.m;
  const double ih = 1.0 / grid.h();
  std::vector<Eigen::Triplet<cx>> ts;
  ts.reserve(2 * m);
  for (int f = 0; f < m; ++f) {
    ts.emplace_back(f, f, cx(ih));
    ts.emplace_back(f, (f + m - 1) % m, cx(-ih));
  }
  return {from_triplets(m, m, ts), SpatialKind::GradPeriodic, grid};
}

SpatialOperator build_periodic_div(const SpaceGrid& grid) {
  SpatialOperator g = build_periodic_grad(grid);
  return {neg_adjoint(g.matrix()), SpatialKind::DivPeriodic, grid};
}

SpMat skew_block(const SpatialOperator& C) {
  const Eigen::Index p = C.rows(), q = C.cols();
  SpMat negCs = neg_adjoint(C.matrix());
  std::vector<Eigen::Triplet<cx>> ts;
  ts.reserve(2 * C.matrix().nonZeros());
  for (int k = 0; k < negCs.outerSize(); ++k)
    for (SpMat::InnerIterator it(negCs, k); it; ++it)
      ts.emplace_back(static_cast<int>(it.row()), static_cast<int>(q + it.col()), it.value());
  for (int k = 0; k < C.matrix().outerSize(); ++k)
    for (SpMat::InnerIterator it(C.matrix(), k); it; ++it)
      ts.emplace_back(static_cast<int>(q + it.row()), static_cast<int>(it.col()), it.value());
  return from_triplets(static_cast<int>(p + q), static_cast<int>(p + q), ts);
}

SpMat robin_block(const SpaceGrid& grid, cx beta) {
  // State (u cells, q faces).  gamma_n q = -q(a) at the left end, +q(b) at
  // the right; the boundary relation gamma_n q + beta*gamma u = 0 eliminates
  // the boundary flux: q(a) = beta*u_0, q(b) = -beta*u_{m-1} (nearest-cell
  // trace).  The interior faces keep the plain grad/div stencils, so for
  // beta = i the assembled block has purely imaginary diagonal corners and
  // is exactly skew-Hermitian.
  const int m = grid.m;
  const double ih = 1.0 / grid.h();
  const int nq = m - 1;  // interior faces only
  std::vector<Eigen::Triplet<cx>> ts;
  // div rows: (div q)_i = (q_{i+1} - q_i)/h with boundary fluxes substituted
  for (int i = 0; i < m; ++i) {
    if (i + 1 <= m - 1) ts.emplace_back(i, m + i, cx(ih));
    if (i >= 1) ts.emplace_back(i, m + i - 1, cx(-ih));
  }
  ts.emplace_back(0, 0, -beta * ih);            // -q(a)/h = -beta*u_0/h
  ts.emplace_back(m - 1, m - 1, -beta * ih);    // +q(b)/h = -beta*u_{m-1}/h
  // grad rows on interior faces f = 1..m-1: (grad u)_f = (u_f - u_{f-1})/h
  for (int f = 1; f <= m - 1; ++f) {
    ts.emplace_back(m + f - 1, f, cx(ih));
    ts.emplace_back(m + f - 1, f - 1, cx(-ih));
  }
  return from_triplets(m + nq, m + nq, ts);
}

RangeCompression range_compress(const SpMat& C, double rank_tol) {
  Mat dense = Mat(C);
  Eigen::BDCSVD<Mat> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0)
    throw std::domain_error("range_compress: zero operator has no range");
  double cutoff = rank_tol * sv(0);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  if (rank == 0) throw std::domain_error("range_compress: numerically zero operator");
  RangeCompression rc;
  rc.singular_values = sv.head(rank);
  rc.left = svd.matrixU().leftCols(rank);
  rc.right = svd.matrixV().leftCols(rank);
  rc.rank = rank;
  rc.sigma_min = sv(rank - 1);
  rc.inv_norm = 1.0 / rc.sigma_min;
  return rc;
}

cx trace_1d(const Vec& cells, const SpaceGrid& grid, Side end) {
  const int m = static_cast<int>(cells.size());
  if (m < 2) throw std::invalid_argument("trace_1d: need at least two cells");
  // Linear extrapolation from the nearest two centers to the endpoint.
  if (end == Side::Left) return 1.5 * cells(0) - 0.5 * cells(1);
  return 1.5 * cells(m - 1) - 0.5 * cells(m - 2);
}

}  // namespace evoeq

#include "evoeq/spatial.hpp"

#include <Eigen/Dense>

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace evoeq;
using evoeq::testutil::rng;

namespace {
Vec random_vec(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = cx(dist(gen), dist(gen));
  return v;
}
}  // namespace

TEST_CASE("grad0/div: consistency, exact adjointness, Dirichlet folding") {
  SpaceGrid g = make_space_grid(0.0, 1.0, 256);
  auto [grad0, div] = build_grad0_div(g);

  // O(h) consistency on sin(pi x) with zero boundary values
  Vec u(g.m);
  for (int i = 0; i < g.m; ++i) u(i) = std::sin(std::numbers::pi * g.center(i));
  Vec du = grad0.apply(u);
  double worst = 0.0;
  for (int f = 0; f <= g.m; ++f)
    worst = std::max(worst, std::abs(du(f) - std::numbers::pi * std::cos(std::numbers::pi * g.face(f))));
  CHECK(worst < 8.0 * g.h());

  // exact duality <grad0 u, q> = <u, -div q>
  Vec q = random_vec(g.m + 1, 5);
  Vec uu = random_vec(g.m, 6);
  cx lhs = grad0.apply(uu).dot(q);      // conj(grad0 u) . q
  cx rhs = uu.dot(-div.apply(q));
  CHECK(std::abs(lhs - rhs) < 1e-13 * std::abs(lhs));
  // transpose identity at the matrix level
  CHECK((Mat(div.matrix()) + Mat(grad0.matrix()).adjoint()).norm() == 0.0);

  // constants: zero in the interior, boundary rows see the Dirichlet wall
  Vec ones = Vec::Ones(g.m);
  Vec dones = grad0.apply(ones);
  for (int f = 1; f < g.m; ++f) CHECK(std::abs(dones(f)) == 0.0);
  CHECK(std::abs(dones(0)) > 0.0);
}

TEST_CASE("div0/grad: zero-flux side") {
  SpaceGrid g = make_space_grid(-1.0, 2.0, 128);
  auto [div0, grad] = build_div0_grad(g);
  CHECK((Mat(grad.matrix()) + Mat(div0.matrix()).adjoint()).norm() == 0.0);

  // q == 1 on interior faces: interior divergence zero, boundary rows encode
  // the vanishing normal flux
  Vec q = Vec::Ones(g.m - 1);
  Vec dq = div0.apply(q);
  for (int i = 1; i + 1 < g.m; ++i) CHECK(std::abs(dq(i)) == 0.0);
  CHECK(std::abs(dq(0)) > 0.0);

  // smooth consistency of grad away from the ends
  Vec u(g.m);
  for (int i = 0; i < g.m; ++i) u(i) = std::exp(g.center(i));
  Vec du = grad.apply(u);
  double worst = 0.0;
  for (int f = 1; f <= g.m - 1; ++f)
    worst = std::max(worst, std::abs(du(f - 1) - std::exp(g.face(f))));
  CHECK(worst < 2.0 * g.h());
}

TEST_CASE("periodic gradient: kernel, symbol, adjoint") {
  SpaceGrid g = make_space_grid(0.0, 1.0, 64);
  SpatialOperator gp = build_periodic_grad(g);

  Vec ones = Vec::Ones(g.m);
  CHECK(gp.apply(ones).cwiseAbs().maxCoeff() == 0.0);

  // e^{2 pi i x} mode: eigenvector with symbol (1 - e^{-2 pi i h})/h
  Vec mode(g.m);
  for (int f = 0; f < g.m; ++f) mode(f) = std::exp(cx(0, 2 * std::numbers::pi * g.face(f)));
  Vec out = gp.apply(mode);
  cx symbol = (1.0 - std::exp(cx(0, -2 * std::numbers::pi * g.h()))) / g.h();
  CHECK((out - symbol * mode).cwiseAbs().maxCoeff() < 1e-12 * std::abs(symbol));

  SpatialOperator dp = build_periodic_div(g);
  CHECK((Mat(dp.matrix()) + Mat(gp.matrix()).adjoint()).norm() == 0.0);
}

TEST_CASE("inclusion chain: periodic rows agree with interior rows") {
  SpaceGrid g = make_space_grid(0.0, 1.0, 32);
  auto [grad0, div] = build_grad0_div(g);
  auto [div0, grad] = build_div0_grad(g);
  SpatialOperator gp = build_periodic_grad(g);

  Mat G0 = Mat(grad0.matrix());
  Mat GP = Mat(gp.matrix());
  Mat GR = Mat(grad.matrix());
  // interior faces f = 1..m-1: all three stencils coincide
  for (int f = 1; f < g.m; ++f) {
    CHECK((G0.row(f) - GP.row(f)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((GR.row(f - 1) - GP.row(f)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("skew blocks are exactly skew-Hermitian") {
  SpaceGrid g = make_space_grid(0.0, 1.0, 48);
  auto [grad0, div] = build_grad0_div(g);
  SpMat A = skew_block(grad0);
  Mat D = Mat(A);
  CHECK((D + D.adjoint()).norm() == 0.0);

  Vec x = random_vec(static_cast<int>(A.rows()), 9);
  CHECK(std::abs((x.dot(D * x)).real()) < 1e-14 * x.squaredNorm() * D.norm());

  auto [div0, grad] = build_div0_grad(g);
  SpMat Aheat = skew_block(grad);
  Mat Dh = Mat(Aheat);
  CHECK((Dh + Dh.adjoint()).norm() == 0.0);
}

TEST_CASE("robin block: beta = i is exactly skew, general beta accretive") {
  SpaceGrid g = make_space_grid(0.0, 1.0, 32);
  SpMat R = robin_block(g);
  Mat D = Mat(R);
  CHECK((D + D.adjoint()).norm() < 1e-12 * D.norm());

  SpMat R2 = robin_block(g, cx(-0.7, 0.2));
  Mat D2 = Mat(R2);
  for (unsigned seed : {1u, 2u, 3u}) {
    Vec x = random_vec(static_cast<int>(R2.rows()), seed);
    CHECK((x.dot(D2 * x)).real() >= -1e-12 * x.squaredNorm() * D2.norm());
  }
}

TEST_CASE("range compression: sigma_min of grad0 approaches pi") {
  SpaceGrid g = make_space_grid(0.0, 1.0, 512);
  auto [grad0, div] = build_grad0_div(g);
  RangeCompression rc = range_compress(grad0.matrix());
  CHECK(rc.rank == g.m);
  CHECK(rc.sigma_min == doctest::Approx(std::numbers::pi).epsilon(0.005));

  // Poincare: ||u|| <= (b-a) ||grad0 u|| for all probes
  for (unsigned seed : {4u, 5u, 6u}) {
    Vec u = random_vec(g.m, seed);
    CHECK(u.norm() <= (g.b - g.a) * grad0.apply(u).norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("range compression of a unitary gives sigma_min = 1") {
  Mat Q = Mat::Identity(8, 8);
  Q(0, 0) = cx(0, 1);  // still unitary
  SpMat qs = Q.sparseView();
  RangeCompression rc = range_compress(qs);
  CHECK(rc.sigma_min == doctest::Approx(1.0));
  CHECK(rc.inv_norm == doctest::Approx(1.0));

  SpMat zero(4, 4);
  CHECK_THROWS_AS((void)range_compress(zero), std::domain_error);
}

TEST_CASE("trace_1d extrapolates endpoint values") {
  SpaceGrid g = make_space_grid(0.0, 1.0, 64);
  Vec ones = Vec::Ones(g.m);
  CHECK(std::abs(trace_1d(ones, g, Side::Right) - 1.0) < 1e-14);
  CHECK(std::abs(trace_1d(ones, g, Side::Left) - 1.0) < 1e-14);

  Vec lin(g.m);
  for (int i = 0; i < g.m; ++i) lin(i) = g.center(i);
  CHECK(std::abs(trace_1d(lin, g, Side::Right) - 1.0) < 1e-12);
  CHECK(std::abs(trace_1d(lin, g, Side::Left) - 0.0) < 1e-12);

  // trace bound |gamma u|^2 <= 2 ||u|| ||grad u|| + O(h) on smooth probes
  auto [div0, grad] = build_div0_grad(g);
  Vec u(g.m);
  for (int i = 0; i < g.m; ++i) u(i) = std::cos(2.0 * g.center(i)) + 0.5;
  double tr = std::abs(trace_1d(u, g, Side::Right));
  double l2 = u.norm() * std::sqrt(g.h());
  double gl2 = grad.apply(u).norm() * std::sqrt(g.h());
  CHECK(tr * tr <= 2.0 * l2 * gl2 + 10.0 * g.h());
}

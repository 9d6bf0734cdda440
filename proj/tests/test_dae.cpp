#include "evoeq/dae.hpp"

#include <Eigen/Dense>

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace evoeq;

namespace {

MatrixPair paper_pair() {
  Mat m0(2, 2), m1(2, 2);
  m0 << 1, 1, 0, 0;
  m1 = Mat::Identity(2, 2);
  return {m0, m1};
}

Mat random_invertible(int n, std::mt19937& gen) {
  std::normal_distribution<double> dist;
  while (true) {
    Mat q(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q(i, j) = cx(dist(gen), dist(gen));
    Eigen::BDCSVD<Mat> svd(q);
    if (svd.singularValues()(n - 1) > 0.1) return q;
  }
}

// plants a regular pair with known degree k and nilpotency structure; the
// core eigenvalues live in a controlled annulus so oracles stay conditioned
MatrixPair planted_pair(int n, int k, int nilpotency, std::mt19937& gen,
                        Mat* consistent_basis = nullptr) {
  std::normal_distribution<double> dist;
  std::uniform_real_distribution<double> mag(0.6, 1.8), ang(0.0, 6.28);
  Mat C = Mat::Zero(k, k);
  if (k > 0) {
    Mat qc = random_invertible(k, gen);
    Vec ev(k);
    for (int i = 0; i < k; ++i) ev(i) = mag(gen) * std::exp(cx(0.0, ang(gen)));
    C = qc * ev.asDiagonal() * qc.partialPivLu().inverse();
  }
  Mat N = Mat::Zero(n - k, n - k);
  for (int i = 0; i + 1 < n - k && i + 1 < nilpotency; ++i) N(i, i + 1) = 1.0;
  Mat P = random_invertible(n, gen);
  Mat Q = random_invertible(n, gen);
  Mat d0 = Mat::Zero(n, n);
  d0.topLeftCorner(k, k).setIdentity();
  d0.bottomRightCorner(n - k, n - k) = N;
  Mat d1 = Mat::Zero(n, n);
  d1.topLeftCorner(k, k) = C;
  d1.bottomRightCorner(n - k, n - k).setIdentity();
  Mat pinv = P.partialPivLu().inverse();
  Mat qinv = Q.partialPivLu().inverse();
  if (consistent_basis) *consistent_basis = orthonormal_range(Q.leftCols(k));
  return {pinv * d0 * qinv, pinv * d1 * qinv};
}

}  // namespace

TEST_CASE("pair spectrum: golden cases") {
  PairSpectrum s = pair_spectrum(paper_pair());
  REQUIRE(!s.whole_plane);
  REQUIRE(s.points.size() == 1);
  CHECK(std::abs(s.points[0] - cx(-1.0)) < 1e-10);

  // (I, -A): spectrum of A
  std::mt19937 gen(3);
  Mat A = random_invertible(3, gen);
  PairSpectrum sa = pair_spectrum({Mat::Identity(3, 3), Mat(-A)});
  Eigen::ComplexEigenSolver<Mat> es(A);
  REQUIRE(sa.points.size() == 3);
  for (cx z : sa.points) {
    double best = 1e300;
    for (int i = 0; i < 3; ++i) best = std::min(best, std::abs(z - es.eigenvalues()(i)));
    CHECK(best < 1e-8);
  }

  // M0 = 0 and M1 singular: the determinant vanishes identically
  Mat sing = Mat::Zero(2, 2);
  sing(0, 0) = 1.0;
  PairSpectrum sw = pair_spectrum({Mat::Zero(2, 2), sing});
  CHECK(sw.whole_plane);
  CHECK(!pair_regular({Mat::Zero(2, 2), sing}));
}

TEST_CASE("weierstrass form: paper example, ODE pair, planted pairs") {
  WeierstrassData w = weierstrass_form(paper_pair());
  CHECK(w.k == 1);
  CHECK(w.N.rows() == 1);
  CHECK(std::abs(w.N(0, 0)) < 1e-10);
  CHECK(std::abs(w.C(0, 0) - cx(1.0)) < 1e-9);  // similarity-invariant 1x1 block
  CHECK(w.residual0 < 1e-9);
  CHECK(w.residual1 < 1e-9);

  std::mt19937 gen(11);
  Mat m1 = random_invertible(4, gen);
  WeierstrassData wo = weierstrass_form({Mat::Identity(4, 4), m1});
  CHECK(wo.k == 4);
  CHECK(wo.residual0 < 1e-9);
  CHECK(wo.residual1 < 1e-9);

  for (unsigned seed : {21u, 22u, 23u, 24u}) {
    std::mt19937 g2(seed);
    int n = 3 + static_cast<int>(seed % 4);
    int k = 1 + static_cast<int>(seed % 3);
    // semisimple zero cluster: residuals at roundoff level
    MatrixPair p = planted_pair(n, k, 1, g2);
    WeierstrassData wr = weierstrass_form(p);
    double scale = 1.0 + p.M0.norm() + p.M1.norm();
    CHECK(wr.k == k);
    CHECK(wr.residual0 < 1e-9 * scale);
    CHECK(wr.residual1 < 1e-9 * scale);
  }
  // defective zero cluster: the split cannot beat the eigenvalue scatter
  // ||E|| eps^{1/p}, but the residual must stay within that budget
  {
    std::mt19937 g2(99);
    MatrixPair p = planted_pair(5, 2, 2, g2);
    WeierstrassData wr = weierstrass_form(p);
    double scale = 1.0 + p.M0.norm() + p.M1.norm();
    CHECK(wr.k == 2);
    CHECK(wr.residual0 < 1e-5 * scale);
    CHECK(wr.residual1 < 1e-5 * scale);
  }
}

TEST_CASE("pair index: convention and resolvent cross-check") {
  CHECK(pair_index({Mat::Identity(3, 3), Mat::Random(3, 3)}) == 1);
  CHECK(pair_index(paper_pair()) == 1);

  // nilpotent Jordan pair: index 3
  Mat j3 = Mat::Zero(3, 3);
  j3(0, 1) = 1.0;
  j3(1, 2) = 1.0;
  CHECK(pair_index({j3, Mat::Identity(3, 3)}) == 3);

  std::mt19937 gen(31);
  MatrixPair p = planted_pair(5, 2, 3, gen);
  CHECK(pair_index(p) == 3);
}

TEST_CASE("wong sequence: nesting, stabilization, golden subspace") {
  WongData w = wong_sequence(paper_pair());
  const Mat& stab = w.bases.back();
  REQUIRE(stab.cols() == 1);
  // IV = span{(1,0)}
  CHECK(std::abs(stab(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(stab(1, 0)) < 1e-12);
  CHECK(w.stabilization <= 1);

  std::mt19937 gen(41);
  Mat m1 = random_invertible(4, gen);
  WongData wi = wong_sequence({Mat::Identity(4, 4), m1});
  CHECK(wi.bases.back().cols() == 4);

  // nesting and stabilization at the index on a planted pair
  MatrixPair p = planted_pair(5, 2, 2, gen);
  WongData wp = wong_sequence(p);
  for (std::size_t j = 1; j < wp.bases.size(); ++j)
    CHECK(wp.bases[j].cols() <= wp.bases[j - 1].cols());
  CHECK(wp.stabilization <= pair_index(p));
}

TEST_CASE("consistent subspace agrees between Weierstrass and Wong routes") {
  Mat basis = consistent_subspace(paper_pair());
  REQUIRE(basis.cols() == 1);
  CHECK(std::abs(basis(1, 0)) < 1e-10);

  std::mt19937 gen(51);
  Mat m1 = random_invertible(3, gen);
  CHECK(consistent_subspace({Mat::Identity(3, 3), m1}).cols() == 3);
  // purely algebraic pair: IV = {0}
  CHECK(consistent_subspace({Mat::Zero(2, 2), Mat::Identity(2, 2)}).cols() == 0);

  Mat planted;
  MatrixPair p = planted_pair(6, 3, 2, gen, &planted);
  Mat got = consistent_subspace(p);
  REQUIRE(got.cols() == 3);
  CHECK(subspace_gap(got, planted) < 1e-8);
}

TEST_CASE("drazin inverse: golden cases and defining identities") {
  std::mt19937 gen(61);
  // invertible: Drazin = inverse
  Mat E = random_invertible(4, gen);
  Mat X = drazin(E);
  CHECK((X - E.partialPivLu().inverse()).norm() < 1e-10 * X.norm());

  // nilpotent: Drazin = 0
  Mat j2 = Mat::Zero(3, 3);
  j2(0, 1) = 1.0;
  CHECK(drazin(j2).norm() == 0.0);

  // diag(2, 0) -> diag(1/2, 0)
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2.0;
  Mat xd = drazin(d);
  CHECK(std::abs(xd(0, 0) - cx(0.5)) < 1e-14);
  CHECK(std::abs(xd(1, 1)) < 1e-14);

  // identities on a mixed bag of random matrices
  for (unsigned seed = 0; seed < 25; ++seed) {
    std::mt19937 g2(100 + seed);
    int n = 2 + static_cast<int>(seed % 5);
    Mat M;
    if (seed % 3 == 0) {
      M = random_invertible(n, g2);
    } else {
      int k = static_cast<int>(seed % static_cast<unsigned>(n));
      Mat planted;
      MatrixPair p = planted_pair(n, k, 2, g2, &planted);
      M = p.M0;  // singular with a genuine nilpotent part
    }
    Mat XM = drazin(M);
    double se = std::max(1.0, M.norm()), sx = std::max(1.0, XM.norm());
    CHECK((M * XM - XM * M).norm() < 1e-10 * se * sx);
    CHECK((XM * M * XM - XM).norm() < 1e-10 * sx);
    int k = 1;
    Mat power = M;
    while (k < n + 1) {
      Mat next = XM * power * M - power;
      if (next.norm() < 1e-10 * std::max(1.0, power.norm() * se)) break;
      power = power * M;
      ++k;
    }
    CHECK(k <= n);
  }
}

TEST_CASE("drazin limit formula agrees with the split route") {
  // The limit formula is a useful independent oracle only where it is well
  // conditioned: index-1 matrices with a controlled core spectrum (for a
  // defective zero the O(rho^2) term and the eps/rho roundoff pinch it).
  for (unsigned seed : {1u, 2u, 3u}) {
    std::mt19937 g2(200 + seed);
    MatrixPair p = planted_pair(4, 2, 1, g2);
    Mat E = p.M0;
    Mat X = drazin(E);
    // X = lim (E^2 + rho)^{-1} E; the O(rho) term is removed by one
    // Richardson step
    auto at = [&](double rho) {
      return Mat((Mat(E * E) + rho * Mat::Identity(4, 4)).partialPivLu().solve(E));
    };
    // second-order Richardson in rho at nodes {1, 2, 4} * 1e-6
    Mat approx = (8.0 * at(1e-6) - 6.0 * at(2e-6) + at(4e-6)) / 3.0;
    CHECK((approx - X).norm() < 1e-8 * std::max(1.0, X.norm()));
  }
}

TEST_CASE("dae_solve: paper example matches (x e^{-t}, 0)") {
  Vec u0(2);
  u0 << 1.0, 0.0;
  DaeTrajectory traj = dae_solve(paper_pair(), u0, 4.0, 1024);
  double worst = 0.0;
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    worst = std::max(worst, std::abs(traj.states(0, j) - std::exp(-traj.times[j])));
    worst = std::max(worst, std::abs(traj.states(1, j)));
  }
  CHECK(worst < 1e-8);

  Vec zero = Vec::Zero(2);
  DaeTrajectory tz = dae_solve(paper_pair(), zero, 1.0, 16);
  CHECK(tz.states.norm() == 0.0);

  Vec bad(2);
  bad << 0.0, 1.0;
  CHECK_THROWS_AS((void)dae_solve(paper_pair(), bad, 1.0, 16), inconsistent_initial_value);
}

TEST_CASE("dae_solve: RLC circuit closed form (critically damped)") {
  // state (i, v_C, v_L), R = 2, L = C = 1:
  //   i' - v_L = 0, v_C' - i = 0, 2 i + v_C + v_L = 0
  Mat m0 = Mat::Zero(3, 3), m1 = Mat::Zero(3, 3);
  m0(0, 0) = 1.0;  // L i'
  m0(1, 1) = 1.0;  // C v_C'
  m1(0, 2) = -1.0;
  m1(1, 0) = -1.0;
  m1(2, 0) = 2.0;
  m1(2, 1) = 1.0;
  m1(2, 2) = 1.0;
  MatrixPair rlc{m0, m1};

  PairSpectrum s = pair_spectrum(rlc);
  REQUIRE(!s.whole_plane);
  for (cx z : s.points) CHECK(std::abs(z - cx(-1.0)) < 1e-7);

  double i0 = 1.0, vc0 = -0.5;
  Vec u0(3);
  u0 << i0, vc0, -2.0 * i0 - vc0;
  DaeTrajectory traj = dae_solve(rlc, u0, 6.0, 2048);
  // closed form: d/dt (i, v_C) = [[-2,-1],[1,0]] (i, v_C) = (-I + J) with
  // J^2 = 0, so e^{tA} = e^{-t} (I + t J)
  double worst = 0.0;
  for (std::size_t j = 0; j < traj.times.size(); j += 13) {
    double t = traj.times[j];
    double it = std::exp(-t) * (i0 + t * (-i0 - vc0));
    double vct = std::exp(-t) * (vc0 + t * (i0 + vc0));
    double vlt = -2.0 * it - vct;
    worst = std::max(worst, std::abs(traj.states(0, j) - it));
    worst = std::max(worst, std::abs(traj.states(1, j) - vct));
    worst = std::max(worst, std::abs(traj.states(2, j) - vlt));
  }
  CHECK(worst < 1e-8);
  CHECK(pair_index(rlc) == 1);
  CHECK(consistent_subspace(rlc).cols() == 2);
}

TEST_CASE("commuting reduction preserves consistent space and trajectories") {
  MatrixPair p = paper_pair();
  MatrixPair red = commuting_reduction(p);
  CHECK((red.M0 * red.M1 - red.M1 * red.M0).norm() < 1e-10);
  CHECK(subspace_gap(consistent_subspace(p), consistent_subspace(red)) < 1e-8);

  Vec u0(2);
  u0 << 1.0, 0.0;
  DaeTrajectory a = dae_solve(p, u0, 2.0, 256);
  DaeTrajectory b = dae_solve(red, u0, 2.0, 256);
  CHECK((a.states - b.states).cwiseAbs().maxCoeff() < 1e-8);

  // an already commuting pair keeps its consistent space
  Mat d0 = Mat::Zero(2, 2), d1 = Mat::Identity(2, 2);
  d0(0, 0) = 1.0;
  MatrixPair diag{d0, d1};
  MatrixPair dred = commuting_reduction(diag);
  CHECK(subspace_gap(consistent_subspace(diag), consistent_subspace(dred)) < 1e-10);

  std::mt19937 gen(81);
  CHECK((commuting_reduction({Mat::Identity(3, 3), random_invertible(3, gen)}).M0 *
             commuting_reduction({Mat::Identity(3, 3), random_invertible(3, gen)}).M1)
            .allFinite());
}

TEST_CASE("laplace resolvent formula holds for computed trajectories") {
  Vec u0(2);
  u0 << 1.0, 0.0;
  DaeTrajectory traj = dae_solve(paper_pair(), u0, 12.0, 4096);
  double dev = laplace_solution_check(paper_pair(), u0, traj, 2.0);
  CHECK(dev < 1e-6);

  Vec zero = Vec::Zero(2);
  DaeTrajectory tz = dae_solve(paper_pair(), zero, 12.0, 4096);
  CHECK(laplace_solution_check(paper_pair(), zero, tz, 2.0) < 1e-12);

  // random commuting regular pairs: Drazin-flow trajectory vs the resolvent
  for (unsigned seed : {5u, 6u}) {
    std::mt19937 gen(300 + seed);
    Mat q = random_invertible(3, gen);
    Mat qinv = q.partialPivLu().inverse();
    Vec d0(3), d1(3);
    d0 << 1.0, 1.0, 0.0;
    d1 << cx(1.0, 0.3), cx(2.0, -0.1), 1.0;
    MatrixPair p{q * d0.asDiagonal() * qinv, q * d1.asDiagonal() * qinv};
    Mat basis = consistent_subspace(p);
    Vec u = basis * Vec::Random(basis.cols());
    DaeTrajectory t = dae_solve(p, u, 14.0, 8192);
    CHECK(laplace_solution_check(p, u, t, 3.0) < 1e-5);
  }
}

TEST_CASE("degree of det(z M0 + M1) equals the Weierstrass degree") {
  for (unsigned seed : {7u, 8u, 9u}) {
    std::mt19937 gen(400 + seed);
    int n = 4 + static_cast<int>(seed % 3);
    int k = 1 + static_cast<int>(seed % 4);
    MatrixPair p = planted_pair(n, k, 2, gen);
    // log-log slope of |det| along a real ray
    auto det_at = [&](double r) {
      return std::abs(Eigen::PartialPivLU<Mat>(r * p.M0 + p.M1).determinant());
    };
    double slope = (std::log(det_at(1e4)) - std::log(det_at(1e2))) / (std::log(1e4) - std::log(1e2));
    CHECK(slope == doctest::Approx(static_cast<double>(k)).epsilon(0.02));
    CHECK(weierstrass_form(p).k == k);
  }
}

TEST_CASE("M0 is injective on the consistent subspace") {
  for (unsigned seed : {1u, 2u, 3u}) {
    std::mt19937 gen(500 + seed);
    MatrixPair p = planted_pair(5, 3, 2, gen);
    Mat basis = consistent_subspace(p);
    Mat restricted = p.M0 * basis;
    Eigen::BDCSVD<Mat> svd(restricted);
    CHECK(svd.singularValues()(svd.singularValues().size() - 1) > 1e-8);
  }
}

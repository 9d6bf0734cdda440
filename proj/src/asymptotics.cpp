#include "evoeq/asymptotics.hpp"

#include "evoeq/evo.hpp"
#include "evoeq/ode.hpp"
#include "evoeq/time_ops.hpp"
#include "evoeq/transform.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>

namespace evoeq {

double decay_rate_bound(const StabilitySetup& s) {
  if (!(s.c0 > 0.0) || !(s.c1 > 0.0) || !(s.rho1 > 0.0) || !(s.c_inv_norm > 0.0))
    throw no_certificate("decay_rate_bound: setup constants must be positive");
  double parabolic = s.c1 / (s.m1_sup * s.m1_sup * s.norm_m0 * s.c_inv_norm * s.c_inv_norm);
  return std::min(s.rho1, parabolic);
}

StabilitySetup make_stability_setup(const Mat& M0, const MaterialLaw& M1law, double rho1,
                                    double c_inv_norm) {
  StabilitySetup s;
  s.rho1 = rho1;
  s.c_inv_norm = c_inv_norm;
  if ((M0 - M0.adjoint()).norm() > 1e-10 * std::max(1.0, M0.norm()))
    throw no_certificate("stability setup: M0 not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(M0, Eigen::EigenvaluesOnly);
  s.c0 = es.eigenvalues()(0);
  if (!(s.c0 > 0.0)) throw no_certificate("stability setup: M0 not strictly positive");
  s.norm_m0 = es.eigenvalues()(es.eigenvalues().size() - 1);

  // sample Re M1 and ||M1|| on the half-plane Re z > -rho1
  std::vector<cx> pts;
  double edge = std::isfinite(rho1) ? -rho1 * (1.0 - 1e-6) : -64.0;
  for (double re : {edge, edge / 2.0, 0.0, 1.0, 16.0, 256.0}) {
    for (double im : {0.0, 0.5, 4.0, 64.0, 1024.0}) {
      pts.emplace_back(re, im);
      if (im != 0.0) pts.emplace_back(re, -im);
    }
  }
  double c1 = std::numeric_limits<double>::infinity();
  double sup = 0.0;
  for (cx z : pts) {
    SpMat v = evaluate(M1law, z);
    c1 = std::min(c1, lambda_min_hermitian_part(v));
    sup = std::max(sup, operator_norm_estimate(v));
  }
  if (!(c1 > 0.0))
    throw no_certificate("stability setup: Re M1(z) not positive on the sampled half-plane");
  s.c1 = c1;
  s.m1_sup = sup;
  return s;
}

DecayFit measure_decay(const WeightedSignal& u, double t_begin, double t_end) {
  const TimeGrid& g = u.grid();
  std::vector<double> ts, ys;
  for (int j = 0; j < g.n; ++j) {
    double t = g.time(j);
    if (t < t_begin || t > t_end) continue;
    double norm = u.values().col(j).norm();
    if (norm < 1e-300) continue;
    ts.push_back(t);
    ys.push_back(std::log(norm));
  }
  if (ts.size() < 8)
    throw underflow_window("measure_decay: too few usable samples in the fit window");
  const int n = static_cast<int>(ts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += ts[i];
    sy += ys[i];
    sxx += ts[i] * ts[i];
    sxy += ts[i] * ys[i];
  }
  double denom = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = ys[i] - slope * ts[i] - intercept;
    rss += r * r;
  }
  double se = n > 2 ? std::sqrt(rss / (n - 2) * n / denom) : 0.0;
  DecayFit fit;
  fit.rate = -slope;
  fit.half_width = 1.96 * se;
  fit.samples = n;
  return fit;
}

std::vector<WeakLimitRow> weak_limit_mean(const std::function<cx(double)>& f,
                                          const std::function<cx(double)>& g, double lo,
                                          double hi, const std::vector<int>& n_list,
                                          int quad_points) {
  double dx = (hi - lo) / quad_points;
  cx mean_f = 0.0;
  int unit_points = 1 << 14;
  for (int i = 0; i < unit_points; ++i) mean_f += f((i + 0.5) / unit_points);
  mean_f /= static_cast<double>(unit_points);

  cx int_g = 0.0;
  for (int i = 0; i < quad_points; ++i) int_g += g(lo + (i + 0.5) * dx);
  int_g *= dx;

  cx limit = mean_f * int_g;
  std::vector<WeakLimitRow> rows;
  for (int n : n_list) {
    cx pairing = 0.0;
    for (int i = 0; i < quad_points; ++i) {
      double x = lo + (i + 0.5) * dx;
      pairing += f(n * x) * g(x);
    }
    pairing *= dx;
    rows.push_back({n, pairing, std::abs(pairing - limit)});
  }
  return rows;
}

namespace {

SpMat periodic_grad_matrix(int m) {
  return build_periodic_grad(make_space_grid(0.0, 1.0, m)).matrix();
}

Vec solve_cell_system(const SpMat& G, const Vec& a, const Vec& rhs) {
  const int m = static_cast<int>(a.size());
  // K = G^* diag(a) G is singular on constants; the rank-one regularization
  // leaves the mean-zero solution untouched since rhs is orthogonal to 1
  SpMat K = SpMat(G.adjoint() * SpMat(a.asDiagonal() * G));
  Mat ones = Mat::Constant(m, m, cx(1.0 / m));
  Mat Kd = Mat(K) + ones;
  return Kd.partialPivLu().solve(rhs);
}

}  // namespace

CellSolution cell_problem_1d(const Vec& a_faces, cx xi) {
  const int m = static_cast<int>(a_faces.size());
  for (int i = 0; i < m; ++i)
    if (!(a_faces(i).real() > 0.0))
      throw invalid_coefficient("cell_problem_1d: Re a must be strictly positive");
  SpMat G = periodic_grad_matrix(m);
  Vec axi = a_faces * xi;
  Vec rhs = -(G.adjoint() * axi);
  Vec w = solve_cell_system(G, a_faces, rhs);
  CellSolution out;
  out.corrector = G * w + Vec::Constant(m, xi);
  Vec flux = a_faces.cwiseProduct(out.corrector);
  out.residual = (G.adjoint() * flux).norm();
  return out;
}

cx homogenized_coefficient_1d(const Vec& a_faces) {
  CellSolution cs = cell_problem_1d(a_faces, 1.0);
  return a_faces.cwiseProduct(cs.corrector).mean();
}

Mat homogenized_matrix_2d(const Cell2D& cell) {
  const int m = cell.m;
  const int mm = m * m;
  double h = 1.0 / m;
  // one-sided periodic differences along each axis on a collocated grid;
  // exact transposes keep the construction's algebraic identities intact
  std::vector<Eigen::Triplet<cx>> tx, ty;
  auto id = [m](int i, int j) { return i * m + j; };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      tx.emplace_back(id(i, j), id(i, j), cx(1.0 / h));
      tx.emplace_back(id(i, j), id((i + m - 1) % m, j), cx(-1.0 / h));
      ty.emplace_back(id(i, j), id(i, j), cx(1.0 / h));
      ty.emplace_back(id(i, j), id(i, (j + m - 1) % m), cx(-1.0 / h));
    }
  SpMat Gx(mm, mm), Gy(mm, mm);
  Gx.setFromTriplets(tx.begin(), tx.end());
  Gy.setFromTriplets(ty.begin(), ty.end());

  // coefficient entries sampled on the grid
  Mat a11(mm, 1), a12(mm, 1), a21(mm, 1), a22(mm, 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Mat a = cell.a((i + 0.5) * h, (j + 0.5) * h);
      if (!(0.5 * (a + a.adjoint()).eigenvalues().real().minCoeff() > 0.0))
        throw invalid_coefficient("homogenized_matrix_2d: Re a not positive definite");
      a11(id(i, j), 0) = a(0, 0);
      a12(id(i, j), 0) = a(0, 1);
      a21(id(i, j), 0) = a(1, 0);
      a22(id(i, j), 0) = a(1, 1);
    }

  auto apply_a = [&](const Vec& px, const Vec& py, Vec& ox, Vec& oy) {
    ox = a11.col(0).cwiseProduct(px) + a12.col(0).cwiseProduct(py);
    oy = a21.col(0).cwiseProduct(px) + a22.col(0).cwiseProduct(py);
  };

  // assemble K = grad^* a grad densely (m is small for cell problems)
  Mat K = Mat::Zero(mm, mm);
  {
    Mat gx = Mat(Gx), gy = Mat(Gy);
    Mat ax = a11.col(0).asDiagonal() * gx + a12.col(0).asDiagonal() * gy;
    Mat ay = a21.col(0).asDiagonal() * gx + a22.col(0).asDiagonal() * gy;
    K = gx.adjoint() * ax + gy.adjoint() * ay;
    K += Mat::Constant(mm, mm, cx(1.0 / mm));
  }
  Eigen::PartialPivLU<Mat> lu(K);

  Mat ahom = Mat::Zero(2, 2);
  for (int dir = 0; dir < 2; ++dir) {
    Vec xi_x = Vec::Constant(mm, dir == 0 ? 1.0 : 0.0);
    Vec xi_y = Vec::Constant(mm, dir == 1 ? 1.0 : 0.0);
    Vec ax, ay;
    apply_a(xi_x, xi_y, ax, ay);
    Vec rhs = -(Gx.adjoint() * ax + Gy.adjoint() * ay);
    Vec w = lu.solve(rhs);
    Vec vx = Gx * w + xi_x;
    Vec vy = Gy * w + xi_y;
    Vec fx, fy;
    apply_a(vx, vy, fx, fy);
    ahom(0, dir) = fx.mean();
    ahom(1, dir) = fy.mean();
  }
  return ahom;
}

WeightedSignal wot_limit_series(const std::vector<double>& moments,
                                const WeightedSignal& f, int K) {
  double lproxy = 0.0;
  for (std::size_t k = 0; k < moments.size(); ++k)
    lproxy = std::max(lproxy, std::pow(std::abs(moments[k]),
                                       1.0 / static_cast<double>(k + 1)));
  if (!(f.nu() > 2.0 * lproxy))
    throw contraction_violation("wot_limit_series: nu must exceed twice the moment scale");
  int terms = std::min<int>(K, static_cast<int>(moments.size()));
  return apply_multiplier(f, [&](cx z) {
    cx zi = 1.0 / z;
    cx acc = zi;  // C_0 = 1
    cx power = zi;
    for (int k = 1; k <= terms; ++k) {
      power *= -zi;
      acc += power * moments[k - 1] * zi;
    }
    return acc;
  });
}

std::vector<SweepRow> oscillation_sweep_wave(const std::function<double(double)>& a,
                                             const std::vector<int>& n_list, int cells,
                                             const TimeGrid& grid, double nu) {
  SpaceGrid sg = make_space_grid(0.0, 1.0, cells);
  SpMat A = skew_block(build_periodic_grad(sg));
  const int dim = 2 * cells;

  // smooth causal forcing with a nontrivial spatial profile
  auto forcing = [&](double t, double x) {
    double envelope = t <= 0.0 ? 0.0 : (t < 2.0 ? std::pow(std::sin(std::numbers::pi * t / 2.0), 4) : 0.0);
    return envelope * (std::sin(2.0 * std::numbers::pi * x) + 0.3);
  };
  Mat fvals = Mat::Zero(dim, grid.n);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < cells; ++i) fvals(i, j) = forcing(grid.time(j), sg.face(i));
  WeightedSignal F{grid, nu, fvals};

  auto solve_u = [&](const Vec& coeff_faces) {
    Vec minv = Vec::Ones(cells);
    Vec ainv(cells);
    for (int i = 0; i < cells; ++i) ainv(i) = 1.0 / coeff_faces(i);
    SpMat M0(dim, dim);
    for (int i = 0; i < cells; ++i) M0.insert(i, i) = 1.0;
    for (int i = 0; i < cells; ++i) M0.insert(cells + i, cells + i) = ainv(i);
    M0.makeCompressed();
    LawPtr law_m = law::constant(M0);
    EvoProblem p{law_m, A, nu, F};
    EvoSolution sol = solve(p);
    // u = integrate v spectrally (first block of the state)
    WeightedSignal v{grid, nu, sol.U.values().topRows(cells)};
    return integrate_spectral(v);
  };

  Vec a_ref(cells);
  for (int i = 0; i < cells; ++i) a_ref(i) = a(sg.face(i));
  cx ahom = homogenized_coefficient_1d(a_ref);
  WeightedSignal u_hom = solve_u(Vec::Constant(cells, ahom));
  double base = weighted_norm(u_hom);

  std::vector<SweepRow> rows;
  for (int n : n_list) {
    if (cells % n != 0)
      throw std::invalid_argument("oscillation_sweep_wave: cell count must be divisible by n");
    Vec an(cells);
    for (int i = 0; i < cells; ++i) {
      double x = sg.face(i) * n;
      an(i) = a(x - std::floor(x));
    }
    WeightedSignal un = solve_u(an);
    double err = weighted_norm(WeightedSignal{grid, nu, un.values() - u_hom.values()}) / base;
    rows.push_back({n, err});
  }
  return rows;
}

double bessel_J(double s) {
  constexpr int kPoints = 2048;
  double acc = 0.0;
  for (int i = 0; i < kPoints; ++i)
    acc += std::exp(s * std::sin(2.0 * std::numbers::pi * i / kPoints));
  return acc / kPoints;
}

BesselCompare ode_sin_memory(int n, int cells, const TimeGrid& grid, double nu, int K) {
  // (d/dt + sin(2 pi n x)) u = 1_{[0,inf)}: per-cell scalar spectral solves
  Mat uhat = Mat::Zero(cells, grid.n);
  Mat fvals = Mat::Zero(1, grid.n);
  for (int j = 0; j < grid.n; ++j)
    if (grid.time(j) >= 0.0) fvals(0, j) = 1.0;
  WeightedSignal f{grid, nu, fvals};
  Spectrum fh = forward(f);

  Vec b(cells);
  for (int i = 0; i < cells; ++i)
    b(i) = std::sin(2.0 * std::numbers::pi * n * (i + 0.5) / cells);

  for (int k = 0; k < grid.n; ++k) {
    cx z = fh.zpoint(k);
    for (int i = 0; i < cells; ++i) uhat(i, k) = fh.coeffs()(0, k) / (z + b(i));
  }
  WeightedSignal u = inverse(Spectrum{grid, nu, std::move(uhat)});

  // x-averaged solution vs the Bessel memory formula and the moment series
  std::vector<double> moments(K);
  constexpr int kQuad = 1 << 14;
  for (int k = 1; k <= K; ++k) {
    double acc = 0.0;
    for (int i = 0; i < kQuad; ++i)
      acc += std::pow(std::sin(2.0 * std::numbers::pi * (i + 0.5) / kQuad), k);
    moments[k - 1] = acc / kQuad;
  }
  WeightedSignal series = wot_limit_series(moments, f, K);

  // cumulative trapezoid of J over the positive grid times
  std::vector<double> jint(grid.n, 0.0);
  {
    double acc = 0.0;
    double prev = bessel_J(0.0);
    int j0 = grid_index(grid, 0.0);
    for (int j = j0 + 1; j < grid.n; ++j) {
      double cur = bessel_J(-(grid.time(j)));
      acc += 0.5 * (prev + cur) * grid.dt;
      prev = cur;
      jint[j] = acc;
    }
  }

  BesselCompare out;
  for (int j = 0; j < grid.n; ++j) {
    double t = grid.time(j);
    if (t < 0.1 || t > 0.55 * (grid.t0 + grid.length())) continue;
    cx avg = u.values().col(j).mean();
    out.vs_bessel = std::max(out.vs_bessel, std::abs(avg - jint[j]));
    out.vs_series = std::max(out.vs_series, std::abs(avg - series.values()(0, j)));
  }
  return out;
}

}  // namespace evoeq

#include "evoeq/evo.hpp"

#include "evoeq/time_ops.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace evoeq {

namespace {

int thread_count(const SolverConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void check_problem(const EvoProblem& p, const SolverConfig& cfg) {
  if (p.A.rows() != p.A.cols() || p.A.rows() != p.M->dim || p.F.dim() != p.M->dim)
    throw std::invalid_argument("solve: dimension mismatch between M, A and F");
  if (p.F.nu() != p.nu) throw std::invalid_argument("solve: F must be tagged with the solve rate");
  if (!(p.nu > abscissa_estimate(*p.M)))
    throw std::domain_error("solve: nu at or below the material law abscissa");
  double wrap = std::exp(-p.nu * p.F.grid().length());
  if (wrap > cfg.wrap_tol)
    throw std::invalid_argument("solve: window too short (e^{-nu T} above the wrap tolerance)");
  // A must be skew-Hermitian (Picard's hypothesis); a nonnegative Hermitian
  // part (Robin-type couplings) is also accepted since it only helps.
  SpMat sym = SpMat(p.A + SpMat(p.A.adjoint()));
  double askew = 0.0;
  for (int k = 0; k < sym.outerSize(); ++k)
    for (SpMat::InnerIterator it(sym, k); it; ++it) askew = std::max(askew, std::abs(it.value()));
  if (askew > 1e-12 * std::max(1.0, operator_norm_estimate(p.A))) {
    double lmin = lambda_min_hermitian_part(p.A);
    if (lmin < -1e-10 * std::max(1.0, operator_norm_estimate(p.A)))
      throw std::invalid_argument("solve: A is neither skew-Hermitian nor accretive");
  }
}

bool law_is_diagonal(const MaterialLaw& m, double nu, const TimeGrid& grid) {
  double wmax = std::numbers::pi / grid.dt;
  for (double w : {0.0, 0.37 * wmax, 0.93 * wmax}) {
    if (!is_diagonal(evaluate(m, cx(nu, w)))) return false;
  }
  return true;
}

Vec diagonal_of(const SpMat& a) {
  Vec d = Vec::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      if (it.row() == it.col()) d(it.row()) = it.value();
  return d;
}

struct FrequencySolveResult {
  Mat Uhat;
  std::vector<double> residual_sq;  // per-frequency ||B u - f||^2
  double min_sigma = std::numeric_limits<double>::infinity();
  cx min_sigma_at = 0.0;
};

// Per-frequency solves ((i w_k + nu) M(z_k) + A) u_k = f_k.  The diagonal
// fast path reuses one symbolic factorization: the pattern of A + I is fixed
// and only the diagonal values move with z.
FrequencySolveResult frequency_solves(const EvoProblem& p, const Spectrum& fhat,
                                      const SolverConfig& cfg) {
  const int n = fhat.bins();
  const int m = p.M->dim;
  FrequencySolveResult out;
  out.Uhat = Mat(m, n);
  out.residual_sq.assign(n, 0.0);

  const bool diag = law_is_diagonal(*p.M, p.nu, p.F.grid());
  const int nthreads = std::min(thread_count(cfg), n);

  auto worker = [&](int tid, int k_begin, int k_end) {
    Eigen::SparseLU<SpMat> lu;
    SpMat pattern;
    std::vector<int> diag_slots;
    if (diag) {
      SpMat eye(m, m);
      eye.setIdentity();
      pattern = p.A + eye;
      pattern.makeCompressed();
      lu.analyzePattern(pattern);
      // record where each diagonal entry lives in the compressed storage
      diag_slots.assign(m, -1);
      const auto* outer = pattern.outerIndexPtr();
      const auto* inner = pattern.innerIndexPtr();
      for (int col = 0; col < m; ++col)
        for (int idx = outer[col]; idx < outer[col + 1]; ++idx)
          if (inner[idx] == col) diag_slots[col] = idx;
    }

    // baseline values of A aligned with the pattern
    std::vector<cx> base;
    if (diag) {
      base.assign(pattern.nonZeros(), cx(0.0));
      SpMat awork = p.A;
      awork.makeCompressed();
      const auto* pouter = pattern.outerIndexPtr();
      const auto* pinner = pattern.innerIndexPtr();
      for (int col = 0; col < m; ++col) {
        for (SpMat::InnerIterator it(awork, col); it; ++it) {
          for (int idx = pouter[col]; idx < pouter[col + 1]; ++idx) {
            if (pinner[idx] == static_cast<int>(it.row())) {
              base[idx] = it.value();
              break;
            }
          }
        }
      }
    }

    SpMat work = pattern;
    for (int k = k_begin; k < k_end; ++k) {
      cx z = fhat.zpoint(k);
      Vec rhs = fhat.coeffs().col(k);
      Vec sol;
      if (diag) {
        Vec d = z * diagonal_of(evaluate(*p.M, z));
        cx* vals = work.valuePtr();
        std::copy(base.begin(), base.end(), vals);
        for (int i = 0; i < m; ++i) vals[diag_slots[i]] += d(i);
        lu.factorize(work);
        if (lu.info() != Eigen::Success)
          throw solve_singular("solve: singular frequency system", z, 0.0);
        sol = lu.solve(rhs);
      } else {
        SpMat B = SpMat(z * evaluate(*p.M, z)) + p.A;
        B.makeCompressed();
        Eigen::SparseLU<SpMat> full;
        full.compute(B);
        if (full.info() != Eigen::Success)
          throw solve_singular("solve: singular frequency system", z, 0.0);
        sol = full.solve(rhs);
      }
      // residual check doubles as a singularity diagnostic
      Vec resid;
      if (diag) {
        resid = work * sol - rhs;
      } else {
        SpMat B = SpMat(z * evaluate(*p.M, z)) + p.A;
        resid = B * sol - rhs;
      }
      out.residual_sq[k] = resid.squaredNorm();
      double rhs_norm = rhs.norm();
      if (rhs_norm > 0.0 && resid.norm() > 1e-6 * rhs_norm)
        throw solve_singular("solve: frequency system near-singular (certificate falsified)", z,
                             resid.norm() / rhs_norm);
      out.Uhat.col(k) = sol;
    }
    (void)tid;
  };

  if (nthreads == 1) {
    worker(0, 0, n);
  } else {
    std::vector<std::thread> pool;
    int chunk = (n + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      int lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, t, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  return out;
}

}  // namespace

EvoSolution solve(const EvoProblem& p, const SolverConfig& cfg) {
  check_problem(p, cfg);

  Spectrum fhat = forward(p.F);

  // certificate sampling includes a stride of the actual solve points
  SamplingSpec spec;
  const bool diag = law_is_diagonal(*p.M, p.nu, p.F.grid());
  int stride = diag ? 1 : std::max(cfg.cert_extra_stride, fhat.bins() / 128);
  for (int k = 0; k < fhat.bins(); k += stride) spec.extra.push_back(fhat.zpoint(k));
  PositivityCertificate cert = positivity_certificate(*p.M, p.nu, spec);

  FrequencySolveResult fs = frequency_solves(p, fhat, cfg);

  double fnorm_sq = spectrum_norm_sq(fhat);
  double resid_sq = 0.0;
  for (double r : fs.residual_sq) resid_sq += r;
  resid_sq *= 2.0 * std::numbers::pi / p.F.grid().length();

  Spectrum uhat{p.F.grid(), p.nu, std::move(fs.Uhat)};
  WeightedSignal U = inverse(uhat);

  EvoSolution sol{std::move(U), cert, 0.0, 0.0};
  double fnorm = std::sqrt(fnorm_sq);
  sol.residual = fnorm > 0.0 ? std::sqrt(resid_sq) / fnorm : 0.0;
  double unorm = weighted_norm(sol.U);
  sol.norm_ratio = fnorm > 0.0 ? unorm * cert.c_cert / fnorm : 0.0;
  if (sol.norm_ratio > 1.0 + 1e-6)
    throw solve_singular("solve: norm bound ||U|| <= ||F||/c violated (certificate falsified)",
                         cert.witness, cert.c_cert);
  if (sol.residual > cfg.residual_bound)
    throw solve_singular("solve: relative residual above the configured bound", 0.0, sol.residual);
  return sol;
}

EvoSolution solve_ivp(const SpMat& M0, const SpMat& M1, const SpMat& A, const Vec& u0,
                      double nu, const TimeGrid& grid, const SolverConfig& cfg) {
  const int m = static_cast<int>(M0.rows());
  LawPtr law_m = law::sum(law::constant(M0), law::zinv_pow(1, M1));

  Vec jump = -(M1 * u0 + A * u0);
  Mat fvals = Mat::Zero(m, grid.n);
  for (int j = 0; j < grid.n; ++j)
    if (grid.time(j) >= 0.0) fvals.col(j) = jump;
  WeightedSignal F{grid, nu, std::move(fvals)};

  EvoProblem p{law_m, A, nu, std::move(F)};
  EvoSolution sol = solve(p, cfg);

  for (int j = 0; j < grid.n; ++j)
    if (grid.time(j) >= 0.0) sol.U.values().col(j) += u0;

  if (cfg.compute_attainment) {
    // attainment of M0 U(0+) = M0 U0 in the discrete dual norm ||(1+|A|)^{-1} . ||
    Mat dense = Mat(A);
    Mat gram = dense.adjoint() * dense;
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    Mat V = es.eigenvectors();
    Eigen::VectorXd inv_scale(m);
    for (int i = 0; i < m; ++i)
      inv_scale(i) = 1.0 / (1.0 + std::sqrt(std::max(0.0, es.eigenvalues()(i))));
    auto dual_norm = [&](const Vec& x) {
      Vec y = V.adjoint() * x;
      for (int i = 0; i < m; ++i) y(i) *= inv_scale(i);
      return y.norm();
    };
    int j0 = grid_index(grid, 0.0);
    Vec defect = M0 * Vec(sol.U.values().col(j0)) - M0 * u0;
    double den = dual_norm(M0 * u0);
    sol.attainment = den > 0.0 ? dual_norm(defect) / den : dual_norm(defect);
  }
  return sol;
}

CausalityReport verify_causality(const EvoProblem& p, double a, const SolverConfig& cfg) {
  EvoSolution sol = solve(p, cfg);
  SupportReport rep = support_mass(sol.U, a);
  double wrap = std::exp(-2.0 * p.nu * p.F.grid().length()) * weighted_norm_sq(p.F);
  CausalityReport out;
  out.pre_mass = rep.pre_mass;
  out.threshold = std::max(1e-10 * weighted_norm_sq(sol.U), wrap);
  out.pass = out.pre_mass <= out.threshold;
  return out;
}

AutonomyReport verify_autonomy(const EvoProblem& p, double delta, const SolverConfig& cfg) {
  EvoSolution base = solve(p, cfg);
  EvoProblem shifted = p;
  shifted.F = shift(p.F, -delta);  // tau_{-delta} moves the support forward
  EvoSolution moved = solve(shifted, cfg);
  WeightedSignal expect = shift(base.U, -delta);
  AutonomyReport out;
  double den = weighted_norm(moved.U);
  out.discrepancy =
      den > 0.0
          ? weighted_norm(WeightedSignal{p.F.grid(), p.nu, moved.U.values() - expect.values()}) / den
          : 0.0;
  out.pass = out.discrepancy < 1e-8;
  return out;
}

NuIndependenceReport verify_nu_independence(const EvoProblem& p, double nu2,
                                            const SolverConfig& cfg) {
  EvoSolution a = solve(p, cfg);
  EvoProblem q = p;
  q.nu = nu2;
  q.F = p.F.retagged(nu2);
  EvoSolution b = solve(q, cfg);
  double hi = std::max(p.nu, nu2);
  NuIndependenceReport out;
  double den = weighted_norm(b.U.retagged(hi));
  out.discrepancy =
      den > 0.0
          ? weighted_norm(WeightedSignal{p.F.grid(), hi, a.U.values() - b.U.values()}) / den
          : 0.0;
  out.pass = out.discrepancy < 1e-6;
  return out;
}

// ---- presets ---------------------------------------------------------

namespace {

std::function<cx(double)> const_profile(cx v) {
  return [v](double) { return v; };
}

Vec sample_profile(const std::function<cx(double)>& f, const std::vector<double>& xs) {
  Vec out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out(static_cast<int>(i)) = f(xs[i]);
  return out;
}

std::vector<double> cell_centers(const SpaceGrid& g) {
  std::vector<double> xs(g.m);
  for (int i = 0; i < g.m; ++i) xs[i] = g.center(i);
  return xs;
}

std::vector<double> interior_faces(const SpaceGrid& g) {
  std::vector<double> xs(g.m - 1);
  for (int f = 1; f < g.m; ++f) xs[f - 1] = g.face(f);
  return xs;
}

std::vector<double> all_faces(const SpaceGrid& g) {
  std::vector<double> xs(g.m + 1);
  for (int f = 0; f <= g.m; ++f) xs[f] = g.face(f);
  return xs;
}

SpMat diag_sparse(const Vec& d) {
  SpMat out(d.size(), d.size());
  for (int i = 0; i < d.size(); ++i)
    if (d(i) != cx(0.0)) out.insert(i, i) = d(i);
  out.makeCompressed();
  return out;
}

SpMat block_diag_sparse(const Vec& top, const Vec& bottom) {
  int m = static_cast<int>(top.size()), q = static_cast<int>(bottom.size());
  SpMat out(m + q, m + q);
  for (int i = 0; i < m; ++i)
    if (top(i) != cx(0.0)) out.insert(i, i) = top(i);
  for (int i = 0; i < q; ++i)
    if (bottom(i) != cx(0.0)) out.insert(m + i, m + i) = bottom(i);
  out.makeCompressed();
  return out;
}

Vec inverted(const Vec& d, const char* who) {
  Vec out(d.size());
  for (int i = 0; i < d.size(); ++i) {
    if (std::abs(d(i)) < 1e-14)
      throw std::invalid_argument(std::string(who) + ": coefficient vanishes at a sample point");
    out(i) = 1.0 / d(i);
  }
  return out;
}

void require_positive_real(const Vec& d, const char* hypothesis) {
  for (int i = 0; i < d.size(); ++i)
    if (!(d(i).real() > 0.0))
      throw std::invalid_argument(std::string(hypothesis) +
                                  " violated: Re coefficient not strictly positive at a sample");
}

}  // namespace

double Preset::recommended_nu(const TimeGrid& grid) const {
  double from_wrap = 27.7 / grid.length();  // e^{-nu T} < 1e-12
  return std::max(nu_cert_onset, from_wrap);
}

Preset make_preset(const std::string& name, const PresetParams& params) {
  Preset out;
  out.name = name;
  out.space = params.space;
  const SpaceGrid& g = params.space;
  auto a_prof = params.a ? params.a : const_profile(1.0);

  auto [grad0, div_full] = build_grad0_div(g);
  auto [div0, grad] = build_div0_grad(g);

  auto finish = [&](double nu_start) {
    // doubling search for the smallest certified rate
    double nu = std::max(nu_start, 1e-3);
    for (int it = 0; it < 48; ++it) {
      if (nu > abscissa_estimate(*out.M)) {
        PositivityCertificate c = try_positivity_certificate(*out.M, nu);
        if (c.ok) {
          out.nu_cert_onset = nu;
          return;
        }
      }
      nu *= 2.0;
    }
    throw no_certificate("preset " + name + ": no certified rate found by doubling search");
  };

  if (name == "heat") {
    bool dirichlet = params.bc != "neumann";
    Vec af = sample_profile(a_prof, dirichlet ? all_faces(g) : interior_faces(g));
    require_positive_real(af, "heat: Re a >= c > 0");
    int nq = static_cast<int>(af.size());
    out.A = dirichlet ? skew_block(grad0) : skew_block(grad);
    out.cells = g.m;
    out.fluxes = nq;
    out.dim = g.m + nq;
    out.M0 = block_diag_sparse(Vec::Ones(g.m), Vec::Zero(nq));
    out.M1 = block_diag_sparse(Vec::Zero(g.m), inverted(af, "heat"));
    out.M = law::sum(law::constant(*out.M0), law::zinv_pow(1, *out.M1));
    out.full_div = div_full.matrix();
    finish(0.25);
  } else if (name == "wave") {
    Vec tf = sample_profile(a_prof, all_faces(g));
    require_positive_real(tf, "wave: T = T* >= c > 0");
    out.A = SpMat(cx(-1.0) * skew_block(grad0));
    out.cells = g.m;
    out.fluxes = g.m + 1;
    out.dim = 2 * g.m + 1;
    out.M0 = block_diag_sparse(Vec::Ones(g.m), inverted(tf, "wave"));
    out.M1 = SpMat(out.dim, out.dim);
    out.M = law::sum(law::constant(*out.M0), law::zinv_pow(1, *out.M1));
    finish(0.25);
  } else if (name == "maxwell1d") {
    auto eps_prof = params.eps ? params.eps : const_profile(1.0);
    auto sig_prof = params.sigma ? params.sigma : const_profile(0.0);
    auto mu_prof = params.mu ? params.mu : const_profile(1.0);
    Vec epsv = sample_profile(eps_prof, cell_centers(g));
    Vec sigv = sample_profile(sig_prof, cell_centers(g));
    Vec muv = sample_profile(mu_prof, all_faces(g));
    require_positive_real(muv, "maxwell: mu >= c > 0");
    for (int i = 0; i < epsv.size(); ++i)
      if (epsv(i).real() < 0.0 || !(epsv(i).real() + sigv(i).real() > 0.0))
        throw std::invalid_argument(
            "maxwell: nu eps(x) + Re sigma(x) >= c fails at a sample (eddy current needs Re "
            "sigma > 0 where eps = 0)");
    out.A = skew_block(grad0);
    out.cells = g.m;
    out.fluxes = g.m + 1;
    out.dim = 2 * g.m + 1;
    out.M0 = block_diag_sparse(epsv, muv);
    out.M1 = block_diag_sparse(sigv, Vec::Zero(g.m + 1));
    out.M = law::sum(law::constant(*out.M0), law::zinv_pow(1, *out.M1));
    finish(0.25);
  } else if (name == "mixed") {
    auto s_prof = params.s ? params.s : [](double) { return 0.5; };
    Vec af = sample_profile(a_prof, all_faces(g));
    require_positive_real(af, "mixed: Re a >= c > 0");
    Vec sv(g.m + 1), ainv = inverted(af, "mixed");
    for (int f = 0; f <= g.m; ++f) {
      double s = s_prof(g.face(f));
      if (s < 0.0 || s > 1.0)
        throw std::invalid_argument("mixed: s(x) must take values in [0,1]");
      sv(f) = s;
    }
    out.A = skew_block(grad0);
    out.cells = g.m;
    out.fluxes = g.m + 1;
    out.dim = 2 * g.m + 1;
    Vec m0q(g.m + 1), m1q(g.m + 1);
    for (int f = 0; f <= g.m; ++f) {
      m0q(f) = (1.0 - sv(f)) * ainv(f);
      m1q(f) = sv(f) * ainv(f);
    }
    out.M0 = block_diag_sparse(Vec::Ones(g.m), m0q);
    out.M1 = block_diag_sparse(Vec::Zero(g.m), m1q);
    out.M = law::sum(law::constant(*out.M0), law::zinv_pow(1, *out.M1));
    finish(0.25);
  } else if (name == "dpl") {
    if (params.s_q == 0.0 || !(params.s_theta > 0.0))
      throw std::invalid_argument("dpl: requires s_q != 0 and s_theta > 0");
    double sq = params.s_q, st = params.s_theta;
    double sig = sq / st;
    int nq = g.m - 1;
    out.A = skew_block(grad);
    out.cells = g.m;
    out.fluxes = nq;
    out.dim = g.m + nq;
    // M_q(z) = (z^{-1} + s_q + s_q^2 z / 2) / (1 + s_theta z), written in
    // partial fractions over the node grammar (no bare z nodes):
    //   s_q sig/2 + sig(1 - sig/2) z^{-1}
    //   + (1 - sig(1 - sig/2))/s_theta * z^{-2} (1 + z^{-1}/s_theta)^{-1}
    Mat iq = Mat::Identity(nq, nq);
    LawPtr mq = law::sum(
        {law::constant(Mat(0.5 * sq * sig * iq)),
         law::zinv_pow(1, Mat(sig * (1.0 - 0.5 * sig) * iq)),
         law::product(law::zinv_pow(2, Mat((1.0 - sig * (1.0 - 0.5 * sig)) / st * iq)),
                      law::inverse(law::sum(law::constant(iq), law::zinv_pow(1, Mat(iq / st)))))});
    out.M = law::block_diag({law::identity(g.m), mq});
    finish(0.25);
  } else if (name == "delay-heat") {
    if (!(params.delay > 0.0)) throw std::invalid_argument("delay-heat: requires h > 0");
    auto a2_prof = params.a2 ? params.a2 : const_profile(0.25);
    Vec a1f = sample_profile(a_prof, interior_faces(g));
    Vec a2f = sample_profile(a2_prof, interior_faces(g));
    require_positive_real(a1f, "delay-heat: Re a >= c > 0 (Lemma hypothesis)");
    int nq = g.m - 1;
    out.A = skew_block(grad);
    out.cells = g.m;
    out.fluxes = nq;
    out.dim = g.m + nq;
    // M(z) = diag(1, z^{-1} (a1 + a2 e^{-z h})^{-1}); the inverse node sees
    // identity on the theta block so it stays globally invertible.
    Vec ones = Vec::Ones(g.m);
    SpMat a1big = block_diag_sparse(ones, a1f);
    SpMat a2big = block_diag_sparse(Vec::Zero(g.m), a2f);
    SpMat eq = block_diag_sparse(Vec::Zero(g.m), Vec::Ones(nq));
    LawPtr inv = law::inverse(law::sum(law::constant(a1big), law::delay(-params.delay, a2big)));
    out.M = law::sum(law::constant(block_diag_sparse(ones, Vec::Zero(nq))),
                     law::product(law::zinv_pow(1, eq), inv));
    finish(std::max(0.25, abscissa_estimate(*out.M) + 0.25));
  } else if (name == "frac-elastic") {
    if (!(params.alpha >= 0.5 && params.alpha <= 1.0))
      throw std::invalid_argument("frac-elastic: alpha must lie in [1/2, 1]");
    auto rho_prof = params.rho ? params.rho : const_profile(1.0);
    auto d_prof = params.dcoef ? params.dcoef : const_profile(1.0);
    auto c_prof = params.ccoef ? params.ccoef : const_profile(0.0);
    Vec rhov = sample_profile(rho_prof, cell_centers(g));
    Vec dv = sample_profile(d_prof, all_faces(g));
    Vec cv = sample_profile(c_prof, all_faces(g));
    require_positive_real(rhov, "frac-elastic: rho = rho* >= c > 0");
    require_positive_real(dv, "frac-elastic: D = D* >= c > 0");
    int nq = g.m + 1;
    out.A = SpMat(cx(-1.0) * skew_block(grad0));
    out.cells = g.m;
    out.fluxes = nq;
    out.dim = g.m + nq;
    // stress block (C + D z^alpha)^{-1} = z^{-alpha} (C z^{-alpha} + D)^{-1}
    SpMat eye_q = diag_sparse(Vec::Ones(nq));
    LawPtr inner = law::sum(law::frac_pow(params.alpha, diag_sparse(cv)),
                            law::constant(diag_sparse(dv)));
    LawPtr mq = law::product(law::frac_pow(params.alpha, eye_q), law::inverse(inner));
    out.M = law::block_diag({law::constant(diag_sparse(rhov)), mq});
    finish(0.25);
  } else if (name == "robin-heat") {
    Vec af = sample_profile(a_prof, interior_faces(g));
    require_positive_real(af, "robin-heat: Re a >= c > 0");
    if (-params.robin_beta.real() < -1e-12)
      throw std::invalid_argument("robin-heat: requires -Re beta >= 0");
    int nq = g.m - 1;
    out.A = robin_block(g, params.robin_beta);
    out.cells = g.m;
    out.fluxes = nq;
    out.dim = g.m + nq;
    out.M0 = block_diag_sparse(Vec::Ones(g.m), Vec::Zero(nq));
    out.M1 = block_diag_sparse(Vec::Zero(g.m), inverted(af, "robin-heat"));
    out.M = law::sum(law::constant(*out.M0), law::zinv_pow(1, *out.M1));
    finish(0.25);
  } else if (name == "memory-heat") {
    if (params.kernel.size() == 0)
      throw std::invalid_argument("memory-heat: requires a sampled causal kernel");
    if (!(params.kernel.l1_norm(0.0) < 1.0))
      throw std::invalid_argument("memory-heat: requires ||k||_{L1} < 1");
    Vec af = sample_profile(a_prof, all_faces(g));
    require_positive_real(af, "memory-heat: Re a >= c > 0");
    int nq = g.m + 1;
    out.A = skew_block(grad0);
    out.cells = g.m;
    out.fluxes = nq;
    out.dim = g.m + nq;
    // q = -(1 - k*) a grad0 theta: M(z) = diag(1, z^{-1} a^{-1} (1 - K(z))^{-1})
    Vec ones = Vec::Ones(g.m);
    SpMat eq = block_diag_sparse(Vec::Zero(g.m), Vec::Ones(nq));
    SpMat child = block_diag_sparse(ones, af);
    SampledKernel neg = params.kernel;
    neg.values = -neg.values;
    LawPtr inv = law::inverse(law::sum(law::constant(child), law::kernel_lt(neg, SpMat(eq))));
    out.M = law::sum(law::constant(block_diag_sparse(ones, Vec::Zero(nq))),
                     law::product(law::zinv_pow(1, eq), inv));
    out.full_div = div_full.matrix();
    finish(0.25);
  } else {
    throw std::invalid_argument("make_preset: unknown preset '" + name + "'");
  }
  return out;
}

double smooth_step(double t, double width) {
  if (t <= 0.0) return 0.0;
  if (t >= width) return 1.0;
  double x = t / width;
  // C^3 smoothstep
  return x * x * x * x * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
}

BvpSolution solve_neumann_bvp(const Preset& preset,
                              const std::function<cx(double)>& g_left,
                              const std::function<cx(double)>& g_right, double nu,
                              const TimeGrid& grid, const SolverConfig& cfg,
                              int lift_variant) {
  if (!preset.full_div)
    throw std::invalid_argument("solve_neumann_bvp: preset exposes no Neumann trace slot");
  const SpaceGrid& sg = preset.space;
  const int m = sg.m;
  const int nq = preset.fluxes;
  if (nq != m - 1)
    throw std::invalid_argument("solve_neumann_bvp: preset flux block is not interior-face sized");

  // causality of the boundary data
  for (double t = grid.t0; t < 0.0; t += std::max(grid.dt, -grid.t0 / 16.0)) {
    if (std::abs(g_left(t)) > 0.0 || std::abs(g_right(t)) > 0.0)
      throw std::invalid_argument("solve_neumann_bvp: boundary datum is not causal");
  }

  // face-shaped lifts with gamma_n G = (g_left, g_right): G(a) = -g_left,
  // G(b) = g_right; the interior shape is immaterial (uniqueness) and the
  // second variant exists to prove that
  Eigen::VectorXd chiL(m + 1), chiR(m + 1);
  for (int f = 0; f <= m; ++f) {
    double x = (sg.face(f) - sg.a) / (sg.b - sg.a);
    if (lift_variant == 0) {
      chiL(f) = -(1.0 - x);
      chiR(f) = x;
    } else {
      chiL(f) = -(1.0 - x) * (1.0 - x);
      chiR(f) = x * x;
    }
  }

  Mat Gfull(m + 1, grid.n);
  for (int j = 0; j < grid.n; ++j) {
    double t = grid.time(j);
    for (int f = 0; f <= m; ++f) Gfull(f, j) = g_left(t) * chiL(f) + g_right(t) * chiR(f);
  }

  // RHS = d/dt M(d/dt) (0, -G_int) + (-div G, 0)
  Mat lifted = Mat::Zero(preset.dim, grid.n);
  for (int f = 1; f < m; ++f) lifted.row(m + f - 1) = -Gfull.row(f);
  WeightedSignal lift_sig{grid, nu, std::move(lifted)};
  WeightedSignal dlift = derivative(apply(*preset.M, lift_sig));

  Mat rhs = dlift.values();
  Mat divG = Mat(*preset.full_div) * Gfull;
  rhs.topRows(m) -= divG;

  EvoProblem p{preset.M, preset.A, nu, WeightedSignal{grid, nu, std::move(rhs)}};
  EvoSolution inner = solve(p, cfg);

  BvpSolution out{WeightedSignal::zero(grid, nu, m),
                  WeightedSignal::zero(grid, nu, m + 1), 0.0, std::move(inner)};
  out.u.values() = out.inner.U.values().topRows(m);
  for (int j = 0; j < grid.n; ++j) {
    for (int f = 1; f < m; ++f)
      out.q.values()(f, j) = out.inner.U.values()(m + f - 1, j) + Gfull(f, j);
    out.q.values()(0, j) = Gfull(0, j);
    out.q.values()(m, j) = Gfull(m, j);
  }

  // trace check: gamma_n q against the data
  double worst = 0.0;
  for (int j = 0; j < grid.n; ++j) {
    double t = grid.time(j);
    worst = std::max(worst, std::abs(-out.q.values()(0, j) - g_left(t)));
    worst = std::max(worst, std::abs(out.q.values()(m, j) - g_right(t)));
  }
  out.trace_error = worst;
  return out;
}

}  // namespace evoeq

#include "noe/fermion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noe/csv.hpp"
#include "noe/integrate.hpp"

namespace noe::fermion {

namespace {

double re_trace(const Eigen::MatrixXcd& m) { return m.trace().real(); }

}  // namespace

FermionResidual residual_fermion(const Eigen::MatrixXcd& h_dot, const Eigen::MatrixXcd& s,
                                 const ContractionScheme& scheme) {
  const Eigen::Index M = h_dot.rows();
  if (s.rows() != M || s.cols() != M || scheme.f.size() != M)
    throw Error("residual_fermion: dimension mismatch");
  const Eigen::VectorXd f = scheme.f;
  const Eigen::VectorXd fb = scheme.fbar();

  // hF = h * diag(f) etc.; sFh = s diag(f) h appears twice.
  Eigen::MatrixXcd hFb_s = h_dot * (fb.asDiagonal() * s).eval();
  Eigen::MatrixXcd sF = s * f.asDiagonal();
  Eigen::MatrixXcd sFh = sF * h_dot;

  FermionResidual r;
  r.R_h = h_dot + hFb_s - sFh - sFh * (fb.asDiagonal() * s).eval();
  r.R_delta = Eigen::MatrixXcd::Identity(M, M) + fb.asDiagonal() * s - sF -
              sF * (fb.asDiagonal() * s).eval();
  return r;
}

double chemical_potential(const FermionResidual& r) {
  const double denom = re_trace(r.R_delta);
  if (std::abs(denom) < 1e-14)
    throw DegenerateConstraint(
        "number-constraint trace vanished: occupations pinned at extremal values");
  return re_trace(r.R_h) / denom;
}

Eigen::MatrixXcd residual_fermion_t(const Eigen::MatrixXcd& h_dot, const Eigen::MatrixXcd& t,
                                    const Eigen::VectorXd& f, double mu) {
  const Eigen::Index M = h_dot.rows();
  Eigen::VectorXd fb = Eigen::VectorXd::Ones(M) - f;
  Eigen::MatrixXcd ht = h_dot * t;
  Eigen::MatrixXcd th = t * h_dot;
  Eigen::MatrixXcd R = fb.asDiagonal() * h_dot * f.asDiagonal();
  R += fb.asDiagonal() * ht - th * f.asDiagonal() - th * t;
  Eigen::MatrixXcd Rn = Eigen::MatrixXcd((fb.cwiseProduct(f)).asDiagonal());
  Rn += fb.asDiagonal() * t - t * f.asDiagonal() - t * t;
  return R - mu * Rn;
}

Eigen::MatrixXcd density_matrix_fermion(const Eigen::MatrixXcd& s,
                                        const ContractionScheme& scheme) {
  const Eigen::VectorXd f = scheme.f;
  const Eigen::VectorXd fb = scheme.fbar();
  // t_pq = f_q fbar_p s_pq
  Eigen::MatrixXcd D = fb.asDiagonal() * s * f.asDiagonal();
  D += Eigen::MatrixXcd(f.cast<Complex>().asDiagonal());
  return D;
}

namespace {

struct FlowContext {
  const Eigen::MatrixXcd* h;
  const ContractionScheme* scheme;
  double h0_flow;  // sum_p f_p h_pp (model offset excluded from the flow)
  int n_el;
  bool hermitize;
  mutable double last_mu = 0.0;
};

// State packing: [s (M^2 entries, column-major), s0, mu_integral].
Eigen::VectorXcd pack(const Eigen::MatrixXcd& s, double s0, double mu_int) {
  const Eigen::Index M = s.rows();
  Eigen::VectorXcd y(M * M + 2);
  y.head(M * M) = Eigen::Map<const Eigen::VectorXcd>(s.data(), M * M);
  y[M * M] = s0;
  y[M * M + 1] = mu_int;
  return y;
}

void unpack(const Eigen::VectorXcd& y, Eigen::Index M, Eigen::MatrixXcd& s, double& s0,
            double& mu_int) {
  s = Eigen::Map<const Eigen::MatrixXcd>(y.data(), M, M);
  s0 = y[M * M].real();
  mu_int = y[M * M + 1].real();
}

Eigen::VectorXcd flow_rhs(const FlowContext& ctx, const Eigen::VectorXcd& y) {
  const Eigen::Index M = ctx.h->rows();
  Eigen::MatrixXcd s;
  double s0, mu_int;
  unpack(y, M, s, s0, mu_int);

  FermionResidual r = residual_fermion(*ctx.h, s, *ctx.scheme);
  double mu;
  try {
    mu = chemical_potential(r);
  } catch (const DegenerateConstraint&) {
    mu = ctx.last_mu;  // zero-T plateau: flow is frozen, keep the last value
  }
  ctx.last_mu = mu;

  Eigen::MatrixXcd ds = -(r.R_h - mu * r.R_delta);
  if (ctx.hermitize) ds = 0.5 * (ds + ds.adjoint().eval());

  // -ds0/dbeta = h0_flow + sum_pq f_p fbar_q h_pq s_qp - mu n_el
  const Eigen::VectorXd& f = ctx.scheme->f;
  Eigen::VectorXd fb = ctx.scheme->fbar();
  Complex inter = (f.asDiagonal() * (*ctx.h) * fb.asDiagonal() * s).trace();
  double ds0 = -(ctx.h0_flow + inter.real() - mu * ctx.n_el);

  return pack(ds, ds0, mu);
}

}  // namespace

ThermalTrajectory propagate_fermion(const OneBodyFermionModel& model,
                                    const ContractionScheme& scheme, double beta_max,
                                    double dbeta, const PropagateOptions& opts) {
  model.validate();
  scheme.validate(model.M);
  if (dbeta <= 0.0) throw ValidationError("propagate_fermion: dbeta must be positive");
  const int M = model.M;
  const double g = static_cast<double>(model.n_el) / M;
  for (int p = 0; p < M; ++p)
    if (scheme.f[p] <= 0.0 || scheme.f[p] >= 1.0)
      throw ValidationError("propagate_fermion: contractions must lie strictly inside (0,1)");

  FlowContext ctx;
  ctx.h = &model.h;
  ctx.scheme = &scheme;
  ctx.h0_flow = 0.0;
  for (int p = 0; p < M; ++p) ctx.h0_flow += scheme.f[p] * std::real(model.h(p, p));
  ctx.n_el = model.n_el;
  ctx.hermitize = opts.hermitize;

  // beta = 0 occupations are n_el/M regardless of the contraction; the
  // amplitudes absorb the difference.
  Eigen::MatrixXcd s0_mat = Eigen::MatrixXcd::Zero(M, M);
  for (int p = 0; p < M; ++p)
    s0_mat(p, p) = (g - scheme.f[p]) / (scheme.f[p] * (1.0 - scheme.f[p]));
  const double trace_s_init = s0_mat.trace().real();

  integrate::Rhs<Complex> rhs = [&ctx](double, const Eigen::VectorXcd& y) {
    return flow_rhs(ctx, y);
  };
  integrate::BlockLayout layout;
  layout.add("s", M * M);
  layout.add("s0", 1);
  layout.add("mu_integral", 1);

  ThermalTrajectory traj;
  traj.M = M;
  traj.n_el = model.n_el;
  traj.E0 = model.E0;

  const long n_steps = std::lround(beta_max / dbeta);
  if (n_steps < 1) throw ValidationError("propagate_fermion: beta_max smaller than one step");
  dbeta = beta_max / n_steps;  // land exactly on beta_max

  auto record = [&](double beta, const Eigen::MatrixXcd& s, double s0v, double mu_int) {
    TrajectorySample sample;
    sample.beta = beta;
    sample.s0 = s0v;
    sample.lnZ = -beta * model.E0 + s0v;
    sample.mu_integral = mu_int;

    FermionResidual r = residual_fermion(model.h, s, scheme);
    double mu;
    try {
      mu = chemical_potential(r);
    } catch (const DegenerateConstraint&) {
      mu = ctx.last_mu;
    }
    sample.mu = mu;
    sample.residual_inf = (r.R_h - mu * r.R_delta).cwiseAbs().maxCoeff();

    Eigen::MatrixXcd D = density_matrix_fermion(s, scheme);
    sample.trace_D = D.trace().real();
    sample.hermiticity = (D - D.adjoint()).cwiseAbs().maxCoeff();
    sample.U = model.E0 + (model.h * D).trace().real();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (D + D.adjoint()),
                                                       Eigen::EigenvaluesOnly);
    sample.occ_min = es.eigenvalues().minCoeff();
    sample.occ_max = es.eigenvalues().maxCoeff();
    if (sample.occ_min < -opts.occupation_band || sample.occ_max > 1.0 + opts.occupation_band)
      throw StepUnstable("occupation left [0,1] at beta " + fmt17(beta) +
                         "; reduce dbeta");
    if (opts.record_density) sample.D = D;

    traj.max_trace_drift =
        std::max(traj.max_trace_drift, std::abs(s.trace().real() - trace_s_init));
    traj.samples.push_back(std::move(sample));
  };

  integrate::FlowState<Complex> curr{0.0, pack(s0_mat, 0.0, 0.0)};
  record(0.0, s0_mat, 0.0, 0.0);

  integrate::FlowState<Complex> prev = curr;
  bool have_prev = false;
  for (long k = 0; k < n_steps; ++k) {
    integrate::FlowState<Complex> next;
    if (opts.integrator == Integrator::rk4) {
      next = integrate::step_rk4(curr, dbeta, rhs, &layout);
    } else if (!have_prev) {
      next = integrate::step_euler(curr, dbeta, rhs, &layout);
    } else {
      next = integrate::step_leapfrog(prev, curr, dbeta, rhs, &layout);
    }
    prev = curr;
    have_prev = true;
    curr = next;
    curr.x = (k + 1) * dbeta;  // index-based grid, no accumulated drift

    const bool last = (k == n_steps - 1);
    if ((k + 1) % opts.sample_stride == 0 || last) {
      Eigen::MatrixXcd s;
      double s0v, mu_int;
      unpack(curr.y, M, s, s0v, mu_int);
      record(curr.x, s, s0v, mu_int);
    }
  }

  thermodynamics_fermion(traj, model);
  return traj;
}

ThermoDiagnostics thermodynamics_fermion(ThermalTrajectory& traj,
                                         const OneBodyFermionModel& model) {
  ThermoDiagnostics diag;
  const int M = traj.M;
  const double g = static_cast<double>(traj.n_el) / M;
  const double norm_const = M * std::log(1.0 - g);  // ln tr of the uniform start
  const double c_g = std::log((1.0 - g) / g);

  for (auto& s : traj.samples) {
    if (s.beta <= 0.0) {
      s.A = -std::numeric_limits<double>::infinity();
      // beta -> 0: S/kB per orbital is the binary entropy of g.
      s.S = M * (-g * std::log(g) - (1.0 - g) * std::log(1.0 - g));
      continue;
    }
    const double lnZ_abs = s.lnZ - norm_const;
    s.A = -lnZ_abs / s.beta;
    const double mu_thermo = (s.mu_integral - c_g) / s.beta;
    s.S = s.beta * (s.U - s.A - mu_thermo * traj.n_el);
  }

  diag.min_entropy = traj.samples.empty() ? 0.0 : traj.samples.front().S;
  for (const auto& s : traj.samples) diag.min_entropy = std::min(diag.min_entropy, s.S);

  // Centered consistency check: U = -d lnZ/dbeta + mu n_el.
  for (size_t i = 1; i + 1 < traj.samples.size(); ++i) {
    const auto& a = traj.samples[i - 1];
    const auto& b = traj.samples[i];
    const auto& c = traj.samples[i + 1];
    if (std::abs((c.beta - b.beta) - (b.beta - a.beta)) > 1e-12) continue;
    const double dlnZ = (c.lnZ - a.lnZ) / (c.beta - a.beta);
    const double u_fd = -dlnZ + b.mu * traj.n_el;
    const double scale = std::max(1.0, std::abs(b.U));
    diag.max_consistency_rel = std::max(diag.max_consistency_rel, std::abs(b.U - u_fd) / scale);
  }
  (void)model;
  return diag;
}

CcLimitReport cc_limit_check(const OneBodyFermionModel& model, const std::vector<int>& occupied,
                             const Eigen::MatrixXcd& t_ai, const std::vector<double>& mu_sweep) {
  const int M = model.M;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(M);
  std::vector<bool> occ(M, false);
  for (int i : occupied) {
    f[i] = 1.0;
    occ[i] = true;
  }

  // Full amplitude matrix carrying only the virtual x occupied block.
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(M, M);
  for (int a = 0; a < M; ++a)
    for (int i = 0; i < M; ++i)
      if (!occ[a] && occ[i]) t(a, i) = t_ai(a, i);

  // Hand-coded one-body CC residual on the virtual x occupied block.
  Eigen::MatrixXcd ht = model.h * t;
  Eigen::MatrixXcd th = t * model.h;
  Eigen::MatrixXcd tht = t * model.h * t;
  Eigen::MatrixXcd cc = Eigen::MatrixXcd::Zero(M, M);
  for (int a = 0; a < M; ++a) {
    if (occ[a]) continue;
    for (int i = 0; i < M; ++i) {
      if (!occ[i]) continue;
      Complex sum_c = 0.0, sum_k = 0.0, sum_kc = 0.0;
      for (int c = 0; c < M; ++c)
        if (!occ[c]) sum_c += model.h(a, c) * t(c, i);
      for (int k = 0; k < M; ++k)
        if (occ[k]) sum_k += t(a, k) * model.h(k, i);
      for (int k = 0; k < M; ++k)
        if (occ[k])
          for (int c = 0; c < M; ++c)
            if (!occ[c]) sum_kc += t(a, k) * model.h(k, c) * t(c, i);
      cc(a, i) = model.h(a, i) + sum_c - sum_k - sum_kc;
    }
  }

  CcLimitReport rep;
  Eigen::MatrixXcd r_ref = residual_fermion_t(model.h, t, f, mu_sweep.empty() ? 0.0 : mu_sweep[0]);
  for (double mu : mu_sweep) {
    Eigen::MatrixXcd r = residual_fermion_t(model.h, t, f, mu);
    rep.max_mu_dependence = std::max(rep.max_mu_dependence, (r - r_ref).cwiseAbs().maxCoeff());
    rep.max_residual_deviation =
        std::max(rep.max_residual_deviation, (r - cc).cwiseAbs().maxCoeff());
  }

  // Block-diagonal probe: zero the coupling block, t = 0 must be stationary.
  Eigen::MatrixXcd h_block = model.h;
  for (int a = 0; a < M; ++a)
    for (int i = 0; i < M; ++i)
      if (occ[a] != occ[i]) h_block(a, i) = 0.0;
  Eigen::MatrixXcd zero_t = Eigen::MatrixXcd::Zero(M, M);
  rep.fixed_point_residual =
      residual_fermion_t(h_block, zero_t, f, 0.0).cwiseAbs().maxCoeff();
  double h0 = model.E0;
  for (int p = 0; p < M; ++p) h0 += f[p] * std::real(h_block(p, p));
  rep.fixed_point_energy = h0;
  return rep;
}

void write_trajectory_csv(const ThermalTrajectory& traj, const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> cols = {"beta", "T", "lnZ", "U", "mu", "A", "S"};
  const bool with_density = !traj.samples.empty() && traj.samples.front().D.has_value();
  if (with_density) {
    for (int p = 0; p < traj.M; ++p)
      for (int q = 0; q < traj.M; ++q) {
        cols.push_back("D" + std::to_string(p) + "_" + std::to_string(q) + "_re");
        cols.push_back("D" + std::to_string(p) + "_" + std::to_string(q) + "_im");
      }
  }
  w.header(cols);
  for (const auto& s : traj.samples) {
    std::vector<double> row = {s.beta, s.beta > 0.0 ? 1.0 / s.beta
                                                    : std::numeric_limits<double>::infinity(),
                               s.lnZ, s.U, s.mu, s.A, s.S};
    if (with_density && s.D) {
      for (int p = 0; p < traj.M; ++p)
        for (int q = 0; q < traj.M; ++q) {
          row.push_back((*s.D)(p, q).real());
          row.push_back((*s.D)(p, q).imag());
        }
    }
    w.row(row);
  }
}

}  // namespace noe::fermion

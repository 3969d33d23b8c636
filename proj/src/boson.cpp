#include "noe/boson.hpp"

#include <algorithm>
#include <cmath>

#include "noe/constants.hpp"
#include "noe/csv.hpp"
#include "noe/integrate.hpp"

namespace noe::boson {

BosonAmplitudes BosonAmplitudes::zeros(int N) {
  BosonAmplitudes a;
  a.t_up = Eigen::VectorXd::Zero(N);
  a.t_dn = Eigen::VectorXd::Zero(N);
  a.t_ud = Eigen::MatrixXd::Zero(N, N);
  a.t_uu = Eigen::MatrixXd::Zero(N, N);
  a.t_dd = Eigen::MatrixXd::Zero(N, N);
  return a;
}

void BosonAmplitudes::check_symmetry(double tol) const {
  double d1 = (t_uu - t_uu.transpose()).cwiseAbs().maxCoeff();
  double d2 = (t_dd - t_dd.transpose()).cwiseAbs().maxCoeff();
  if (d1 > tol || d2 > tol)
    throw Error("pair amplitudes lost symmetry (" + fmt17(std::max(d1, d2)) + ")");
}

BosonResidual residual_boson(const BosonQuadraticModel& model, const BosonAmplitudes& amps,
                             double f) {
  if (f < 0.0) throw Error("residual_boson: bosonic contraction must satisfy f >= 0");
  const int N = model.N;
  if (amps.t_up.size() != N) throw Error("residual_boson: dimension mismatch");
  const double fbar = 1.0 + f;

  const Eigen::VectorXd& A = model.h_up;
  const Eigen::VectorXd& B = model.h_dn;
  const Eigen::MatrixXd& C = model.h_ud;
  const Eigen::MatrixXd& U = model.h_uu;
  const Eigen::MatrixXd& D = model.h_dd;
  const Eigen::VectorXd& p = amps.t_up;
  const Eigen::VectorXd& q = amps.t_dn;
  const Eigen::MatrixXd& W = amps.t_ud;
  const Eigen::MatrixXd& P = amps.t_uu;
  const Eigen::MatrixXd& Q = amps.t_dd;

  // Model tensors are normal-ordered at f = 0; re-ordering against the
  // contraction f shifts only the scalar part.
  const double h0f = model.h0 + f * C.trace();

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd Nf = f * I + W;
  const Eigen::MatrixXd Nfb = fbar * I + W;

  const Eigen::VectorXd Gu = A + C * q + U * p;
  const Eigen::VectorXd Gd = B + C.transpose() * p + D * q;

  BosonResidual r;
  r.ds0 = h0f + C.cwiseProduct(W).sum() + p.dot(C * q) + A.dot(p) + B.dot(q) +
          0.5 * (U.cwiseProduct(P).sum() + p.dot(U * p) + D.cwiseProduct(Q).sum() +
                 q.dot(D * q));
  r.t_up = Nf * Gd + P * Gu;
  r.t_dn = Nfb.transpose() * Gu + Q * Gd;
  r.t_ud = Nf * C.transpose() * Nfb + P * U * Nfb + Nf * D * Q + P * C * Q;
  r.t_uu = Nf * D * Nf.transpose() + Nf * C.transpose() * P + P * C * Nf.transpose() +
           P * U * P;
  r.t_dd = Nfb.transpose() * U * Nfb + Nfb.transpose() * C * Q + Q * C.transpose() * Nfb +
           Q * D * Q;
  return r;
}

BosonAmplitudes init_from_states(const ThermalDensitySet& d, double f) {
  if (!(d.Z > 0.0)) throw NonPositiveZ("initialization densities carry Z <= 0");
  const int N = static_cast<int>(d.d_up.size());
  BosonAmplitudes a;
  a.beta = d.T > 0.0 ? beta_from_kelvin(d.T) : 0.0;
  a.s0 = std::log(d.Z);
  a.t_up = d.d_up;
  a.t_dn = d.d_dn;
  a.t_ud = d.d_ud - a.t_up * a.t_dn.transpose() - f * Eigen::MatrixXd::Identity(N, N);
  a.t_uu = d.d_uu - a.t_up * a.t_up.transpose();
  a.t_dd = d.d_dd - a.t_dn * a.t_dn.transpose();
  return a;
}

ThermalDensitySet densities_from_amplitudes(const BosonAmplitudes& a, double f) {
  const int N = static_cast<int>(a.t_up.size());
  ThermalDensitySet d;
  d.T = a.beta > 0.0 ? kelvin_from_beta(a.beta) : 0.0;
  d.Z = std::exp(a.s0);
  d.d_up = a.t_up;
  d.d_dn = a.t_dn;
  d.d_ud = a.t_ud + a.t_up * a.t_dn.transpose() + f * Eigen::MatrixXd::Identity(N, N);
  d.d_uu = a.t_uu + a.t_up * a.t_up.transpose();
  d.d_dd = a.t_dd + a.t_dn * a.t_dn.transpose();
  return d;
}

namespace {

// State packing: [p, q, W, P, Q, s0] column-major.
Eigen::VectorXd pack(const BosonAmplitudes& a) {
  const int N = static_cast<int>(a.t_up.size());
  Eigen::VectorXd y(2 * N + 3 * N * N + 1);
  Eigen::Index off = 0;
  y.segment(off, N) = a.t_up; off += N;
  y.segment(off, N) = a.t_dn; off += N;
  y.segment(off, N * N) = Eigen::Map<const Eigen::VectorXd>(a.t_ud.data(), N * N); off += N * N;
  y.segment(off, N * N) = Eigen::Map<const Eigen::VectorXd>(a.t_uu.data(), N * N); off += N * N;
  y.segment(off, N * N) = Eigen::Map<const Eigen::VectorXd>(a.t_dd.data(), N * N); off += N * N;
  y[off] = a.s0;
  return y;
}

BosonAmplitudes unpack(const Eigen::VectorXd& y, int N, double beta) {
  BosonAmplitudes a;
  a.beta = beta;
  Eigen::Index off = 0;
  a.t_up = y.segment(off, N); off += N;
  a.t_dn = y.segment(off, N); off += N;
  a.t_ud = Eigen::Map<const Eigen::MatrixXd>(y.data() + off, N, N); off += N * N;
  a.t_uu = Eigen::Map<const Eigen::MatrixXd>(y.data() + off, N, N); off += N * N;
  a.t_dd = Eigen::Map<const Eigen::MatrixXd>(y.data() + off, N, N); off += N * N;
  a.s0 = y[off];
  return a;
}

Eigen::VectorXd pack_residual(const BosonResidual& r) {
  BosonAmplitudes tmp;
  tmp.t_up = r.t_up;
  tmp.t_dn = r.t_dn;
  tmp.t_ud = r.t_ud;
  tmp.t_uu = r.t_uu;
  tmp.t_dd = r.t_dd;
  tmp.s0 = r.ds0;
  return pack(tmp);
}

// The symmetric pair-block subspace is exactly invariant under the flow;
// project out the roundoff-seeded antisymmetric noise after each step so
// expanding directions cannot amplify it.
void symmetrize_pairs(Eigen::VectorXd& y, int N) {
  auto fix = [&](Eigen::Index off) {
    Eigen::Map<Eigen::MatrixXd> m(y.data() + off, N, N);
    m = 0.5 * (m + m.transpose()).eval();
  };
  fix(2 * N + N * N);      // t_uu
  fix(2 * N + 2 * N * N);  // t_dd
}

}  // namespace

Eigen::VectorXd flatten_amplitudes(const BosonAmplitudes& amps) { return pack(amps); }

BosonAmplitudes unflatten_amplitudes(const Eigen::VectorXd& y, int N, double beta) {
  return unpack(y, N, beta);
}

ThermalTrajectory propagate_boson(const BosonQuadraticModel& model, const BosonAmplitudes& amps0,
                                  double beta0, double beta_max, double dbeta,
                                  const PropagateOptions& opts) {
  model.validate();
  if (dbeta <= 0.0) throw ValidationError("propagate_boson: dbeta must be positive");
  const int N = model.N;
  const double f = opts.f;

  ThermalTrajectory traj;
  traj.N = N;
  traj.f = f;

  auto record = [&](const BosonAmplitudes& a) {
    TrajectorySample s;
    s.beta = a.beta;
    s.T = kelvin_from_beta(a.beta);
    s.s0 = a.s0;
    s.Z = std::exp(a.s0);
    BosonResidual r = residual_boson(model, a, f);
    s.U = r.ds0;  // r holds -ds0/dbeta, which is U
    s.occupation = Eigen::VectorXd(N);
    for (int i = 0; i < N; ++i) s.occupation[i] = f + a.t_ud(i, i) + a.t_up[i] * a.t_dn[i];
    s.symmetry_drift = std::max((a.t_uu - a.t_uu.transpose()).cwiseAbs().maxCoeff(),
                                (a.t_dd - a.t_dd.transpose()).cwiseAbs().maxCoeff());
    traj.samples.push_back(std::move(s));
  };

  integrate::BlockLayout layout;
  layout.add("t_up", N);
  layout.add("t_dn", N);
  layout.add("t_ud", N * N);
  layout.add("t_uu", N * N);
  layout.add("t_dd", N * N);
  layout.add("s0", 1);

  if (opts.integrator == Integrator::rk4) {
    // d(state)/dbeta = -residual, stepped with signed dbeta.
    integrate::Rhs<double> rhs = [&](double beta, const Eigen::VectorXd& y) {
      BosonAmplitudes a = unpack(y, N, beta);
      return Eigen::VectorXd(-pack_residual(residual_boson(model, a, f)));
    };
    const double direction = beta_max >= beta0 ? 1.0 : -1.0;
    const long n_steps = std::lround((beta_max - beta0) / (direction * dbeta));
    if (n_steps < 1) throw ValidationError("propagate_boson: range shorter than one step");
    const double h = (beta_max - beta0) / n_steps;  // land exactly on beta_max

    integrate::FlowState<double> curr{beta0, pack(amps0)};
    record(amps0);
    for (long k = 0; k < n_steps; ++k) {
      curr = integrate::step_rk4(curr, h, rhs, &layout);
      curr.x = beta0 + (k + 1) * h;  // index-based grid
      symmetrize_pairs(curr.y, N);
      if ((k + 1) % opts.sample_stride == 0 || k == n_steps - 1)
        record(unpack(curr.y, N, curr.x));
    }
  } else {
    // Temperature-domain leapfrog on a uniform tau grid; rhs returns the
    // residual itself (the 1/(kB tau^2) weight lives in the update rule).
    integrate::Rhs<double> rhs = [&](double tau, const Eigen::VectorXd& y) {
      BosonAmplitudes a = unpack(y, N, beta_from_kelvin(tau));
      return pack_residual(residual_boson(model, a, f));
    };
    const double tau0 = kelvin_from_beta(beta0);
    const double tau_end = kelvin_from_beta(beta_max);
    if (tau_end <= tau0)
      throw Error("propagate_boson: leapfrog-temperature path integrates upward in T");
    const long n_steps = std::max<long>(1, std::lround((tau_end - tau0) / opts.dtau_kelvin));
    const double dtau = (tau_end - tau0) / n_steps;  // land exactly on tau_end

    integrate::FlowState<double> prev{tau0, pack(amps0)};
    record(amps0);
    // Euler bootstrap over the first interval.
    const double w0 = 1.0 / (kB_cm1_per_K * (tau0 + dtau)) - 1.0 / (kB_cm1_per_K * tau0);
    integrate::FlowState<double> curr{tau0 + dtau, prev.y - w0 * rhs(tau0, prev.y)};
    symmetrize_pairs(curr.y, N);
    if (1 % opts.sample_stride == 0 || n_steps == 1)
      record(unpack(curr.y, N, beta_from_kelvin(curr.x)));
    for (long k = 1; k < n_steps; ++k) {
      const double tau_next = tau0 + (k + 1) * dtau;
      auto next = integrate::step_leapfrog_temperature(prev, curr, prev.x, curr.x, tau_next,
                                                       rhs, &layout);
      symmetrize_pairs(next.y, N);
      prev = curr;
      curr = next;
      if ((k + 1) % opts.sample_stride == 0 || k == n_steps - 1)
        record(unpack(curr.y, N, beta_from_kelvin(curr.x)));
    }
  }

  thermo_boson(traj);
  return traj;
}

ThermoDiagnostics thermo_boson(ThermalTrajectory& traj) {
  ThermoDiagnostics diag;
  auto& ss = traj.samples;
  for (auto& s : ss) {
    s.A = -kB_cm1_per_K * s.T * s.s0;
    s.S = (s.U - s.A) / (kB_cm1_per_K * s.T);  // entropy / kB
  }
  // Cv = dU/dT, centered in the interior, one-sided at the ends.
  for (size_t i = 0; i < ss.size(); ++i) {
    if (ss.size() < 2) break;
    size_t lo = i == 0 ? 0 : i - 1;
    size_t hi = i + 1 == ss.size() ? i : i + 1;
    ss[i].Cv = (ss[hi].U - ss[lo].U) / (ss[hi].T - ss[lo].T);
  }
  for (size_t i = 1; i + 1 < ss.size(); ++i) {
    const auto& a = ss[i - 1];
    const auto& b = ss[i];
    const auto& c = ss[i + 1];
    if (std::abs((c.beta - b.beta) - (b.beta - a.beta)) > 1e-13 * std::abs(b.beta)) continue;
    const double u_fd = -(c.s0 - a.s0) / (c.beta - a.beta);
    diag.max_consistency_rel =
        std::max(diag.max_consistency_rel, std::abs(b.U - u_fd) / std::max(1.0, std::abs(b.U)));
  }
  return diag;
}

void write_trajectory_csv(const ThermalTrajectory& traj, const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> cols = {"T", "beta", "lnZ", "Z", "U", "A", "S", "Cv"};
  for (int i = 0; i < traj.N; ++i) cols.push_back("n" + std::to_string(i));
  w.header(cols);
  for (const auto& s : traj.samples) {
    std::vector<double> row = {s.T, s.beta, s.s0, s.Z, s.U, s.A, s.S, s.Cv};
    for (int i = 0; i < traj.N; ++i) row.push_back(s.occupation[i]);
    w.row(row);
  }
}

}  // namespace noe::boson

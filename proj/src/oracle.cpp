#include "noe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "noe/constants.hpp"
#include "noe/integrate.hpp"

namespace noe::oracle {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// ln(1 + e^{-x}) without overflow.
double log1p_exp_neg(double x) {
  return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

}  // namespace

FockBasis::FockBasis(int n_modes, const std::vector<int>& caps)
    : n_modes_(n_modes), caps_(caps) {
  if (static_cast<int>(caps.size()) != n_modes) throw Error("FockBasis: cap list mismatch");
  strides_.assign(n_modes_, 1);
  for (int m = n_modes_ - 2; m >= 0; --m) strides_[m] = strides_[m + 1] * (caps_[m + 1] + 1);
  dim_ = strides_[0] * (caps_[0] + 1);
  tuples_.resize(dim_);
  std::vector<int> occ(n_modes_, 0);
  for (long idx = 0; idx < dim_; ++idx) {
    tuples_[idx] = occ;
    for (int m = n_modes_ - 1; m >= 0; --m) {
      if (++occ[m] <= caps_[m]) break;
      occ[m] = 0;
    }
  }
}

FockBasis::FockBasis(int n_modes, int uniform_cap)
    : FockBasis(n_modes, std::vector<int>(n_modes, uniform_cap)) {}

int FockBasis::total_quanta(long index) const {
  return std::accumulate(tuples_[index].begin(), tuples_[index].end(), 0);
}

long FockBasis::shifted(long index, int mode, int delta) const {
  const int n = tuples_[index][mode] + delta;
  if (n < 0 || n > caps_[mode]) return -1;
  return index + static_cast<long>(delta) * strides_[mode];
}

Eigh eigh(const Eigen::MatrixXcd& A) {
  const Eigen::Index M = A.rows();
  if (A.cols() != M) throw Error("eigh: matrix must be square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error("eigh: matrix is not Hermitian");

  Eigen::MatrixXcd a = 0.5 * (A + A.adjoint());
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Identity(M, M);

  auto off_norm = [&]() {
    double sum = 0.0;
    for (Eigen::Index p = 0; p < M; ++p)
      for (Eigen::Index q = p + 1; q < M; ++q) sum += std::norm(a(p, q));
    return std::sqrt(2.0 * sum);
  };

  const double tol = 1e-14 * (1.0 + a.norm());
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    if (off_norm() <= tol) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < M; ++p) {
      for (Eigen::Index q = p + 1; q < M; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag < 1e-300) continue;
        const Complex phase = apq / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        // bounded root of t^2 - 2 tau t - 1 = 0 for this V-parametrization
        const double t = (tau >= 0.0 ? -1.0 : 1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const Complex se = s * phase;

        // Column rotation a <- a J, then row rotation a <- J^dag a.
        for (Eigen::Index r = 0; r < M; ++r) {
          const Complex arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp + std::conj(se) * arq;
          a(r, q) = -se * arp + c * arq;
        }
        for (Eigen::Index r = 0; r < M; ++r) {
          const Complex apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr + se * aqr;
          a(q, r) = -std::conj(se) * apr + c * aqr;
        }
        for (Eigen::Index r = 0; r < M; ++r) {
          const Complex vrp = V(r, p), vrq = V(r, q);
          V(r, p) = c * vrp + std::conj(se) * vrq;
          V(r, q) = -se * vrp + c * vrq;
        }
      }
    }
  }
  if (!converged && off_norm() > tol) throw Error("eigh: no convergence after sweep cap");

  Eigh out;
  out.eigenvalues.resize(M);
  for (Eigen::Index p = 0; p < M; ++p) out.eigenvalues[p] = a(p, p).real();
  std::vector<Eigen::Index> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return out.eigenvalues[i] < out.eigenvalues[j];
  });
  Eigen::VectorXd ev(M);
  Eigen::MatrixXcd vv(M, M);
  for (Eigen::Index k = 0; k < M; ++k) {
    ev[k] = out.eigenvalues[order[k]];
    vv.col(k) = V.col(order[k]);
  }
  out.eigenvalues = ev;
  out.eigenvectors = vv;
  return out;
}

FermiDiracReference fermi_dirac_reference(const OneBodyFermionModel& model,
                                          const std::vector<double>& beta_grid) {
  model.validate();
  const int M = model.M;
  const double g = static_cast<double>(model.n_el) / M;
  const double gbar = 1.0 - g;

  FermiDiracReference ref;
  Eigh eig = eigh(model.h);
  ref.eigenvalues = eig.eigenvalues;
  ref.eigenvectors = eig.eigenvectors;
  const Eigen::VectorXd& eps = ref.eigenvalues;

  for (double beta : beta_grid) {
    FermiDiracPoint pt;
    pt.beta = beta;
    if (beta <= 0.0) {
      pt.mu = std::numeric_limits<double>::quiet_NaN();
      pt.n = Eigen::VectorXd::Constant(M, g);
      pt.D = g * Eigen::MatrixXcd::Identity(M, M);
      pt.lnZ = 0.0;
      pt.U = model.E0 + g * eps.sum();
      pt.entropy = M * (-xlogx(g) - xlogx(gbar));
      ref.points.push_back(std::move(pt));
      continue;
    }
    double lo = eps.minCoeff() - 10.0 / beta;
    double hi = eps.maxCoeff() + 10.0 / beta;
    auto count = [&](double mu) {
      double sum = 0.0;
      for (int p = 0; p < M; ++p) sum += 1.0 / (1.0 + std::exp(beta * (eps[p] - mu)));
      return sum;
    };
    if (count(lo) > model.n_el || count(hi) < model.n_el)
      throw Error("fermi_dirac_reference: bisection bracket failure");
    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < 500; ++it) {
      mu = 0.5 * (lo + hi);
      const double c = count(mu);
      if (std::abs(c - model.n_el) <= 1e-12) break;
      (c < model.n_el ? lo : hi) = mu;
    }
    pt.mu = mu;
    pt.n.resize(M);
    double lnXi = 0.0, U1 = 0.0, S = 0.0;
    for (int p = 0; p < M; ++p) {
      const double x = beta * (eps[p] - mu);
      pt.n[p] = 1.0 / (1.0 + std::exp(x));
      lnXi += log1p_exp_neg(x);
      U1 += eps[p] * pt.n[p];
      S += -xlogx(pt.n[p]) - xlogx(1.0 - pt.n[p]);
    }
    pt.D = eig.eigenvectors * pt.n.asDiagonal() * eig.eigenvectors.adjoint();
    pt.lnZ = -beta * model.E0 + M * std::log(gbar) + lnXi;
    pt.U = model.E0 + U1;
    pt.entropy = S;
    ref.points.push_back(std::move(pt));
  }
  return ref;
}

Eigen::MatrixXd boson_hamiltonian_matrix(const BosonQuadraticModel& model,
                                         const FockBasis& basis) {
  const int N = model.N;
  if (basis.modes() != N) throw Error("boson_hamiltonian_matrix: mode count mismatch");
  const long dim = basis.dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);

  for (long c = 0; c < dim; ++c) {
    const auto& n = basis.occupation(c);
    H(c, c) += model.h0;
    for (int i = 0; i < N; ++i) {
      // a_i^dag
      if (model.h_up[i] != 0.0) {
        long r = basis.shifted(c, i, +1);
        if (r >= 0) H(r, c) += model.h_up[i] * std::sqrt(n[i] + 1.0);
      }
      // a_i
      if (model.h_dn[i] != 0.0) {
        long r = basis.shifted(c, i, -1);
        if (r >= 0) H(r, c) += model.h_dn[i] * std::sqrt(static_cast<double>(n[i]));
      }
      for (int j = 0; j < N; ++j) {
        // a_i^dag a_j
        if (model.h_ud(i, j) != 0.0 && n[j] >= 1) {
          long mid = basis.shifted(c, j, -1);
          if (mid >= 0) {
            long r = basis.shifted(mid, i, +1);
            if (r >= 0) {
              const double ni_after = n[i] - (i == j ? 1 : 0) + 1;
              H(r, c) += model.h_ud(i, j) * std::sqrt(static_cast<double>(n[j])) *
                         std::sqrt(ni_after);
            }
          }
        }
        // 1/2 a_i^dag a_j^dag
        if (model.h_uu(i, j) != 0.0) {
          long mid = basis.shifted(c, j, +1);
          if (mid >= 0) {
            long r = basis.shifted(mid, i, +1);
            if (r >= 0) {
              const double nj_after = n[j] + 1.0;
              const double ni_after = n[i] + (i == j ? 1 : 0) + 1.0;
              H(r, c) += 0.5 * model.h_uu(i, j) * std::sqrt(nj_after) * std::sqrt(ni_after);
            }
          }
        }
        // 1/2 a_i a_j
        if (model.h_dd(i, j) != 0.0 && n[j] >= 1) {
          long mid = basis.shifted(c, j, -1);
          if (mid >= 0) {
            const int ni_mid = n[i] - (i == j ? 1 : 0);
            if (ni_mid >= 1) {
              long r = basis.shifted(mid, i, -1);
              if (r >= 0)
                H(r, c) += 0.5 * model.h_dd(i, j) * std::sqrt(static_cast<double>(n[j])) *
                           std::sqrt(static_cast<double>(ni_mid));
            }
          }
        }
      }
    }
  }
  return H;
}

Eigen::MatrixXd ladder_up(const FockBasis& basis, int mode) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(basis.dim(), basis.dim());
  for (long c = 0; c < basis.dim(); ++c) {
    long r = basis.shifted(c, mode, +1);
    if (r >= 0) A(r, c) = std::sqrt(basis.occupation(c)[mode] + 1.0);
  }
  return A;
}

Eigen::MatrixXd ladder_dn(const FockBasis& basis, int mode) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(basis.dim(), basis.dim());
  for (long c = 0; c < basis.dim(); ++c) {
    long r = basis.shifted(c, mode, -1);
    if (r >= 0) A(r, c) = std::sqrt(static_cast<double>(basis.occupation(c)[mode]));
  }
  return A;
}

namespace {

struct SosEigen {
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
};

SosEigen diagonalize_sos(const BosonQuadraticModel& model, int cap, bool vectors = true) {
  FockBasis basis(model.N, cap);
  Eigen::MatrixXd H = boson_hamiltonian_matrix(model, basis);
  const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(1.0, H.cwiseAbs().maxCoeff()))
    throw Error("boson_sos: Hamiltonian matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.compute(0.5 * (H + H.transpose()),
             vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("boson_sos: eigensolver failed");
  SosEigen out;
  out.evals = es.eigenvalues();
  if (vectors) out.evecs = es.eigenvectors();
  return out;
}

double partition_value(const Eigen::VectorXd& evals, double beta, int n_states) {
  const long count = n_states > 0 ? std::min<long>(n_states, evals.size()) : evals.size();
  double Z = 0.0;
  for (long v = 0; v < count; ++v) Z += std::exp(-beta * evals[v]);
  return Z;
}

}  // namespace

BosonSosReference boson_sos(const BosonQuadraticModel& model, const std::vector<double>& T_grid,
                            const BosonSosOptions& opts) {
  model.validate();
  if (T_grid.empty()) throw Error("boson_sos: empty temperature grid");
  const double T_max = *std::max_element(T_grid.begin(), T_grid.end());
  const double beta_min = beta_from_kelvin(T_max);

  // Grow the cap until the full-basis Z at the hottest temperature is
  // stable; the low-lying states converge faster still.
  int cap = opts.cap_start;
  SosEigen sol = diagonalize_sos(model, cap, false);
  double z_prev = partition_value(sol.evals, beta_min, 0);
  while (true) {
    if (cap + 2 > opts.cap_max)
      throw Error("boson_sos: basis growth cap exceeded before Z converged");
    cap += 2;
    SosEigen next = diagonalize_sos(model, cap, false);
    const double z_next = partition_value(next.evals, beta_min, 0);
    sol = std::move(next);
    if (std::abs(z_next - z_prev) <= opts.z_rel_tol * z_next) break;
    z_prev = z_next;
  }
  if (opts.with_densities) sol = diagonalize_sos(model, cap, true);

  FockBasis basis(model.N, cap);
  const int N = model.N;
  BosonSosReference ref;
  ref.caps.assign(N, cap);
  ref.eigenvalues = sol.evals;

  const long n_use = opts.n_states > 0 ? std::min<long>(opts.n_states, sol.evals.size())
                                       : sol.evals.size();

  // Ladder applications on eigenvectors, reused across temperatures.
  std::vector<Eigen::MatrixXd> up(N), dn(N);
  if (opts.with_densities) {
    for (int i = 0; i < N; ++i) {
      up[i] = ladder_up(basis, i);
      dn[i] = ladder_dn(basis, i);
    }
  }

  for (double T : T_grid) {
    if (T <= 0.0) throw NonPositiveTemperature("boson_sos: T must be positive");
    const double beta = beta_from_kelvin(T);
    BosonSosPoint pt;
    pt.T = T;

    double Z = 0.0, EU = 0.0;
    std::vector<double> w(n_use, 0.0);
    for (long v = 0; v < n_use; ++v) {
      w[v] = std::exp(-beta * sol.evals[v]);
      Z += w[v];
      EU += w[v] * sol.evals[v];
    }
    if (!(Z > 0.0)) throw NonPositiveZ("boson_sos: partition value underflowed to zero");
    pt.Z = Z;
    pt.U = EU / Z;
    pt.entropy = std::log(Z) + beta * pt.U;

    boson::ThermalDensitySet d;
    d.T = T;
    d.Z = Z;
    d.d_up = Eigen::VectorXd::Zero(N);
    d.d_dn = Eigen::VectorXd::Zero(N);
    d.d_ud = Eigen::MatrixXd::Zero(N, N);
    d.d_uu = Eigen::MatrixXd::Zero(N, N);
    d.d_dd = Eigen::MatrixXd::Zero(N, N);
    for (long v = 0; v < (opts.with_densities ? n_use : 0); ++v) {
      if (w[v] / Z < 1e-18) continue;
      const Eigen::VectorXd psi = sol.evecs.col(v);
      std::vector<Eigen::VectorXd> dn_psi(N), up_psi(N);
      for (int i = 0; i < N; ++i) {
        dn_psi[i] = dn[i] * psi;
        up_psi[i] = up[i] * psi;
      }
      const double wz = w[v] / Z;
      for (int i = 0; i < N; ++i) {
        d.d_up[i] += wz * psi.dot(up_psi[i]);
        d.d_dn[i] += wz * psi.dot(dn_psi[i]);
        for (int j = 0; j < N; ++j) {
          d.d_ud(i, j) += wz * dn_psi[i].dot(dn_psi[j]);   // <a_i^dag a_j>
          d.d_uu(i, j) += wz * psi.dot(up[i] * up_psi[j]);  // <a_i^dag a_j^dag>
          d.d_dd(i, j) += wz * psi.dot(dn[i] * dn_psi[j]);  // <a_i a_j>
        }
      }
    }
    pt.densities = std::move(d);
    ref.points.push_back(std::move(pt));
  }
  return ref;
}

std::vector<Complex> exact_time_acf(const BosonQuadraticModel& model,
                                    const std::vector<double>& tau_grid_fs, int cap_start,
                                    int cap_max, double tol) {
  model.validate();
  auto series_for = [&](int cap) {
    SosEigen sol = diagonalize_sos(model, cap);
    const long dim = sol.evals.size();
    std::vector<Complex> acf(tau_grid_fs.size(), Complex(0.0, 0.0));
    for (long v = 0; v < dim; ++v) {
      const double overlap2 = sol.evecs(0, v) * sol.evecs(0, v);
      if (overlap2 < 1e-300) continue;
      const double w = sol.evals[v] * rad_per_fs_per_cm1;
      for (size_t k = 0; k < tau_grid_fs.size(); ++k) {
        const double ph = -w * tau_grid_fs[k];
        acf[k] += overlap2 * Complex(std::cos(ph), std::sin(ph));
      }
    }
    return acf;
  };

  int cap = cap_start;
  std::vector<Complex> prev = series_for(cap);
  while (true) {
    if (cap + 2 > cap_max) throw Error("exact_time_acf: basis growth cap exceeded");
    cap += 2;
    std::vector<Complex> next = series_for(cap);
    double dev = 0.0;
    for (size_t k = 0; k < next.size(); ++k) dev = std::max(dev, std::abs(next[k] - prev[k]));
    if (dev <= tol) return next;
    prev = std::move(next);
  }
}

Statistics1dResult statistics_1d(double omega_cm1, int alpha,
                                 const std::vector<double>& T_grid) {
  if (omega_cm1 <= 0.0) throw Error("statistics_1d: omega must be positive");
  if (alpha != 1 && alpha != 0 && alpha != -1) throw Error("statistics_1d: alpha in {-1,0,+1}");
  for (size_t i = 1; i < T_grid.size(); ++i)
    if (T_grid[i] <= T_grid[i - 1]) throw Error("statistics_1d: T grid must ascend");
  if (T_grid.empty() || T_grid.front() <= 0.0)
    throw Error("statistics_1d: T grid must be positive");

  const double a = static_cast<double>(alpha);
  auto closed = [&](double T) {
    return 1.0 / (std::exp(omega_cm1 / (kB_cm1_per_K * T)) - a);
  };

  Statistics1dResult res;
  res.T = T_grid;
  res.occupation_closed.reserve(T_grid.size());
  res.occupation_numeric.reserve(T_grid.size());

  // Cold start: the flow is flat at T = 0, so seed with the closed-form
  // value at half the first grid temperature and integrate in beta.
  const double tau0 = 0.5 * T_grid.front();
  double beta = beta_from_kelvin(tau0);
  double n = closed(tau0);

  const double dbeta_target = 1e-5;
  for (double T : T_grid) {
    const double beta_t = beta_from_kelvin(T);
    const double span = beta - beta_t;  // integrate downward in beta
    const long steps = std::max<long>(1, std::lround(span / dbeta_target));
    const double h = -span / steps;
    for (long k = 0; k < steps; ++k) {
      auto f = [&](double y) { return omega_cm1 * (y + a * y * y); };
      const double k1 = f(n);
      const double k2 = f(n + 0.5 * h * (-k1));
      const double k3 = f(n + 0.5 * h * (-k2));
      const double k4 = f(n + h * (-k3));
      n += (h / 6.0) * (-(k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    beta = beta_t;
    res.occupation_numeric.push_back(n);
    res.occupation_closed.push_back(closed(T));
    res.max_abs_deviation =
        std::max(res.max_abs_deviation, std::abs(n - res.occupation_closed.back()));
  }
  return res;
}

double connected_form_check(const BosonQuadraticModel& model, const FockBasis& basis,
                            const fctime::TimeAmplitudes& amps, const TimeResidualFn& residual) {
  const int N = model.N;
  const long dim = basis.dim();

  std::vector<Eigen::MatrixXd> up(N);
  for (int i = 0; i < N; ++i) up[i] = ladder_up(basis, i);

  // Strictly raising part of T; the scalar t0 factors out of both sides.
  Eigen::MatrixXcd Traise = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < N; ++i) Traise += amps.t_up[i] * up[i].cast<Complex>();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      Traise += 0.5 * amps.t_uu(i, j) * (up[i] * up[j]).cast<Complex>();

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi[0] = 1.0;
  Eigen::VectorXcd term = psi;
  int max_quanta = 0;
  for (int m = 0; m < N; ++m) max_quanta += basis.cap(m);
  for (int k = 1; k <= max_quanta + 1; ++k) {
    term = (Traise * term) / static_cast<double>(k);
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
    psi += term;
  }

  Eigen::MatrixXd H = boson_hamiltonian_matrix(model, basis);
  Eigen::VectorXcd lhs = H.cast<Complex>() * psi;

  fctime::TimeResidual R = residual(model, amps);
  Eigen::MatrixXcd Rop = R.r0 * Eigen::MatrixXcd::Identity(dim, dim);
  for (int i = 0; i < N; ++i) Rop += R.t_up[i] * up[i].cast<Complex>();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      Rop += 0.5 * R.t_uu(i, j) * (up[i] * up[j]).cast<Complex>();
  Eigen::VectorXcd rhs = Rop * psi;

  double dev = 0.0;
  for (long r = 0; r < dim; ++r) {
    bool interior = true;
    for (int m = 0; m < N; ++m)
      if (basis.occupation(r)[m] > basis.cap(m) - 2) interior = false;
    if (interior) dev = std::max(dev, std::abs(lhs[r] - rhs[r]));
  }
  return dev;
}

}  // namespace noe::oracle

#include "noe/fctime.hpp"

#include <algorithm>
#include <cmath>

#include "noe/constants.hpp"
#include "noe/csv.hpp"
#include "noe/integrate.hpp"

namespace noe::fctime {

TimeAmplitudes TimeAmplitudes::zeros(int N) {
  TimeAmplitudes a;
  a.t_up = Eigen::VectorXcd::Zero(N);
  a.t_uu = Eigen::MatrixXcd::Zero(N, N);
  return a;
}

TimeResidual residual_time(const BosonQuadraticModel& model, const TimeAmplitudes& amps) {
  const int N = model.N;
  if (amps.t_up.size() != N) throw Error("residual_time: dimension mismatch");
  const Eigen::MatrixXcd Cd = model.h_ud.cast<Complex>();
  const Eigen::MatrixXcd Uu = model.h_uu.cast<Complex>();
  const Eigen::MatrixXcd Dd = model.h_dd.cast<Complex>();
  const Eigen::VectorXcd Au = model.h_up.cast<Complex>();
  const Eigen::VectorXcd Bd = model.h_dn.cast<Complex>();
  const Eigen::VectorXcd& p = amps.t_up;
  const Eigen::MatrixXcd& P = amps.t_uu;

  TimeResidual r;
  r.r0 = model.h0 + (Bd.transpose() * p).value() +
         0.5 * (Dd.cwiseProduct(P).sum() + (p.transpose() * Dd * p).value());
  r.t_up = Au + Cd * p + P * Dd * p + P * Bd;
  Eigen::MatrixXcd CP = Cd * P;
  r.t_uu = Uu + CP + CP.transpose() + P * Dd * P;
  return r;
}

AcfSeries propagate_time(const BosonQuadraticModel& model, double tau_max, double dtau,
                         const PropagateTimeOptions& opts) {
  model.validate();
  const int N = model.N;
  const double omega_max = model.omega.maxCoeff();
  const double dtau_limit = 0.1 / (rad_per_fs_per_cm1 * omega_max);
  if (dtau <= 0.0 || dtau > dtau_limit)
    throw ValidationError("propagate_time: dtau must resolve the fastest mode; need dtau <= " +
                          fmt17(dtau_limit) + " fs");

  // The constant h0 only rotates t0; split it off and apply the phase
  // analytically so the stepped variables move at mode-frequency rates.
  BosonQuadraticModel shifted = model;
  shifted.h0 = 0.0;

  const Complex minus_i(0.0, -1.0);
  integrate::Rhs<Complex> rhs = [&](double, const Eigen::VectorXcd& y) {
    TimeAmplitudes a = TimeAmplitudes::zeros(N);
    a.t0 = y[0];
    a.t_up = y.segment(1, N);
    a.t_uu = Eigen::Map<const Eigen::MatrixXcd>(y.data() + 1 + N, N, N);
    TimeResidual r = residual_time(shifted, a);
    Eigen::VectorXcd dy(y.size());
    dy[0] = minus_i * rad_per_fs_per_cm1 * r.r0;
    dy.segment(1, N) = minus_i * rad_per_fs_per_cm1 * r.t_up;
    Eigen::MatrixXcd duu = minus_i * rad_per_fs_per_cm1 * r.t_uu;
    dy.segment(1 + N, N * N) = Eigen::Map<const Eigen::VectorXcd>(duu.data(), N * N);
    return dy;
  };

  integrate::BlockLayout layout;
  layout.add("t0", 1);
  layout.add("t_up", N);
  layout.add("t_uu", N * N);

  const long n_steps = std::lround(tau_max / dtau);
  AcfSeries out;
  out.dtau = dtau * opts.sample_stride;

  auto record = [&](double tau, Complex t0_slow) {
    const Complex phase(0.0, -model.h0 * rad_per_fs_per_cm1 * tau);
    Complex acf = std::exp(t0_slow + phase);
    if (std::abs(acf) > 1.0 + opts.abs_bound)
      throw StepUnstable("|ACF| exceeded 1 at tau " + fmt17(tau) + " fs; reduce dtau");
    out.tau.push_back(tau);
    out.acf.push_back(acf);
  };

  integrate::FlowState<Complex> curr{0.0, Eigen::VectorXcd::Zero(1 + N + N * N)};
  record(0.0, Complex(0.0, 0.0));
  for (long k = 0; k < n_steps; ++k) {
    curr = integrate::step_rk4(curr, dtau, rhs, &layout);
    curr.x = (k + 1) * dtau;  // index-based grid
    if ((k + 1) % opts.sample_stride == 0 || k == n_steps - 1) record(curr.x, curr.y[0]);
  }
  return out;
}

Spectrum compute_spectrum(const AcfSeries& acf, double damping_cm1, const SpectrumGrid& grid,
                          Window window) {
  if (damping_cm1 <= 0.0) throw ValidationError("compute_spectrum: damping must be positive");
  if (acf.tau.size() < 2) throw Error("compute_spectrum: ACF series too short");
  const double dtau = acf.tau[1] - acf.tau[0];
  const double e_nyquist = std::numbers::pi / (rad_per_fs_per_cm1 * dtau);
  if (std::max(std::abs(grid.e_min), std::abs(grid.e_max)) > e_nyquist) {
    const double need = 0.999 * std::numbers::pi /
                        (rad_per_fs_per_cm1 * std::max(std::abs(grid.e_min), std::abs(grid.e_max)));
    throw NyquistError("energy grid exceeds the ACF sampling limit; need dtau <= " + fmt17(need) +
                       " fs");
  }
  if (grid.de <= 0.0 || grid.e_max <= grid.e_min)
    throw ValidationError("compute_spectrum: malformed energy grid");

  const size_t n = acf.tau.size();
  const double tmax = acf.tau.back();
  const size_t n_e = static_cast<size_t>(std::floor((grid.e_max - grid.e_min) / grid.de)) + 1;

  Spectrum spec;
  spec.energy.resize(n_e);
  spec.intensity.assign(n_e, 0.0);

  std::vector<Complex> weighted(n);
  for (size_t k = 0; k < n; ++k) {
    double w = std::exp(-damping_cm1 * rad_per_fs_per_cm1 * acf.tau[k]);
    if (window == Window::cosine)
      w *= 0.5 * (1.0 + std::cos(std::numbers::pi * acf.tau[k] / tmax));
    if (k == 0 || k + 1 == n) w *= 0.5;  // trapezoid ends
    weighted[k] = acf.acf[k] * w;
  }

  for (size_t e = 0; e < n_e; ++e) {
    const double energy = grid.e_min + static_cast<double>(e) * grid.de;
    const double omega = energy * rad_per_fs_per_cm1;
    Complex sum(0.0, 0.0);
    for (size_t k = 0; k < n; ++k) {
      const double ph = omega * acf.tau[k];
      sum += weighted[k] * Complex(std::cos(ph), std::sin(ph));
    }
    spec.energy[e] = energy;
    spec.intensity[e] = sum.real() * dtau;
  }

  // Residual ringing sits within -1e-6 of the peak; clip to that band and
  // zero what remains so the emitted intensity is nonnegative.
  const double peak = *std::max_element(spec.intensity.begin(), spec.intensity.end());
  const double floor_allowed = -1e-6 * std::max(peak, 0.0);
  for (double& v : spec.intensity) {
    if (v < floor_allowed) v = floor_allowed;
    if (v < 0.0) v = 0.0;
  }
  return spec;
}

void write_acf_csv(const AcfSeries& acf, const std::string& path) {
  CsvWriter w(path);
  w.header({"tau_fs", "acf_re", "acf_im", "acf_abs"});
  for (size_t k = 0; k < acf.tau.size(); ++k)
    w.row({acf.tau[k], acf.acf[k].real(), acf.acf[k].imag(), std::abs(acf.acf[k])});
}

void write_spectrum_csv(const Spectrum& spec, const std::string& path) {
  CsvWriter w(path);
  w.header({"energy_cm1", "intensity"});
  for (size_t k = 0; k < spec.energy.size(); ++k) w.row({spec.energy[k], spec.intensity[k]});
}

}  // namespace noe::fctime

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "noe/model.hpp"

namespace noe::boson {

enum class Integrator { rk4, leapfrog_temperature };

/// t-amplitude blocks at one inverse temperature. Upper labels pair with
/// creation-side expectation values: t_up_i tracks <a_i^dag>, t_ud_ij the
/// <a_i^dag a_j> cumulant minus f, t_uu the <a^dag a^dag> cumulant, and so
/// on. These stay finite for every contraction f >= 0, including f = 0.
struct BosonAmplitudes {
  double beta = 0.0;
  double s0 = 0.0;
  Eigen::VectorXd t_up, t_dn;
  Eigen::MatrixXd t_ud;
  Eigen::MatrixXd t_uu, t_dd;  // symmetric

  static BosonAmplitudes zeros(int N);
  void check_symmetry(double tol = 1e-10) const;
};

/// Thermal expectation values over a finite set of eigenstates at one
/// temperature: d_up_i = <a_i^dag>, d_dn_i = <a_i>, d_ud_ij = <a_i^dag a_j>,
/// d_uu_ij = <a_i^dag a_j^dag>, d_dd_ij = <a_i a_j>, plus the (restricted)
/// partition value Z.
struct ThermalDensitySet {
  double T = 0.0;
  double Z = 0.0;
  Eigen::VectorXd d_up, d_dn;
  Eigen::MatrixXd d_ud, d_uu, d_dd;
};

struct BosonResidual {
  double ds0 = 0.0;  // value of -ds0/dbeta
  Eigen::VectorXd t_up, t_dn;
  Eigen::MatrixXd t_ud, t_uu, t_dd;
};

/// Right-hand sides of -d(amplitudes)/dbeta for a quadratic Hamiltonian and
/// contraction f. Closed at the singles+doubles level: no higher blocks are
/// generated. With A = h_up, B = h_dn, C = h_ud, U = h_uu, D = h_dd,
/// Gu = A + C q + U p, Gd = B + C^T p + D q, Nf = f I + W, Nfb = fbar I + W:
///   -ds0/db = h0 + f tr C + C:W + p^T C q + A.p + B.q
///             + (U:P + p^T U p + D:Q + q^T D q)/2
///   -dp/db  = Nf Gd + P Gu
///   -dq/db  = Nfb^T Gu + Q Gd
///   -dW/db  = Nf C^T Nfb + P U Nfb + Nf D Q + P C Q
///   -dP/db  = Nf D Nf^T + Nf C^T P + P C Nf^T + P U P
///   -dQ/db  = Nfb^T U Nfb + Nfb^T C Q + Q C^T Nfb + Q D Q
/// (p = t_up, q = t_dn, W = t_ud, P = t_uu, Q = t_dd.)
BosonResidual residual_boson(const BosonQuadraticModel& model, const BosonAmplitudes& amps,
                             double f);

/// Amplitudes from restricted thermal densities:
///   s0 = ln Z, t_up = d_up, t_dn = d_dn,
///   t_ud = d_ud - t_up t_dn^T - f I,
///   t_uu = d_uu - t_up t_up^T, t_dd = d_dn... (mirror), inverse map exact.
BosonAmplitudes init_from_states(const ThermalDensitySet& densities, double f);

/// Inverse of init_from_states (bit-exact round trip).
ThermalDensitySet densities_from_amplitudes(const BosonAmplitudes& amps, double f);

/// Flat-vector view used by the integrators; unflatten(flatten(a)) is a
/// bit-exact identity.
Eigen::VectorXd flatten_amplitudes(const BosonAmplitudes& amps);
BosonAmplitudes unflatten_amplitudes(const Eigen::VectorXd& y, int N, double beta);

struct TrajectorySample {
  double beta = 0.0;
  double T = 0.0;
  double s0 = 0.0;  // ln Z, absolute
  double Z = 0.0;
  double U = 0.0;   // -ds0/dbeta from the residual
  double A = 0.0;
  double S = 0.0;   // entropy / kB
  double Cv = 0.0;  // dU/dT, filled by thermo_boson
  Eigen::VectorXd occupation;  // n_i = f + t_ud_ii + t_up_i t_dn_i
  double symmetry_drift = 0.0;
};

struct ThermalTrajectory {
  std::vector<TrajectorySample> samples;
  int N = 0;
  double f = 0.0;
};

struct PropagateOptions {
  Integrator integrator = Integrator::rk4;
  int sample_stride = 1;
  double f = 0.0;
  double dtau_kelvin = 0.005;  // step for the temperature-domain leapfrog
};

/// Integrates from beta0 = 1/(kB T0) toward beta_max (normally smaller,
/// i.e. toward higher temperature) with fixed |dbeta|. amps0 must come from
/// init_from_states at beta0.
ThermalTrajectory propagate_boson(const BosonQuadraticModel& model, const BosonAmplitudes& amps0,
                                  double beta0, double beta_max, double dbeta,
                                  const PropagateOptions& opts = {});

struct ThermoDiagnostics {
  double max_consistency_rel = 0.0;  // U vs centered FD of -s0
};

/// Fills A, S, Cv and returns the U / d(-s0)/dbeta consistency measure.
ThermoDiagnostics thermo_boson(ThermalTrajectory& traj);

void write_trajectory_csv(const ThermalTrajectory& traj, const std::string& path);

}  // namespace noe::boson

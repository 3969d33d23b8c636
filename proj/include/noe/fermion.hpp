#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "noe/model.hpp"

namespace noe::fermion {

enum class Integrator { rk4, leapfrog };

/// s-amplitude state at one inverse temperature.
struct FermionAmplitudes {
  double beta = 0.0;
  double s0 = 0.0;
  Eigen::MatrixXcd s;
};

/// Residual blocks of the amplitude flow, -ds/dbeta = R_h - mu * R_delta.
struct FermionResidual {
  Eigen::MatrixXcd R_h;
  Eigen::MatrixXcd R_delta;
};

/// R_h[p,q]     = h_pq + sum_r fbar_r h_pr s_rq - sum_r f_r s_pr h_rq
///              - sum_rs f_r fbar_s s_pr h_rs s_sq
/// R_delta[p,q] = delta_pq + fbar_p s_pq - f_q s_pq - sum_r f_r fbar_r s_pr s_rq
FermionResidual residual_fermion(const Eigen::MatrixXcd& h_dot, const Eigen::MatrixXcd& s,
                                 const ContractionScheme& scheme);

/// Number-constraint multiplier mu = tr R_h / tr R_delta; with it the trace
/// of ds/dbeta vanishes to round-off. Throws DegenerateConstraint when
/// |tr R_delta| < 1e-14.
double chemical_potential(const FermionResidual& r);

/// General per-orbital flow in the rescaled variables t_pq = f_q fbar_p s_pq:
///   -dt/dbeta = Fbar h F + Fbar h t - t h F - t h t
///               - mu (Fbar F + Fbar t - t F - t t)
/// Valid for extremal contractions where the s-variables are not.
Eigen::MatrixXcd residual_fermion_t(const Eigen::MatrixXcd& h_dot, const Eigen::MatrixXcd& t,
                                    const Eigen::VectorXd& f, double mu);

/// D_pq = f_p delta_pq + t_pq, t_pq = f_q fbar_p s_pq.
Eigen::MatrixXcd density_matrix_fermion(const Eigen::MatrixXcd& s,
                                        const ContractionScheme& scheme);

struct TrajectorySample {
  double beta = 0.0;
  double s0 = 0.0;
  double lnZ = 0.0;       // -beta E0 + s0 (normalized-trace convention)
  double U = 0.0;         // E0 + tr(h D)
  double mu = 0.0;        // instantaneous constraint multiplier
  double mu_integral = 0.0;  // int_0^beta mu dbeta'
  double A = 0.0;         // free energy from the absolute grand potential
  double S = 0.0;         // entropy / kB
  double trace_D = 0.0;
  double occ_min = 0.0;
  double occ_max = 0.0;
  double residual_inf = 0.0;  // max-abs of R_h - mu R_delta
  double hermiticity = 0.0;   // max-abs of D - D^dag
  std::optional<Eigen::MatrixXcd> D;
};

struct ThermalTrajectory {
  std::vector<TrajectorySample> samples;
  int M = 0;
  int n_el = 0;
  double E0 = 0.0;
  double max_trace_drift = 0.0;  // max |tr s - tr s(0)| over accepted steps
};

struct PropagateOptions {
  Integrator integrator = Integrator::rk4;
  int sample_stride = 1;       // record every k-th step (last step always kept)
  bool record_density = true;
  bool hermitize = false;      // average the residual with its adjoint
  double occupation_band = 1e-6;  // StepUnstable outside [-band, 1+band]
};

/// Integrates the amplitude flow from beta = 0 (occupations n_el/M) to
/// beta_max with fixed step dbeta. Thermodynamic columns are filled along
/// the way; see thermodynamics_fermion for the derived quantities.
ThermalTrajectory propagate_fermion(const OneBodyFermionModel& model,
                                    const ContractionScheme& scheme, double beta_max,
                                    double dbeta, const PropagateOptions& opts = {});

struct ThermoDiagnostics {
  double max_consistency_rel = 0.0;  // U vs -d lnZ/dbeta + mu n_el, centered FD
  double min_entropy = 0.0;
};

/// Re-derives U, A, S on a finished trajectory and returns the
/// finite-difference consistency diagnostics.
ThermoDiagnostics thermodynamics_fermion(ThermalTrajectory& traj,
                                         const OneBodyFermionModel& model);

struct CcLimitReport {
  double max_residual_deviation = 0.0;  // general extremal-f flow vs hand-coded CC
  double max_mu_dependence = 0.0;       // over the swept mu values
  double fixed_point_residual = 0.0;    // block-diagonal h, t = 0
  double fixed_point_energy = 0.0;      // h0 + sum h_pq t_qp at that point
};

/// Verifies that the per-orbital flow at f_occ = 1, f_virt = 0 collapses to
/// the one-body coupled-cluster residual
///   -dt^a_i/dbeta = h_ai + sum_c h_ac t_ci - sum_k t_ak h_ki
///                   - sum_kc t_ak h_kc t_ci
/// and that mu drops out. occupied lists the orbitals with f = 1.
CcLimitReport cc_limit_check(const OneBodyFermionModel& model,
                             const std::vector<int>& occupied,
                             const Eigen::MatrixXcd& t_ai,
                             const std::vector<double>& mu_sweep = {-10.0, 0.0, 10.0});

void write_trajectory_csv(const ThermalTrajectory& traj, const std::string& path);

}  // namespace noe::fermion

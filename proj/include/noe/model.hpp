#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <variant>

#include "noe/errors.hpp"

namespace noe {

using Complex = std::complex<double>;

/// One-body fermionic Hamiltonian: H = E0 + sum_pq h_pq p^dag q on M
/// orthonormal orbitals holding n_el electrons on average.
struct OneBodyFermionModel {
  int M = 0;
  int n_el = 0;
  Eigen::MatrixXcd h;   // M x M, Hermitian
  double E0 = 0.0;
  std::string units = "unitless";

  void validate() const;
};

/// Per-orbital contraction values f_p in [0,1] with fbar_p = 1 - f_p.
struct ContractionScheme {
  Eigen::VectorXd f;

  Eigen::VectorXd fbar() const { return Eigen::VectorXd::Ones(f.size()) - f; }
  bool is_uniform(double tol = 0.0) const;

  static ContractionScheme uniform(int M, double f_value);
  /// Default scheme f_p = n_el / M.
  static ContractionScheme half_filling(const OneBodyFermionModel& m);

  void validate(int M) const;
};

/// Quadratic bosonic Hamiltonian in normal order over the true vacuum
/// (f = 0):
///   H = h0 + sum_i h_up_i a_i^dag + sum_i h_dn_i a_i
///          + sum_ij h_ud_ij a_i^dag a_j
///          + 1/2 sum_ij h_uu_ij a_i^dag a_j^dag + 1/2 sum_ij h_dd_ij a_i a_j
/// omega holds the reference-oscillator frequencies defining the ladder
/// operators.
struct BosonQuadraticModel {
  int N = 0;
  Eigen::VectorXd omega;   // cm^-1, > 0
  double h0 = 0.0;         // cm^-1, includes the zero-point energy
  Eigen::VectorXd h_up, h_dn;
  Eigen::MatrixXd h_ud;
  Eigen::MatrixXd h_uu, h_dd;  // symmetric
  std::string units = "cm-1";
  bool allow_non_hermitian = false;

  void validate() const;
};

/// Vertical-Hessian harmonic surface in ground-state dimensionless normal
/// modes: H = E_vert + sum_i kappa_i q_i + 1/2 sum_ij Phi_ij q_i q_j
///            + 1/2 sum_i omega_i p_i^2.
struct VerticalSurfaceSpec {
  int N = 0;
  Eigen::VectorXd omega;   // ground-state frequencies, cm^-1
  double E_vert = 0.0;     // cm^-1
  Eigen::VectorXd kappa;   // cm^-1
  Eigen::MatrixXd Phi;     // cm^-1, symmetric

  void validate() const;
};

using Model = std::variant<OneBodyFermionModel, BosonQuadraticModel, VerticalSurfaceSpec>;

enum class ModelKind { fermion, boson, surface };

/// Loads and validates a model file. kind must match the file's "kind" key.
Model load_model(const std::string& path, ModelKind kind);
Model load_model(const std::string& path);
void save_model(const Model& model, const std::string& path);

ModelKind model_kind(const Model& m);

/// Normal-orders a one-body fermionic Hamiltonian against the given
/// contraction: returns the scalar part h0 = E0 + sum_p f_p h_pp and the
/// (unchanged) one-body coefficient matrix.
struct NormalOrderedFermion {
  double h0 = 0.0;
  Eigen::MatrixXcd h_dot;
};
NormalOrderedFermion normal_order_fermion(const OneBodyFermionModel& model,
                                          const ContractionScheme& scheme);

/// Builds the second-quantized tensors of a vertical-Hessian surface with
/// q_i = (a_i^dag + a_i)/sqrt(2), p_i = i(a_i^dag - a_i)/sqrt(2):
///   h0   = E_vert + Tr(Phi)/4 + sum_i omega_i/4
///   h_up = h_dn = kappa/sqrt(2)
///   h_ud = Phi/2 + diag(omega)/2
///   h_uu = h_dd = Phi/2 - diag(omega)/2
BosonQuadraticModel assemble_excited_surface(const VerticalSurfaceSpec& spec);

}  // namespace noe

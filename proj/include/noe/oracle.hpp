#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "noe/boson.hpp"
#include "noe/fctime.hpp"
#include "noe/model.hpp"

namespace noe::oracle {

/// Occupation-number basis with a per-mode quantum cap; tuples enumerated
/// lexicographically (last mode fastest).
class FockBasis {
 public:
  FockBasis(int n_modes, const std::vector<int>& caps);
  FockBasis(int n_modes, int uniform_cap);

  int modes() const { return n_modes_; }
  long dim() const { return dim_; }
  int cap(int mode) const { return caps_[mode]; }
  const std::vector<int>& occupation(long index) const { return tuples_[index]; }
  int total_quanta(long index) const;
  /// Index of the tuple shifted by delta on one mode, or -1 outside the cap.
  long shifted(long index, int mode, int delta) const;

 private:
  int n_modes_ = 0;
  long dim_ = 0;
  std::vector<int> caps_;
  std::vector<long> strides_;
  std::vector<std::vector<int>> tuples_;
};

struct Eigh {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenvectors; // columns
};

/// Cyclic complex Jacobi diagonalization of a Hermitian matrix. Throws
/// on asymmetry beyond 1e-10 * scale or when 100 sweeps do not converge.
Eigh eigh(const Eigen::MatrixXcd& A);

struct FermiDiracPoint {
  double beta = 0.0;
  double mu = 0.0;  // NaN at beta = 0
  Eigen::VectorXd n;
  Eigen::MatrixXcd D;
  double lnZ = 0.0;      // -beta E0 + M ln(1-g) + sum_p ln(1+e^{-beta(eps_p-mu)})
  double U = 0.0;
  double entropy = 0.0;  // / kB
};

struct FermiDiracReference {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
  std::vector<FermiDiracPoint> points;
};

/// Closed-form grand-canonical reference: mu from bisection so that
/// sum_p n_p = n_el to 1e-12, occupations back-transformed to the original
/// basis, lnZ in the normalized-trace convention (ln tr of the evolved
/// uniform density with initial occupation g = n_el/M).
FermiDiracReference fermi_dirac_reference(const OneBodyFermionModel& model,
                                          const std::vector<double>& beta_grid);

/// Dense matrix of a quadratic boson Hamiltonian in the Fock basis,
/// assembled from sparse ladder-operator actions.
Eigen::MatrixXd boson_hamiltonian_matrix(const BosonQuadraticModel& model,
                                         const FockBasis& basis);

/// Dense creation / annihilation operator matrices for one mode.
Eigen::MatrixXd ladder_up(const FockBasis& basis, int mode);
Eigen::MatrixXd ladder_dn(const FockBasis& basis, int mode);

struct BosonSosPoint {
  double T = 0.0;
  double Z = 0.0;
  double U = 0.0;
  double entropy = 0.0;  // / kB
  boson::ThermalDensitySet densities;
};

struct BosonSosReference {
  std::vector<int> caps;
  Eigen::VectorXd eigenvalues;
  std::vector<BosonSosPoint> points;
};

struct BosonSosOptions {
  int n_states = 0;      // 0 = full sum
  int cap_start = 8;
  int cap_max = 48;
  double z_rel_tol = 1e-8;  // basis grown until Z is stable to this
  bool with_densities = true;  // density blocks cost n_states matvec sweeps
};

/// Sum-over-states thermal reference. The basis cap is grown until Z at the
/// highest requested temperature is stable to z_rel_tol; throws when the
/// cap limit is exceeded.
BosonSosReference boson_sos(const BosonQuadraticModel& model, const std::vector<double>& T_grid,
                            const BosonSosOptions& opts = {});

/// Exact autocorrelation <0|e^{-iH tau}|0> by eigen-decomposition in a
/// truncated basis, grown until the series is stable.
std::vector<Complex> exact_time_acf(const BosonQuadraticModel& model,
                                    const std::vector<double>& tau_grid_fs,
                                    int cap_start = 8, int cap_max = 40,
                                    double tol = 1e-9);

struct Statistics1dResult {
  std::vector<double> T;
  std::vector<double> occupation_numeric;
  std::vector<double> occupation_closed;
  double max_abs_deviation = 0.0;
};

/// Integrates the one-mode occupation flow dn/dbeta = -omega (n + alpha n^2)
/// from a low-temperature start and compares with the closed form
/// n = 1/(e^{omega/kB T} - alpha). alpha = +1 Bose, -1 Fermi, 0 Boltzmann
/// (the Boltzmann curve is the linear-equation limit; see statistics-demo).
Statistics1dResult statistics_1d(double omega_cm1, int alpha, const std::vector<double>& T_grid);

/// Residual evaluator signature used by connected_form_check so a mutated
/// transcription can serve as the negative control.
using TimeResidualFn =
    std::function<fctime::TimeResidual(const BosonQuadraticModel&, const fctime::TimeAmplitudes&)>;

/// Certifies H e^{T}|0> == (R0 + sum R_i a_i^dag + 1/2 sum R_ij a_i^dag
/// a_j^dag) e^{T}|0> in a truncated basis for the creation-only ansatz;
/// returns the max deviation over components at least two quanta below the
/// cap.
double connected_form_check(const BosonQuadraticModel& model, const FockBasis& basis,
                            const fctime::TimeAmplitudes& amps, const TimeResidualFn& residual);

}  // namespace noe::oracle

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "noe/model.hpp"

namespace noe::fctime {

/// Creation-only cluster amplitudes of the time-dependent state
/// |Psi(tau)> = exp(t0 + sum_i t_up_i a_i^dag + 1/2 sum_ij t_uu_ij
/// a_i^dag a_j^dag)|0>. All blocks vanish at tau = 0.
struct TimeAmplitudes {
  double tau = 0.0;  // fs
  Complex t0{0.0, 0.0};
  Eigen::VectorXcd t_up;
  Eigen::MatrixXcd t_uu;  // symmetric

  static TimeAmplitudes zeros(int N);
};

struct TimeResidual {
  Complex r0{0.0, 0.0};
  Eigen::VectorXcd t_up;
  Eigen::MatrixXcd t_uu;
};

/// Energy-space residual blocks R such that i d(amps)/dtau = 2 pi c R:
///   R0   = h0 + h_dn.p + (h_dd : P + p^T h_dd p)/2
///   R_i  = h_up_i + (h_ud p)_i + (P h_dd p)_i + (P h_dn)_i
///   R_ij = h_uu_ij + (h_ud P)_ij + (h_ud P)_ji + (P h_dd P)_ij
/// with p = t_up, P = t_uu. Quadratic closure is exact: no triples appear.
TimeResidual residual_time(const BosonQuadraticModel& model, const TimeAmplitudes& amps);

struct AcfSeries {
  double dtau = 0.0;  // fs
  std::vector<double> tau;
  std::vector<Complex> acf;
};

struct PropagateTimeOptions {
  int sample_stride = 1;
  double abs_bound = 1e-4;  // StepUnstable when |ACF| > 1 + abs_bound
};

/// Propagates the cluster amplitudes from zero and records
/// ACF(tau) = <Psi(0)|Psi(tau)> = e^{t0}. The constant h0 phase is applied
/// analytically; dtau must satisfy dtau <= 0.1 / (2 pi c omega_max).
AcfSeries propagate_time(const BosonQuadraticModel& model, double tau_max, double dtau,
                         const PropagateTimeOptions& opts = {});

struct Spectrum {
  std::vector<double> energy;     // cm^-1
  std::vector<double> intensity;  // >= 0
};

enum class Window { none, cosine };

struct SpectrumGrid {
  double e_min = 0.0;
  double e_max = 0.0;
  double de = 1.0;
};

/// Discrete Fourier transform of ACF(tau) e^{-gamma tau} with an optional
/// cosine window; the real part is taken and residual negative ringing
/// (bounded by 1e-6 of the maximum) is zeroed. gamma is the Lorentzian
/// half-width in cm^-1.
Spectrum compute_spectrum(const AcfSeries& acf, double damping_cm1, const SpectrumGrid& grid,
                          Window window = Window::none);

void write_acf_csv(const AcfSeries& acf, const std::string& path);
void write_spectrum_csv(const Spectrum& spec, const std::string& path);

}  // namespace noe::fctime

#pragma once

#include <string>
#include <vector>

namespace noe::cli {

struct RunConfig {
  std::string mode;  // fermion-thermal | boson-thermal | fc-spectrum | statistics-demo | verify
  std::string model_path;
  std::string integrator = "rk4";
  std::string output_dir = ".";
  std::string suite = "all";  // verify: all | quick

  // fermion-thermal
  double beta_max = 20.0;
  double dbeta = 2e-3;
  double f_value = -1.0;  // < 0 means n_el/M
  bool hermitize = false;

  // boson-thermal
  double t0_kelvin = 60.0;
  double tmax_kelvin = 500.0;
  double dbeta_boson = 2e-6;
  double dtau_kelvin = 0.005;
  int init_states = 3;
  double f_boson = 0.0;

  // fc-spectrum
  double tau_max_fs = 1000.0;
  double dtau_fs = 0.25;
  double damping_cm1 = 10.0;
  double e_min = 0.0;
  double e_max = 0.0;  // 0 = derive from model
  double de = 1.0;
  std::string window = "none";

  // statistics-demo
  double omega_cm1 = 300.0;
  double stat_tmin = 10.0;
  double stat_tmax = 1000.0;
  int stat_points = 100;

  int sample_stride = 10;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 1;
inline constexpr int exit_numerical_failure = 2;
inline constexpr int exit_verification_failure = 3;

/// Executes one run and writes its artifacts (CSVs + run manifest) into
/// config.output_dir. Returns one of the exit_* codes.
int run(const RunConfig& config);

/// Parses argv (flags, optional --config JSON with flag override) and runs.
int main_entry(int argc, char** argv);

}  // namespace noe::cli

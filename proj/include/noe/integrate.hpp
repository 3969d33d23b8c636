#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "noe/constants.hpp"
#include "noe/errors.hpp"

namespace noe::integrate {

/// Names the amplitude blocks packed into a flat state vector so failures
/// can be reported per block.
struct BlockLayout {
  struct Block {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
  };
  std::vector<Block> blocks;

  void add(const std::string& name, Eigen::Index size) {
    Eigen::Index off = total();
    blocks.push_back({name, off, size});
  }
  Eigen::Index total() const {
    return blocks.empty() ? 0 : blocks.back().offset + blocks.back().size;
  }
  std::string block_of(Eigen::Index i) const {
    for (const auto& b : blocks)
      if (i >= b.offset && i < b.offset + b.size) return b.name;
    return "?";
  }
};

template <class Scalar>
struct FlowState {
  double x = 0.0;
  Eigen::VectorX<Scalar> y;
};

template <class Scalar>
using Rhs = std::function<Eigen::VectorX<Scalar>(double, const Eigen::VectorX<Scalar>&)>;

template <class Scalar>
void check_finite(const Eigen::VectorX<Scalar>& y, const BlockLayout* layout) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(std::abs(y[i]))) {
      std::string where = layout ? layout->block_of(i) : std::string("state");
      throw StepUnstable("non-finite value in block '" + where + "'");
    }
  }
}

/// Classical fixed-step 4th-order Runge-Kutta update.
template <class Scalar>
FlowState<Scalar> step_rk4(const FlowState<Scalar>& s, double dx, const Rhs<Scalar>& rhs,
                           const BlockLayout* layout = nullptr) {
  const auto& y = s.y;
  Eigen::VectorX<Scalar> k1 = rhs(s.x, y);
  Eigen::VectorX<Scalar> k2 = rhs(s.x + 0.5 * dx, y + (0.5 * dx) * k1);
  Eigen::VectorX<Scalar> k3 = rhs(s.x + 0.5 * dx, y + (0.5 * dx) * k2);
  Eigen::VectorX<Scalar> k4 = rhs(s.x + dx, y + dx * k3);
  FlowState<Scalar> out;
  out.x = s.x + dx;
  out.y = y + (dx / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check_finite(out.y, layout);
  return out;
}

/// Two-step central-difference update, y_{i+1} = y_{i-1} + 2 dx f(x_i, y_i).
/// Bootstrap the first point with one Euler step of size dx.
template <class Scalar>
FlowState<Scalar> step_leapfrog(const FlowState<Scalar>& prev, const FlowState<Scalar>& curr,
                                double dx, const Rhs<Scalar>& rhs,
                                const BlockLayout* layout = nullptr) {
  FlowState<Scalar> out;
  out.x = curr.x + dx;
  out.y = prev.y + (2.0 * dx) * rhs(curr.x, curr.y);
  check_finite(out.y, layout);
  return out;
}

template <class Scalar>
FlowState<Scalar> step_euler(const FlowState<Scalar>& s, double dx, const Rhs<Scalar>& rhs,
                             const BlockLayout* layout = nullptr) {
  FlowState<Scalar> out;
  out.x = s.x + dx;
  out.y = s.y + dx * rhs(s.x, s.y);
  check_finite(out.y, layout);
  return out;
}

/// Temperature-domain leap-frog for flows dS/dtau = R(S) / (kB tau^2):
///   S(tau_{i+1}) = S(tau_{i-1}) - (1/(kB tau_{i+1}) - 1/(kB tau_{i-1})) R(S(tau_i)).
/// The rhs callback returns R evaluated at (tau_i, S_i).
template <class Scalar>
FlowState<Scalar> step_leapfrog_temperature(const FlowState<Scalar>& prev,
                                            const FlowState<Scalar>& curr, double tau_prev,
                                            double tau_curr, double tau_next,
                                            const Rhs<Scalar>& rhs,
                                            const BlockLayout* layout = nullptr) {
  if (tau_prev <= 0.0 || tau_curr <= 0.0 || tau_next <= 0.0)
    throw NonPositiveTemperature("leapfrog-temperature requires tau > 0");
  const double w = 1.0 / (kB_cm1_per_K * tau_next) - 1.0 / (kB_cm1_per_K * tau_prev);
  FlowState<Scalar> out;
  out.x = tau_next;
  out.y = prev.y - w * rhs(tau_curr, curr.y);
  check_finite(out.y, layout);
  return out;
}

}  // namespace noe::integrate

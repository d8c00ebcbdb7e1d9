#pragma once

#include "lyapnet/network.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lyapnet {

// Local Jacobians along one trajectory; factors[q] maps perturbations of
// state q to perturbations of state q+1 (shape D_{q+1} x D_q).
struct JacobianChain {
  std::vector<Matrix> factors;
  std::optional<std::size_t> trajectory_ref;

  std::size_t depth() const { return factors.size(); }
  Eigen::Index in_dim() const { return factors.empty() ? 0 : factors.front().cols(); }
  Eigen::Index out_dim() const { return factors.empty() ? 0 : factors.back().rows(); }
};

// Plain:    diag(σ'(K y + ξ)) K
// Residual: I + dt · diag(σ'(K y + ξ)) K
inline Matrix local_jacobian(const NetworkSpec& net, std::size_t q, const Vector& y) {
  check_step_shape(net, q, y);
  const auto& L = net.layers[q];
  const Vector d = activation_derivs(L, preactivation(L, y));
  Matrix J = d.asDiagonal() * L.weights;
  if (net.update_form == UpdateForm::Residual) {
    J *= net.dt;
    J.diagonal().array() += 1.0;
  }
  return J;
}

inline JacobianChain chain(const NetworkSpec& net, const Trajectory& traj, std::size_t depth) {
  if (depth < 1 || depth > traj.transitions())
    throw UsageError("depth " + std::to_string(depth) + " outside [1, " +
                     std::to_string(traj.transitions()) + "]");
  JacobianChain out;
  out.trajectory_ref = traj.input_id;
  out.factors.reserve(depth);
  for (std::size_t q = 0; q < depth; ++q) out.factors.push_back(local_jacobian(net, q, traj.states[q]));
  return out;
}

// Central-difference estimate of d y^[depth] / d y^[0], one column per input
// coordinate. Serves as an oracle for the analytic chain product.
inline Matrix finite_difference_sensitivity(const NetworkSpec& net, const Vector& y0,
                                            std::size_t depth, double h = 1e-5) {
  if (!(h > 0.0)) throw UsageError("finite-difference step must be positive");
  if (depth > net.transitions()) throw UsageError("depth exceeds network transitions");
  if (y0.size() != net.input_dim) throw DimensionError(0, "input length mismatch");
  const Eigen::Index out_dim = depth == 0 ? net.input_dim : net.layers[depth - 1].out_dim();
  Matrix M(out_dim, y0.size());
  for (Eigen::Index b = 0; b < y0.size(); ++b) {
    Vector plus = y0, minus = y0;
    plus[b] += h;
    minus[b] -= h;
    M.col(b) = (forward_to(net, plus, depth) - forward_to(net, minus, depth)) / (2.0 * h);
  }
  return M;
}

}  // namespace lyapnet

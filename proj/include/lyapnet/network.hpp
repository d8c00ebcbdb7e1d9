#pragma once

#include "lyapnet/activation.hpp"
#include "lyapnet/core.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lyapnet {

enum class UpdateForm { Plain, Residual };

// One transition y -> σ(K y + ξ). `activations` holds either a single entry
// applied to every output neuron or one entry per output neuron.
struct LayerParams {
  Matrix weights;
  Vector bias;
  std::vector<Activation> activations{Activation::identity()};

  LayerParams() = default;
  LayerParams(Matrix w, Vector b, Activation act)
      : weights(std::move(w)), bias(std::move(b)), activations{act} {}
  LayerParams(Matrix w, Vector b, std::vector<Activation> acts)
      : weights(std::move(w)), bias(std::move(b)), activations(std::move(acts)) {}

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }

  const Activation& activation(Eigen::Index row) const {
    return activations.size() == 1 ? activations.front()
                                   : activations[static_cast<std::size_t>(row)];
  }
  bool uniform_activation() const { return activations.size() == 1; }
};

// A feedforward network viewed as a discrete-time dynamical system. Layer q
// maps state q to state q+1; there are layers.size() transitions and
// layers.size() + 1 states.
struct NetworkSpec {
  std::vector<LayerParams> layers;
  UpdateForm update_form = UpdateForm::Plain;
  double dt = 1.0;
  Eigen::Index input_dim = 0;

  std::size_t transitions() const { return layers.size(); }
  Eigen::Index output_dim() const {
    return layers.empty() ? input_dim : layers.back().out_dim();
  }
};

// Checks every structural invariant; throws UsageError/DimensionError.
inline void validate(const NetworkSpec& net) {
  if (net.input_dim <= 0) throw UsageError("input_dim must be positive");
  if (net.layers.empty()) throw UsageError("network has no layers");
  if (!(net.dt >= 0.0) || !std::isfinite(net.dt)) throw UsageError("dt must be finite and >= 0");
  Eigen::Index prev = net.input_dim;
  for (std::size_t q = 0; q < net.layers.size(); ++q) {
    const auto& L = net.layers[q];
    if (L.in_dim() != prev)
      throw DimensionError(q, "weights have " + std::to_string(L.in_dim()) +
                                  " columns, expected " + std::to_string(prev));
    if (L.bias.size() != L.out_dim())
      throw DimensionError(q, "bias length " + std::to_string(L.bias.size()) +
                                  " differs from weight rows " + std::to_string(L.out_dim()));
    if (L.activations.empty() ||
        (L.activations.size() != 1 &&
         static_cast<Eigen::Index>(L.activations.size()) != L.out_dim()))
      throw DimensionError(q, "activation list must have 1 or out_dim entries");
    for (const auto& a : L.activations) validate(a);
    if (!L.weights.allFinite() || !L.bias.allFinite())
      throw DimensionError(q, "non-finite parameter");
    if (net.update_form == UpdateForm::Residual && L.out_dim() != L.in_dim())
      throw DimensionError(q, "residual form requires a square transition");
    prev = L.out_dim();
  }
}

struct Trajectory {
  std::vector<Vector> states;
  std::optional<std::size_t> input_id;

  std::size_t transitions() const { return states.empty() ? 0 : states.size() - 1; }
};

inline Vector preactivation(const LayerParams& L, const Vector& y) {
  return L.weights * y + L.bias;
}

inline Vector apply_activation(const LayerParams& L, const Vector& z) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = activate(L.activation(i), z[i]);
  return out;
}

inline Vector activation_derivs(const LayerParams& L, const Vector& z) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = activate_deriv(L.activation(i), z[i]);
  return out;
}

inline void check_step_shape(const NetworkSpec& net, std::size_t q, const Vector& y) {
  if (q >= net.transitions())
    throw DimensionError(q, "layer index out of range (" + std::to_string(net.transitions()) +
                                " transitions)");
  if (y.size() != net.layers[q].in_dim())
    throw DimensionError(q, "state has length " + std::to_string(y.size()) + ", expected " +
                                std::to_string(net.layers[q].in_dim()));
}

// Plain: σ(K y + ξ).  Residual: y + σ(K y + ξ)·dt.
inline Vector step(const NetworkSpec& net, std::size_t q, const Vector& y) {
  check_step_shape(net, q, y);
  const auto& L = net.layers[q];
  Vector out = apply_activation(L, preactivation(L, y));
  if (net.update_form == UpdateForm::Residual) out = y + out * net.dt;
  return out;
}

// Propagates y0 through every transition. Throws NumericError naming the first
// layer whose output is non-finite.
inline Trajectory forward(const NetworkSpec& net, const Vector& y0,
                          std::optional<std::size_t> input_id = std::nullopt) {
  if (y0.size() != net.input_dim)
    throw DimensionError(0, "input has length " + std::to_string(y0.size()) +
                                ", expected input_dim " + std::to_string(net.input_dim));
  if (!y0.allFinite()) throw UsageError("input contains non-finite entries");
  Trajectory traj;
  traj.input_id = input_id;
  traj.states.reserve(net.transitions() + 1);
  traj.states.push_back(y0);
  for (std::size_t q = 0; q < net.transitions(); ++q) {
    Vector next = step(net, q, traj.states.back());
    if (!next.allFinite())
      throw NumericError("non-finite state after layer " + std::to_string(q) +
                         " (numerically exploding configuration)");
    traj.states.push_back(std::move(next));
  }
  return traj;
}

// State at depth j only (no trajectory storage).
inline Vector forward_to(const NetworkSpec& net, const Vector& y0, std::size_t depth) {
  Vector y = y0;
  for (std::size_t q = 0; q < depth; ++q) y = step(net, q, y);
  return y;
}

}  // namespace lyapnet

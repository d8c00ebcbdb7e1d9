#pragma once

#include "lyapnet/core.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

namespace lyapnet {

enum class ActivationType { Identity, Sigmoid, Tanh, SteepStep, ReLU, ELU, Swish };

// A pointwise nonlinearity. `param` is the steepness for Sigmoid/Tanh/SteepStep,
// alpha for ELU and beta for Swish; Identity and ReLU ignore it.
//
// SteepStep stands in for the binary step: a sigmoid with a large steepness,
// so its derivative is a finite, tunable spike instead of a delta.
struct Activation {
  ActivationType type = ActivationType::Identity;
  double param = 1.0;

  static Activation identity() { return {ActivationType::Identity, 1.0}; }
  static Activation sigmoid(double k = 1.0) { return {ActivationType::Sigmoid, k}; }
  static Activation tanh(double k = 1.0) { return {ActivationType::Tanh, k}; }
  static Activation steep_step(double k = 50.0) { return {ActivationType::SteepStep, k}; }
  static Activation relu() { return {ActivationType::ReLU, 1.0}; }
  static Activation elu(double alpha = 1.0) { return {ActivationType::ELU, alpha}; }
  static Activation swish(double beta = 1.0) { return {ActivationType::Swish, beta}; }

  bool uses_param() const {
    return type != ActivationType::Identity && type != ActivationType::ReLU;
  }
  // Smooth everywhere (no kinks), so finite differences converge at O(h^2).
  bool smooth() const { return type != ActivationType::ReLU; }

  friend bool operator==(const Activation& a, const Activation& b) {
    if (a.type != b.type) return false;
    return !a.uses_param() || a.param == b.param;
  }
};

inline void validate(const Activation& a) {
  if (a.uses_param() && !(a.param > 0.0 && std::isfinite(a.param)))
    throw UsageError("activation parameter must be a positive finite number");
}

namespace detail {

// Logistic function without overflow for large |x|.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline double activate(const Activation& a, double x) {
  switch (a.type) {
    case ActivationType::Identity:
      return x;
    case ActivationType::Sigmoid:
    case ActivationType::SteepStep:
      return detail::logistic(a.param * x);
    case ActivationType::Tanh:
      return std::tanh(a.param * x);
    case ActivationType::ReLU:
      return x > 0.0 ? x : 0.0;
    case ActivationType::ELU:
      return x > 0.0 ? x : a.param * std::expm1(x);
    case ActivationType::Swish:
      return x * detail::logistic(a.param * x);
  }
  return x;
}

// dσ/dx. ReLU'(0) = 0; ELU uses the left branch at 0.
inline double activate_deriv(const Activation& a, double x) {
  switch (a.type) {
    case ActivationType::Identity:
      return 1.0;
    case ActivationType::Sigmoid:
    case ActivationType::SteepStep: {
      const double s = detail::logistic(a.param * x);
      return a.param * s * (1.0 - s);
    }
    case ActivationType::Tanh: {
      const double t = std::tanh(a.param * x);
      return a.param * (1.0 - t * t);
    }
    case ActivationType::ReLU:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationType::ELU:
      return x > 0.0 ? 1.0 : a.param * std::exp(x);
    case ActivationType::Swish: {
      const double s = detail::logistic(a.param * x);
      return s + a.param * x * s * (1.0 - s);
    }
  }
  return 1.0;
}

inline std::string_view to_string(ActivationType t) {
  switch (t) {
    case ActivationType::Identity: return "identity";
    case ActivationType::Sigmoid: return "sigmoid";
    case ActivationType::Tanh: return "tanh";
    case ActivationType::SteepStep: return "steep_step";
    case ActivationType::ReLU: return "relu";
    case ActivationType::ELU: return "elu";
    case ActivationType::Swish: return "swish";
  }
  return "identity";
}

inline ActivationType activation_type_from_string(std::string_view s) {
  for (auto t : {ActivationType::Identity, ActivationType::Sigmoid, ActivationType::Tanh,
                 ActivationType::SteepStep, ActivationType::ReLU, ActivationType::ELU,
                 ActivationType::Swish})
    if (to_string(t) == s) return t;
  throw UsageError("unknown activation kind '" + std::string(s) + "'");
}

// Short label such as "tanh(1)" or "relu", used in experiment reports.
inline std::string label(const Activation& a) {
  std::string out(to_string(a.type));
  if (a.uses_param()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "(%g)", a.param);
    out += buf;
  }
  return out;
}

}  // namespace lyapnet

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lyapnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

// Base of every error the library throws. Callers that only care about
// success/failure can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: wrong shapes, bad config values, unparsable files.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch between a layer and the vector fed to it.
class DimensionError : public UsageError {
 public:
  DimensionError(std::size_t layer, const std::string& what)
      : UsageError("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

// A computation produced a non-finite value (exploding state, divergent
// training, overflowing product).
class NumericError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace lyapnet

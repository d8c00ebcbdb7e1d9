#pragma once

// Small SGD trainer (mean-squared error, optional L2 weight decay). It only
// exists to produce trained subjects for spectral diagnostics.

#include "lyapnet/io.hpp"
#include "lyapnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace lyapnet {

enum class DatasetKind { NoisySine, TwoClusters, Linear };

inline std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::NoisySine: return "noisy-sine";
    case DatasetKind::TwoClusters: return "two-clusters";
    case DatasetKind::Linear: return "linear";
  }
  return "noisy-sine";
}

inline DatasetKind dataset_kind_from_string(const std::string& s) {
  for (auto k : {DatasetKind::NoisySine, DatasetKind::TwoClusters, DatasetKind::Linear})
    if (to_string(k) == s) return k;
  throw UsageError("unknown data kind '" + s + "' (expected noisy-sine, two-clusters or linear)");
}

struct Dataset {
  std::vector<Vector> inputs;
  std::vector<Vector> targets;
  std::string name;

  std::size_t size() const { return inputs.size(); }
};

// Input/target dimensions per kind: NoisySine 1 -> 1, TwoClusters 2 -> 2
// (one-hot), Linear 2 -> 2.
inline Eigen::Index dataset_input_dim(DatasetKind k) { return k == DatasetKind::NoisySine ? 1 : 2; }
inline Eigen::Index dataset_target_dim(DatasetKind k) { return k == DatasetKind::NoisySine ? 1 : 2; }

struct TwoClusterGeometry {
  double separation = 4.0;  // distance of each centre from the origin along x
  double spread = 0.5;
};

// Affine map used by the Linear kind.
inline Matrix linear_task_matrix() { return (Matrix(2, 2) << 0.5, -0.3, 0.2, 0.8).finished(); }
inline Vector linear_task_offset() { return (Vector(2) << 0.1, -0.2).finished(); }

// NoisySine: x ~ U[-π, π], t = sin x + N(0, noise²).
// TwoClusters: class c ∈ {0,1} alternating, x ~ N(±separation·e_1, spread²), t one-hot.
// Linear: x ~ U[-1, 1]², t = A x + c + N(0, noise²).
inline Dataset make_dataset(DatasetKind kind, std::size_t n, double noise, std::uint64_t seed,
                            TwoClusterGeometry geom = {}) {
  if (n < 1) throw UsageError("dataset size must be at least 1");
  if (!(noise >= 0.0)) throw UsageError("noise must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.name = std::string(to_string(kind));
  for (std::size_t i = 0; i < n; ++i) {
    Vector x, t;
    switch (kind) {
      case DatasetKind::NoisySine: {
        std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
        x = Vector::Constant(1, u(rng));
        const double eps = gauss(rng) * noise;
        t = Vector::Constant(1, std::sin(x[0]) + eps);
        break;
      }
      case DatasetKind::TwoClusters: {
        const int c = static_cast<int>(i % 2);
        x = Vector(2);
        x[0] = (c == 0 ? -geom.separation : geom.separation) + gauss(rng) * geom.spread;
        x[1] = gauss(rng) * geom.spread;
        t = Vector::Zero(2);
        t[c] = 1.0;
        break;
      }
      case DatasetKind::Linear: {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        x = Vector(2);
        x[0] = u(rng);
        x[1] = u(rng);
        t = linear_task_matrix() * x + linear_task_offset();
        for (Eigen::Index k = 0; k < t.size(); ++k) t[k] += gauss(rng) * noise;
        break;
      }
    }
    d.inputs.push_back(std::move(x));
    d.targets.push_back(std::move(t));
  }
  return d;
}

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.05;
  std::size_t batch_size = 8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
    throw UsageError("learning_rate must be finite and >= 0");
  if (c.batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (!(c.weight_decay >= 0.0) || !std::isfinite(c.weight_decay))
    throw UsageError("weight_decay must be finite and >= 0");
}

// Gradients with the same layout as the network's parameters.
struct ParamGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  explicit ParamGrads(const NetworkSpec& net) {
    for (const auto& L : net.layers) {
      weights.push_back(Matrix::Zero(L.weights.rows(), L.weights.cols()));
      bias.push_back(Vector::Zero(L.bias.size()));
    }
  }
};

inline void check_dataset(const NetworkSpec& net, const Dataset& data) {
  if (data.inputs.size() != data.targets.size()) throw UsageError("dataset inputs/targets differ in length");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.inputs[i].size() != net.input_dim)
      throw UsageError("dataset input " + std::to_string(i) + " does not match network input_dim");
    if (data.targets[i].size() != net.output_dim())
      throw UsageError("dataset target " + std::to_string(i) + " does not match network output dim");
  }
}

// Mean over samples and output components of the squared error (no decay term).
inline double mse_loss(const NetworkSpec& net, const Dataset& data) {
  check_dataset(net, data);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += (forward_to(net, data.inputs[i], net.transitions()) - data.targets[i]).squaredNorm();
  return total / static_cast<double>(data.size() * static_cast<std::size_t>(net.output_dim()));
}

// Backprop of the MSE over the listed samples (all samples when empty).
inline ParamGrads loss_gradient(const NetworkSpec& net, const Dataset& data,
                                const std::vector<std::size_t>& batch = {}) {
  ParamGrads g(net);
  std::vector<std::size_t> idx = batch;
  if (idx.empty()) {
    idx.resize(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  const double scale = 2.0 / static_cast<double>(idx.size() * static_cast<std::size_t>(net.output_dim()));
  std::vector<Vector> states(net.transitions() + 1), pre(net.transitions());
  for (std::size_t i : idx) {
    states[0] = data.inputs[i];
    for (std::size_t q = 0; q < net.transitions(); ++q) {
      const auto& L = net.layers[q];
      pre[q] = preactivation(L, states[q]);
      Vector a = apply_activation(L, pre[q]);
      states[q + 1] = net.update_form == UpdateForm::Residual ? Vector(states[q] + net.dt * a) : a;
    }
    Vector up = scale * (states.back() - data.targets[i]);
    for (std::size_t q = net.transitions(); q-- > 0;) {
      const auto& L = net.layers[q];
      Vector gz = activation_derivs(L, pre[q]).cwiseProduct(up);
      if (net.update_form == UpdateForm::Residual) gz *= net.dt;
      g.weights[q].noalias() += gz * states[q].transpose();
      g.bias[q] += gz;
      Vector down = L.weights.transpose() * gz;
      if (net.update_form == UpdateForm::Residual) down += up;
      up = std::move(down);
    }
  }
  return g;
}

inline double weight_norm(const NetworkSpec& net) {
  double s = 0.0;
  for (const auto& L : net.layers) s += L.weights.squaredNorm();
  return std::sqrt(s);
}

struct TrainResult {
  NetworkSpec network;
  std::vector<double> loss_history;  // entry 0 is the initial loss, then one per epoch
  std::vector<double> weight_norms;  // same indexing
};

// Mini-batch SGD: w <- w - lr (∇L + weight_decay · w); biases are not decayed.
// Throws NumericError naming the epoch when the loss or parameters go non-finite.
inline TrainResult train(const NetworkSpec& net, const Dataset& data, const TrainConfig& cfg) {
  validate(net);
  validate(cfg);
  check_dataset(net, data);
  TrainResult res{net, {}, {}};
  res.loss_history.push_back(mse_loss(res.network, data));
  res.weight_norms.push_back(weight_norm(res.network));
  if (cfg.learning_rate == 0.0) return res;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      const ParamGrads g = loss_gradient(res.network, data, batch);
      for (std::size_t q = 0; q < res.network.layers.size(); ++q) {
        auto& L = res.network.layers[q];
        L.weights -= cfg.learning_rate * (g.weights[q] + cfg.weight_decay * L.weights);
        L.bias -= cfg.learning_rate * g.bias[q];
      }
    }
    double loss = std::numeric_limits<double>::quiet_NaN();
    bool finite = true;
    for (const auto& L : res.network.layers) finite = finite && L.weights.allFinite() && L.bias.allFinite();
    if (finite) {
      try {
        loss = mse_loss(res.network, data);
      } catch (const NumericError&) {
      }
    }
    if (!finite || !std::isfinite(loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
    res.loss_history.push_back(loss);
    res.weight_norms.push_back(weight_norm(res.network));
  }
  return res;
}

inline std::string loss_history_csv(const std::vector<double>& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out += std::to_string(e) + "," + format_double(history[e]) + "\n";
  return out;
}

inline Json to_json(const TrainConfig& c) {
  return Json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"weight_decay", c.weight_decay},
              {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const Json& j, TrainConfig c = {},
                                          const std::string& where = "train") {
  using namespace json_detail;
  reject_unknown(j, {"epochs", "learning_rate", "batch_size", "weight_decay", "seed"}, where);
  auto nonneg_int = [&](const char* k) {
    const long long v = integer(j.at(k), where + "." + k);
    if (v < 0) throw UsageError(where + "." + k + ": must be non-negative");
    return static_cast<std::uint64_t>(v);
  };
  if (j.contains("epochs")) c.epochs = nonneg_int("epochs");
  if (j.contains("batch_size")) c.batch_size = nonneg_int("batch_size");
  if (j.contains("seed")) c.seed = nonneg_int("seed");
  if (j.contains("learning_rate")) c.learning_rate = number(j.at("learning_rate"), where + ".learning_rate");
  if (j.contains("weight_decay")) c.weight_decay = number(j.at("weight_decay"), where + ".weight_decay");
  validate(c);
  return c;
}

}  // namespace lyapnet

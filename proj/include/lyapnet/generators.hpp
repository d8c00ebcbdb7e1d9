#pragma once

// Random and structured networks: width, connectivity, weight scale,
// column normalization, magnitude pruning and delay embedding.

#include "lyapnet/io.hpp"
#include "lyapnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace lyapnet {

enum class Normalization { None, ColumnSum1 };

inline std::string_view to_string(Normalization n) {
  return n == Normalization::None ? "none" : "column_sum1";
}

struct GeneratorConfig {
  Eigen::Index width_D = 8;
  std::size_t depth_N = 2;  // number of layer states; transitions = depth_N - 1
  double connectivity_p = 1.0;
  double weight_scale_s = 1.0;
  Normalization normalization = Normalization::None;
  Activation activation = Activation::tanh();
  UpdateForm update_form = UpdateForm::Plain;
  double dt = 1.0;
  std::uint64_t seed = 0;
  // First/last layer dimensions; 0 means width_D.
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  // Post-processing applied by build_network().
  double prune_fraction = 0.0;
  bool delay_embed = false;
  double embed_feedback = 0.0;

  Eigen::Index in_dim() const { return input_dim > 0 ? input_dim : width_D; }
  Eigen::Index out_dim() const { return output_dim > 0 ? output_dim : width_D; }
};

inline void validate(const GeneratorConfig& cfg) {
  if (cfg.width_D < 1) throw UsageError("width_D must be a positive integer");
  if (cfg.depth_N < 2) throw UsageError("depth_N must be at least 2");
  if (!(cfg.connectivity_p > 0.0 && cfg.connectivity_p <= 1.0))
    throw UsageError("connectivity_p must lie in (0, 1]");
  if (!(cfg.weight_scale_s >= 0.0) || !std::isfinite(cfg.weight_scale_s))
    throw UsageError("weight_scale_s must be finite and >= 0");
  if (!(cfg.dt >= 0.0) || !std::isfinite(cfg.dt)) throw UsageError("dt must be finite and >= 0");
  if (cfg.input_dim < 0 || cfg.output_dim < 0) throw UsageError("input_dim/output_dim must be >= 0");
  if (!(cfg.prune_fraction >= 0.0 && cfg.prune_fraction < 1.0))
    throw UsageError("prune_fraction must lie in [0, 1)");
  validate(cfg.activation);
  if (cfg.update_form == UpdateForm::Residual &&
      (cfg.in_dim() != cfg.width_D || cfg.out_dim() != cfg.width_D))
    throw UsageError("residual networks need input_dim = output_dim = width_D");
}

// Weights are (Bernoulli(p) mask) ⊙ Gaussian(0, s^2), biases Gaussian(0, s^2).
// With ColumnSum1 every column holds entry magnitudes rescaled to sum to 1;
// a column whose sum is below 1e-9 is redrawn (at most 100 times).
inline NetworkSpec generate(const GeneratorConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  NetworkSpec net;
  net.update_form = cfg.update_form;
  net.dt = cfg.dt;
  net.input_dim = cfg.in_dim();
  const std::size_t transitions = cfg.depth_N - 1;
  for (std::size_t q = 0; q < transitions; ++q) {
    const Eigen::Index cols = q == 0 ? cfg.in_dim() : cfg.width_D;
    const Eigen::Index rows = q + 1 == transitions ? cfg.out_dim() : cfg.width_D;
    Matrix w(rows, cols);
    auto draw_column = [&](Eigen::Index c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const bool keep = unit(rng) < cfg.connectivity_p;
        const double g = gauss(rng) * cfg.weight_scale_s;
        w(r, c) = keep ? g : 0.0;
      }
    };
    for (Eigen::Index c = 0; c < cols; ++c) {
      draw_column(c);
      if (cfg.normalization == Normalization::ColumnSum1) {
        int attempts = 0;
        w.col(c) = w.col(c).cwiseAbs();
        while (w.col(c).sum() < 1e-9) {
          if (++attempts > 100)
            throw UsageError("ColumnSum1: column " + std::to_string(c) + " of layer " +
                             std::to_string(q) + " keeps summing to ~0; raise connectivity_p or weight_scale_s");
          draw_column(c);
          w.col(c) = w.col(c).cwiseAbs();
        }
        w.col(c) /= w.col(c).sum();
      }
    }
    Vector b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) b[r] = gauss(rng) * cfg.weight_scale_s;
    net.layers.emplace_back(std::move(w), std::move(b), cfg.activation);
  }
  validate(net);
  return net;
}

// Widens a constant-width plain network to state (y ⊕ x) with x^[j+1] = y^[j]:
//   K' = [[K, f·I], [I, 0]],  ξ' = [ξ; 0],  σ' = (σ, identity).
// With feedback f = 0 the y-block evolves exactly as the original network.
inline NetworkSpec delay_embed(const NetworkSpec& net, double feedback = 0.0) {
  validate(net);
  if (net.update_form != UpdateForm::Plain)
    throw UsageError("delay_embed is defined for plain-update networks only");
  const Eigen::Index D = net.input_dim;
  for (std::size_t q = 0; q < net.layers.size(); ++q)
    if (net.layers[q].in_dim() != D || net.layers[q].out_dim() != D)
      throw DimensionError(q, "delay_embed needs constant width");

  NetworkSpec out;
  out.update_form = UpdateForm::Plain;
  out.dt = net.dt;
  out.input_dim = 2 * D;
  for (const auto& L : net.layers) {
    Matrix w = Matrix::Zero(2 * D, 2 * D);
    w.topLeftCorner(D, D) = L.weights;
    if (feedback != 0.0) w.topRightCorner(D, D).diagonal().setConstant(feedback);
    w.bottomLeftCorner(D, D).setIdentity();
    Vector b = Vector::Zero(2 * D);
    b.head(D) = L.bias;
    std::vector<Activation> acts;
    acts.reserve(static_cast<std::size_t>(2 * D));
    for (Eigen::Index r = 0; r < D; ++r) acts.push_back(L.activation(r));
    for (Eigen::Index r = 0; r < D; ++r) acts.push_back(Activation::identity());
    out.layers.emplace_back(std::move(w), std::move(b), std::move(acts));
  }
  return out;
}

// Zeroes the smallest-magnitude entries of every weight row so that
// ceil((1 - fraction)·D_in) entries survive. Ties go to the lower column index.
inline NetworkSpec prune(const NetworkSpec& net, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw UsageError("prune fraction must lie in [0, 1)");
  NetworkSpec out = net;
  for (auto& L : out.layers) {
    const Eigen::Index cols = L.weights.cols();
    const auto keep = static_cast<Eigen::Index>(
        std::ceil((1.0 - fraction) * static_cast<double>(cols) - 1e-9));
    const Eigen::Index drop = cols - std::max<Eigen::Index>(keep, 1);
    if (drop <= 0) continue;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(cols));
    for (Eigen::Index r = 0; r < L.weights.rows(); ++r) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(L.weights(r, a)) < std::abs(L.weights(r, b));
      });
      for (Eigen::Index k = 0; k < drop; ++k) L.weights(r, order[static_cast<std::size_t>(k)]) = 0.0;
    }
  }
  return out;
}

// generate(), then prune and/or delay-embed as the config requests.
inline NetworkSpec build_network(const GeneratorConfig& cfg) {
  NetworkSpec net = generate(cfg);
  if (cfg.prune_fraction > 0.0) net = prune(net, cfg.prune_fraction);
  if (cfg.delay_embed) net = delay_embed(net, cfg.embed_feedback);
  return net;
}

// ---------------------------------------------------------------------------
// JSON (field names mirror GeneratorConfig)

inline Json to_json(const GeneratorConfig& cfg) {
  Json j{{"width_D", cfg.width_D},
         {"depth_N", cfg.depth_N},
         {"connectivity_p", cfg.connectivity_p},
         {"weight_scale_s", cfg.weight_scale_s},
         {"normalization", std::string(to_string(cfg.normalization))},
         {"activation", to_json(cfg.activation)},
         {"update_form", std::string(to_string(cfg.update_form))},
         {"dt", cfg.dt},
         {"seed", cfg.seed},
         {"weight_distribution", "gaussian"}};
  if (cfg.input_dim > 0) j["input_dim"] = cfg.input_dim;
  if (cfg.output_dim > 0) j["output_dim"] = cfg.output_dim;
  if (cfg.prune_fraction > 0.0) j["prune_fraction"] = cfg.prune_fraction;
  if (cfg.delay_embed) j["delay_embed"] = true;
  if (cfg.embed_feedback != 0.0) j["embed_feedback"] = cfg.embed_feedback;
  return j;
}

// Missing fields keep their defaults; unknown fields are rejected.
inline GeneratorConfig generator_config_from_json(const Json& j, GeneratorConfig cfg = {},
                                                  const std::string& where = "generator") {
  using namespace json_detail;
  reject_unknown(j,
                 {"width_D", "depth_N", "connectivity_p", "weight_scale_s", "normalization",
                  "activation", "update_form", "dt", "seed", "input_dim", "output_dim",
                  "prune_fraction", "delay_embed", "embed_feedback", "weight_distribution"},
                 where);
  auto get_num = [&](const char* k, double& dst) {
    if (auto it = j.find(k); it != j.end()) dst = number(*it, where + "." + k);
  };
  auto get_int = [&](const char* k, auto& dst) {
    if (auto it = j.find(k); it != j.end()) {
      const long long v = integer(*it, where + "." + k);
      if (v < 0) throw UsageError(where + "." + k + ": must be non-negative");
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(v);
    }
  };
  get_int("width_D", cfg.width_D);
  get_int("depth_N", cfg.depth_N);
  get_num("connectivity_p", cfg.connectivity_p);
  get_num("weight_scale_s", cfg.weight_scale_s);
  get_num("dt", cfg.dt);
  get_int("input_dim", cfg.input_dim);
  get_int("output_dim", cfg.output_dim);
  get_num("prune_fraction", cfg.prune_fraction);
  get_num("embed_feedback", cfg.embed_feedback);
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
      throw UsageError(where + ".seed: expected a non-negative integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("normalization"); it != j.end()) {
    const std::string n = it->is_string() ? it->get<std::string>() : "";
    if (n == "none") cfg.normalization = Normalization::None;
    else if (n == "column_sum1") cfg.normalization = Normalization::ColumnSum1;
    else throw UsageError(where + ".normalization: expected \"none\" or \"column_sum1\"");
  }
  if (auto it = j.find("weight_distribution"); it != j.end())
    if (!it->is_string() || it->get<std::string>() != "gaussian")
      throw UsageError(where + ".weight_distribution: only \"gaussian\" is supported");
  if (auto it = j.find("activation"); it != j.end())
    cfg.activation = activation_from_json(*it, where + ".activation");
  if (auto it = j.find("update_form"); it != j.end()) {
    if (!it->is_string()) throw UsageError(where + ".update_form: expected a string");
    cfg.update_form = update_form_from_string(it->get<std::string>());
  }
  if (auto it = j.find("delay_embed"); it != j.end()) {
    if (!it->is_boolean()) throw UsageError(where + ".delay_embed: expected true/false");
    cfg.delay_embed = it->get<bool>();
  }
  validate(cfg);
  return cfg;
}

}  // namespace lyapnet

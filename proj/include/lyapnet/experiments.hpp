#pragma once

// Seeded studies of how finite-time Lyapunov statistics move with width,
// activation, depth, regularization and pruning. Every study is a pure
// function of its config; rows are assembled in (knob, seed) order whatever
// order the parallel workers finish in.

#include "lyapnet/generators.hpp"
#include "lyapnet/io.hpp"
#include "lyapnet/parallel.hpp"
#include "lyapnet/spectral.hpp"
#include "lyapnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace lyapnet {

// Rendered report of one study: <name>.csv plus <name>.meta.json.
struct ExperimentOutput {
  std::string name;
  std::string csv;
  Json meta;
};

inline std::vector<std::filesystem::path> write_experiment(const ExperimentOutput& out,
                                                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto csv_path = dir / (out.name + ".csv");
  const auto meta_path = dir / (out.name + ".meta.json");
  write_file_atomic(csv_path, out.csv);
  write_file_atomic(meta_path, out.meta.dump(2) + "\n");
  return {csv_path, meta_path};
}

inline Json experiment_meta(const std::string& name, Json config) {
  return Json{{"experiment", name},
              {"config", std::move(config)},
              {"code_version", std::string("lyapnet ") + kVersion},
              {"float_format", "%.17g; -inf/inf/nan as literal tokens"}};
}

// Least-squares line through (x, y): slope, intercept, RMS residual.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_line needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline Vector gaussian_input(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// ===========================================================================
// Width scaling

struct WidthScalingConfig {
  std::vector<Eigen::Index> widths{16, 32, 64, 128, 256};
  double connectivity_p = 1.0;
  double weight_scale_s = 1.0;
  Normalization normalization = Normalization::None;
  std::size_t depth = 1;  // transitions in each sampled network
  std::size_t seeds = 100;
  std::uint64_t base_seed = 1;
  Activation activation = Activation::identity();
};

struct ScalingResult {
  std::string knob = "width";
  std::vector<double> values;
  std::vector<double> means;  // mean singular value per knob value (over spectrum and seeds)
  double fitted_exponent = 0.0;
  double fit_residual = 0.0;
  std::size_t seeds_per_point = 0;
  std::vector<double> frobenius_means;
  double frobenius_exponent = 0.0;
  double frobenius_residual = 0.0;
  std::vector<double> max_mu_means;
  std::vector<double> mean_log_mu;
};

struct WidthSample {
  double mean_mu = 0.0;
  double max_mu = 0.0;
  double mean_log_mu = 0.0;
  double frobenius = 0.0;
};

inline WidthSample width_sample(const WidthScalingConfig& cfg, Eigen::Index width, std::size_t seed_index) {
  GeneratorConfig g;
  g.width_D = width;
  g.depth_N = cfg.depth + 1;
  g.connectivity_p = cfg.connectivity_p;
  g.weight_scale_s = cfg.weight_scale_s;
  g.normalization = cfg.normalization;
  g.activation = cfg.activation;
  g.seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(width), seed_index);
  const NetworkSpec net = generate(g);
  const Vector y0 = gaussian_input(width, derive_seed(g.seed, 0x1f));
  const Trajectory traj = forward(net, y0);
  const JacobianChain jc = chain(net, traj, cfg.depth);

  std::vector<double> log_mu;
  WidthSample s;
  try {
    const Matrix M = explicit_sensitivity(jc);
    s.frobenius = M.norm();
    log_mu = log_of(singular_values(M));
  } catch (const NumericError&) {
    log_mu = product_log_singular_values(jc);
    double f2 = 0.0;
    for (double l : log_mu) f2 += std::exp(2.0 * l);
    s.frobenius = std::sqrt(f2);
  }
  double sum_mu = 0.0, sum_log = 0.0;
  for (double l : log_mu) {
    sum_mu += std::exp(l);
    sum_log += l;
  }
  s.mean_mu = sum_mu / static_cast<double>(log_mu.size());
  s.max_mu = std::exp(log_mu.front());
  s.mean_log_mu = sum_log / static_cast<double>(log_mu.size());
  return s;
}

inline void validate(const WidthScalingConfig& cfg) {
  if (cfg.widths.size() < 2) throw UsageError("width_scaling needs at least two widths");
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    if (cfg.widths[i] < 1) throw UsageError("widths must be positive");
    if (i > 0 && cfg.widths[i] <= cfg.widths[i - 1]) throw UsageError("widths must be strictly increasing");
  }
  if (cfg.seeds < 1) throw UsageError("width_scaling needs at least one seed");
  if (cfg.depth < 1) throw UsageError("depth must be at least 1");
}

// Mean singular value of M and ‖M‖_F against width, with ln-ln slope fits.
inline ScalingResult width_scaling(const WidthScalingConfig& cfg,
                                   std::vector<std::vector<WidthSample>>* samples_out = nullptr) {
  validate(cfg);
  const std::size_t nw = cfg.widths.size();
  const auto samples = parallel_map(nw * cfg.seeds, [&](std::size_t t) {
    return width_sample(cfg, cfg.widths[t / cfg.seeds], t % cfg.seeds);
  });
  ScalingResult r;
  r.seeds_per_point = cfg.seeds;
  std::vector<double> lx, lm, lf;
  for (std::size_t w = 0; w < nw; ++w) {
    double m = 0.0, mx = 0.0, f = 0.0, ml = 0.0;
    for (std::size_t k = 0; k < cfg.seeds; ++k) {
      const auto& s = samples[w * cfg.seeds + k];
      m += s.mean_mu;
      mx += s.max_mu;
      f += s.frobenius;
      ml += s.mean_log_mu;
    }
    const double n = static_cast<double>(cfg.seeds);
    r.values.push_back(static_cast<double>(cfg.widths[w]));
    r.means.push_back(m / n);
    r.max_mu_means.push_back(mx / n);
    r.frobenius_means.push_back(f / n);
    r.mean_log_mu.push_back(ml / n);
    lx.push_back(std::log(r.values.back()));
    lm.push_back(std::log(r.means.back()));
    lf.push_back(std::log(r.frobenius_means.back()));
  }
  const LineFit fm = fit_line(lx, lm), ff = fit_line(lx, lf);
  r.fitted_exponent = fm.slope;
  r.fit_residual = fm.residual;
  r.frobenius_exponent = ff.slope;
  r.frobenius_residual = ff.residual;
  if (samples_out) {
    samples_out->assign(nw, {});
    for (std::size_t t = 0; t < samples.size(); ++t) (*samples_out)[t / cfg.seeds].push_back(samples[t]);
  }
  return r;
}

inline Json to_json(const WidthScalingConfig& c) {
  Json widths = Json::array();
  for (auto w : c.widths) widths.push_back(w);
  return Json{{"widths", widths},
              {"connectivity_p", c.connectivity_p},
              {"weight_scale_s", c.weight_scale_s},
              {"normalization", std::string(to_string(c.normalization))},
              {"depth", c.depth},
              {"seeds", c.seeds},
              {"base_seed", c.base_seed},
              {"activation", to_json(c.activation)},
              {"weight_distribution", "gaussian"}};
}

inline ExperimentOutput width_scaling_report(const WidthScalingConfig& cfg) {
  std::vector<std::vector<WidthSample>> samples;
  const ScalingResult r = width_scaling(cfg, &samples);
  std::string csv =
      "row,width,seed,mean_mu,max_mu,mean_log_mu,frobenius,fitted_exponent,fit_residual,"
      "frobenius_exponent,frobenius_residual\n";
  for (std::size_t w = 0; w < r.values.size(); ++w)
    for (std::size_t k = 0; k < samples[w].size(); ++k) {
      const auto& s = samples[w][k];
      csv += "sample," + std::to_string(cfg.widths[w]) + "," + std::to_string(k) + "," +
             format_double(s.mean_mu) + "," + format_double(s.max_mu) + "," +
             format_double(s.mean_log_mu) + "," + format_double(s.frobenius) + ",,,,\n";
    }
  for (std::size_t w = 0; w < r.values.size(); ++w)
    csv += "mean," + std::to_string(cfg.widths[w]) + ",," + format_double(r.means[w]) + "," +
           format_double(r.max_mu_means[w]) + "," + format_double(r.mean_log_mu[w]) + "," +
           format_double(r.frobenius_means[w]) + ",,,,\n";
  csv += "fit,,,,,,," + format_double(r.fitted_exponent) + "," + format_double(r.fit_residual) + "," +
         format_double(r.frobenius_exponent) + "," + format_double(r.frobenius_residual) + "\n";

  Json meta = experiment_meta("width-scaling", to_json(cfg));
  const bool normalized = cfg.normalization == Normalization::ColumnSum1;
  meta["expectation"] = normalized
                            ? "column-normalized weights: mean singular value ~ D^-1/2, Frobenius norm ~ D^0"
                            : "fixed entry scale: mean singular value ~ D^1/2, Frobenius norm ~ D^1";
  meta["predicted_exponent"] = normalized ? -0.5 : 0.5;
  meta["predicted_frobenius_exponent"] = normalized ? 0.0 : 1.0;
  meta["fitted_exponent"] = r.fitted_exponent;
  meta["fit_residual"] = r.fit_residual;
  meta["frobenius_exponent"] = r.frobenius_exponent;
  meta["frobenius_residual"] = r.frobenius_residual;
  return {"width-scaling", std::move(csv), std::move(meta)};
}

// ===========================================================================
// Activation comparison

struct ActivationComparisonConfig {
  std::vector<Activation> kinds{Activation::tanh(1.0), Activation::steep_step(50.0), Activation::relu(),
                                Activation::elu(1.0), Activation::swish(1.0), Activation::sigmoid(1.0)};
  std::size_t depth = 10;
  Eigen::Index width = 16;
  double weight_scale_s = 0.25;
  std::size_t seeds = 40;
  std::uint64_t base_seed = 2;
};

// Supplies the network for (activation, seed index); defaults to generate().
using ActivationNetworkFactory = std::function<NetworkSpec(const Activation&, std::size_t)>;

struct ActivationRow {
  std::size_t kind_index = 0;
  std::size_t seed = 0;
  double max_lambda = std::numeric_limits<double>::quiet_NaN();
  double sum_lambda = std::numeric_limits<double>::quiet_NaN();
  std::size_t positive_count = 0;
  std::string classification = "error";
  bool finite = false;
};

struct ActivationComparison {
  std::vector<ActivationRow> rows;  // kind-major
  std::vector<double> median_max_lambda;  // per kind, over finite rows
  std::vector<double> finite_fraction;  // per kind
  // Fraction of seeds with SteepStep max λ above the named kind (NaN if absent).
  double steep_over_relu = std::numeric_limits<double>::quiet_NaN();
  double steep_over_tanh = std::numeric_limits<double>::quiet_NaN();
};

inline ActivationNetworkFactory default_activation_factory(const ActivationComparisonConfig& cfg) {
  return [cfg](const Activation& act, std::size_t seed) {
    GeneratorConfig g;
    g.width_D = cfg.width;
    g.depth_N = cfg.depth + 1;
    g.weight_scale_s = cfg.weight_scale_s;
    g.activation = act;
    // Same weights for every activation at a given seed.
    g.seed = derive_seed(cfg.base_seed, seed);
    return generate(g);
  };
}

inline ActivationComparison activation_comparison(const ActivationComparisonConfig& cfg,
                                                  ActivationNetworkFactory factory = nullptr) {
  if (cfg.kinds.empty()) throw UsageError("activation comparison needs at least one activation");
  if (cfg.seeds < 1) throw UsageError("activation comparison needs at least one seed");
  if (!factory) factory = default_activation_factory(cfg);
  const std::size_t nk = cfg.kinds.size();
  ActivationComparison out;
  out.rows = parallel_map(nk * cfg.seeds, [&](std::size_t t) {
    ActivationRow row;
    row.kind_index = t / cfg.seeds;
    row.seed = t % cfg.seeds;
    try {
      const NetworkSpec net = factory(cfg.kinds[row.kind_index], row.seed);
      const Vector y0 = gaussian_input(net.input_dim, derive_seed(cfg.base_seed, row.seed, 0x1f));
      const Analysis a = analyze(net, y0, net.transitions());
      row.max_lambda = a.report.max_exponent;
      row.sum_lambda = a.report.sum_exponents;
      row.positive_count = a.report.positive_count;
      row.classification = std::string(to_string(a.report.classification));
      row.finite = std::isfinite(row.max_lambda);
    } catch (const NumericError&) {
      row.classification = "numeric-failure";
    }
    return row;
  });
  auto find_kind = [&](ActivationType t) -> std::ptrdiff_t {
    for (std::size_t k = 0; k < nk; ++k)
      if (cfg.kinds[k].type == t) return static_cast<std::ptrdiff_t>(k);
    return -1;
  };
  for (std::size_t k = 0; k < nk; ++k) {
    std::vector<double> vals;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto& r = out.rows[k * cfg.seeds + s];
      if (r.finite) vals.push_back(r.max_lambda);
    }
    out.median_max_lambda.push_back(median(vals));
    out.finite_fraction.push_back(static_cast<double>(vals.size()) / static_cast<double>(cfg.seeds));
  }
  auto steep_over = [&](ActivationType other) {
    const auto a = find_kind(ActivationType::SteepStep), b = find_kind(other);
    if (a < 0 || b < 0) return std::numeric_limits<double>::quiet_NaN();
    std::size_t wins = 0;
    for (std::size_t s = 0; s < cfg.seeds; ++s)
      if (out.rows[static_cast<std::size_t>(a) * cfg.seeds + s].max_lambda >
          out.rows[static_cast<std::size_t>(b) * cfg.seeds + s].max_lambda)
        ++wins;
    return static_cast<double>(wins) / static_cast<double>(cfg.seeds);
  };
  out.steep_over_relu = steep_over(ActivationType::ReLU);
  out.steep_over_tanh = steep_over(ActivationType::Tanh);
  return out;
}

inline Json to_json(const ActivationComparisonConfig& c) {
  Json kinds = Json::array();
  for (const auto& a : c.kinds) kinds.push_back(to_json(a));
  return Json{{"kinds", kinds},       {"depth", c.depth}, {"width", c.width},
              {"weight_scale_s", c.weight_scale_s}, {"seeds", c.seeds}, {"base_seed", c.base_seed},
              {"weight_distribution", "gaussian"}};
}

inline ExperimentOutput activation_report(const ActivationComparisonConfig& cfg, const ActivationComparison& r) {
  std::string csv = "activation,seed,max_lambda,sum_lambda,positive_count,classification,finite\n";
  for (const auto& row : r.rows)
    csv += label(cfg.kinds[row.kind_index]) + "," + std::to_string(row.seed) + "," +
           format_double(row.max_lambda) + "," + format_double(row.sum_lambda) + "," +
           std::to_string(row.positive_count) + "," + row.classification + "," +
           (row.finite ? "1" : "0") + "\n";
  Json meta = experiment_meta("activation", to_json(cfg));
  Json summary = Json::array();
  for (std::size_t k = 0; k < cfg.kinds.size(); ++k)
    summary.push_back(Json{{"activation", label(cfg.kinds[k])},
                           {"median_max_lambda", format_double(r.median_max_lambda[k])},
                           {"finite_fraction", r.finite_fraction[k]}});
  meta["summary"] = summary;
  meta["expectation"] =
      "steep S-shaped activations (narrow transition) put spikes into the Jacobians and push the "
      "largest exponent up; ReLU-family activations do not";
  meta["observed_fraction_steep_step_above_relu"] = format_double(r.steep_over_relu);
  meta["observed_fraction_steep_step_above_tanh"] = format_double(r.steep_over_tanh);
  meta["gated"] = false;
  return {"activation", std::move(csv), std::move(meta)};
}

inline ExperimentOutput activation_report(const ActivationComparisonConfig& cfg,
                                          ActivationNetworkFactory factory = nullptr) {
  return activation_report(cfg, activation_comparison(cfg, std::move(factory)));
}

// ===========================================================================
// Depth profile

struct DepthProfileConfig {
  GeneratorConfig network{};  // depth_N is replaced by max(depths) + 1
  std::vector<std::size_t> depths{1, 2, 4, 8, 16, 32};
  std::size_t seeds = 20;
  std::uint64_t base_seed = 3;
};

using SeededNetworkFactory = std::function<NetworkSpec(std::size_t)>;

struct DepthRow {
  std::size_t depth = 0;
  std::size_t seed = 0;
  double max_lambda = 0.0;
  double mean_lambda = 0.0;
  double sum_lambda = 0.0;
  // Largest |Δ ln μ| / max(|ln μ|, 1) against the explicit double path over
  // components with μ_k ≥ 1e-6 μ_1; NaN when the explicit product overflows.
  double dual_path_error = std::numeric_limits<double>::quiet_NaN();
};

struct DepthSummary {
  std::size_t depth = 0;
  double mean_max_lambda = 0.0;
  double max_max_lambda = 0.0;
  double mean_lambda = 0.0;
  double worst_dual_path_error = 0.0;
  std::size_t dual_path_checked = 0;
};

struct DepthProfile {
  std::vector<DepthRow> rows;  // depth-major
  std::vector<DepthSummary> summary;
};

inline double dual_path_error(const JacobianChain& jc, const std::vector<double>& stable_log_mu) {
  Matrix M;
  try {
    M = explicit_sensitivity(jc);
  } catch (const NumericError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const std::vector<double> naive = log_of(singular_values(M));
  double worst = 0.0;
  for (std::size_t k = 0; k < naive.size(); ++k) {
    if (naive[k] == kNegInf || naive[k] < naive.front() + std::log(1e-6)) continue;
    worst = std::max(worst, std::abs(naive[k] - stable_log_mu[k]) / std::max(std::abs(naive[k]), 1.0));
  }
  return worst;
}

inline DepthProfile depth_profile(const DepthProfileConfig& cfg, SeededNetworkFactory factory = nullptr) {
  if (cfg.depths.empty()) throw UsageError("depth_profile needs at least one depth");
  for (std::size_t i = 0; i < cfg.depths.size(); ++i)
    if (cfg.depths[i] < 1 || (i > 0 && cfg.depths[i] <= cfg.depths[i - 1]))
      throw UsageError("depths must be positive and strictly increasing");
  if (cfg.seeds < 1) throw UsageError("depth_profile needs at least one seed");
  if (!factory) {
    factory = [cfg](std::size_t seed) {
      GeneratorConfig g = cfg.network;
      g.depth_N = cfg.depths.back() + 1;
      g.seed = derive_seed(cfg.base_seed, seed);
      return generate(g);
    };
  }
  const auto per_seed = parallel_map(cfg.seeds, [&](std::size_t seed) {
    const NetworkSpec net = factory(seed);
    if (net.transitions() < cfg.depths.back()) throw UsageError("network factory returned a network too shallow");
    const Vector y0 = gaussian_input(net.input_dim, derive_seed(cfg.base_seed, seed, 0x1f));
    const Trajectory traj = forward(net, y0, seed);
    std::vector<DepthRow> rows;
    for (std::size_t d : cfg.depths) {
      const JacobianChain jc = chain(net, traj, d);
      const FtleSpectrum s = ftle(product_log_singular_values(jc), d, seed);
      const DynamicsReport rep = classify(s);
      DepthRow row;
      row.depth = d;
      row.seed = seed;
      row.max_lambda = rep.max_exponent;
      row.sum_lambda = rep.sum_exponents;
      row.mean_lambda = rep.sum_exponents / static_cast<double>(s.exponents.size());
      row.dual_path_error = dual_path_error(jc, s.log_mu);
      rows.push_back(row);
    }
    return rows;
  });
  DepthProfile out;
  for (std::size_t di = 0; di < cfg.depths.size(); ++di) {
    DepthSummary sum;
    sum.depth = cfg.depths[di];
    sum.max_max_lambda = -std::numeric_limits<double>::infinity();
    std::vector<double> maxes, means;
    for (std::size_t seed = 0; seed < cfg.seeds; ++seed) {
      const DepthRow& r = per_seed[seed][di];
      out.rows.push_back(r);
      maxes.push_back(r.max_lambda);
      means.push_back(r.mean_lambda);
      sum.max_max_lambda = std::max(sum.max_max_lambda, r.max_lambda);
      if (!std::isnan(r.dual_path_error)) {
        ++sum.dual_path_checked;
        sum.worst_dual_path_error = std::max(sum.worst_dual_path_error, r.dual_path_error);
      }
    }
    sum.mean_max_lambda = mean(maxes);
    sum.mean_lambda = mean(means);
    out.summary.push_back(sum);
  }
  return out;
}

inline Json to_json(const DepthProfileConfig& c) {
  Json depths = Json::array();
  for (auto d : c.depths) depths.push_back(d);
  Json net = to_json(c.network);
  net.erase("depth_N");
  return Json{{"network", net}, {"depths", depths}, {"seeds", c.seeds}, {"base_seed", c.base_seed}};
}

inline ExperimentOutput depth_profile_report(const DepthProfileConfig& cfg, SeededNetworkFactory factory = nullptr) {
  const DepthProfile r = depth_profile(cfg, std::move(factory));
  std::string csv = "row,depth,seed,max_lambda,mean_lambda,sum_lambda,dual_path_error,max_max_lambda,dual_path_checked\n";
  for (const auto& row : r.rows)
    csv += "sample," + std::to_string(row.depth) + "," + std::to_string(row.seed) + "," +
           format_double(row.max_lambda) + "," + format_double(row.mean_lambda) + "," +
           format_double(row.sum_lambda) + "," + format_double(row.dual_path_error) + ",,\n";
  for (const auto& s : r.summary)
    csv += "mean," + std::to_string(s.depth) + ",," + format_double(s.mean_max_lambda) + "," +
           format_double(s.mean_lambda) + ",," + format_double(s.worst_dual_path_error) + "," +
           format_double(s.max_max_lambda) + "," + std::to_string(s.dual_path_checked) + "\n";
  Json meta = experiment_meta("depth-profile", to_json(cfg));
  meta["expectation"] =
      "greater depth suits networks whose layers do not push nearby trajectories apart; exponents "
      "are per-layer quantities, so a constant expansion rate gives a flat profile";
  meta["gated"] = false;
  return {"depth-profile", std::move(csv), std::move(meta)};
}

// ===========================================================================
// Overfitting diagnostic

struct OverfitStudyConfig {
  GeneratorConfig network = [] {
    GeneratorConfig g;
    g.width_D = 32;
    g.depth_N = 7;  // six transitions
    g.input_dim = 1;
    g.output_dim = 1;
    g.weight_scale_s = 0.35;
    g.activation = Activation::tanh();
    return g;
  }();
  TrainConfig train{300, 0.05, 8, 0.0, 0};
  double regularized_weight_decay = 0.01;
  DatasetKind data_kind = DatasetKind::NoisySine;
  std::size_t train_size = 40;
  std::size_t test_size = 200;
  double noise = 0.1;
  std::size_t seeds = 20;
  std::uint64_t base_seed = 4;
};

struct OverfitRow {
  std::size_t seed = 0;
  std::string variant;  // "plain" or "regularized"
  double weight_decay = 0.0;
  std::string status = "ok";
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double mean_max_lambda = std::numeric_limits<double>::quiet_NaN();
  bool dissipative = false;
};

struct OverfitStudy {
  std::vector<OverfitRow> rows;  // (seed, variant) order
  double finite_fraction = 0.0;  // over all rows
  // Among seeds where both variants are finite: fraction where the regularized
  // network has the lower mean max λ.
  double regularized_lower_fraction = std::numeric_limits<double>::quiet_NaN();
  std::size_t compared_seeds = 0;
};

// Max λ at full depth, averaged over the dataset inputs.
inline std::pair<double, bool> mean_max_lambda(const NetworkSpec& net, const Dataset& data) {
  double total = 0.0;
  bool dissipative = true;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Analysis a = analyze(net, data.inputs[i], net.transitions(), i);
    total += a.report.max_exponent;
    dissipative = dissipative && a.report.dissipative;
  }
  return {total / static_cast<double>(data.size()), dissipative};
}

inline OverfitStudy overfit_study(const OverfitStudyConfig& cfg) {
  if (cfg.seeds < 1) throw UsageError("overfit study needs at least one seed");
  validate(cfg.train);
  if (cfg.network.in_dim() != dataset_input_dim(cfg.data_kind) ||
      cfg.network.out_dim() != dataset_target_dim(cfg.data_kind))
    throw UsageError("overfit network input/output dims do not match the data kind");
  const auto per_seed = parallel_map(cfg.seeds, [&](std::size_t seed) {
    GeneratorConfig g = cfg.network;
    g.seed = derive_seed(cfg.base_seed, seed);
    const NetworkSpec init = generate(g);
    const Dataset train_set = make_dataset(cfg.data_kind, cfg.train_size, cfg.noise, derive_seed(cfg.base_seed, seed, 1));
    const Dataset test_set = make_dataset(cfg.data_kind, cfg.test_size, cfg.noise, derive_seed(cfg.base_seed, seed, 2));
    std::vector<OverfitRow> rows;
    for (int v = 0; v < 2; ++v) {
      OverfitRow row;
      row.seed = seed;
      row.variant = v == 0 ? "plain" : "regularized";
      TrainConfig tc = cfg.train;
      tc.weight_decay = v == 0 ? cfg.train.weight_decay : cfg.regularized_weight_decay;
      tc.seed = derive_seed(cfg.base_seed, seed, 3);
      row.weight_decay = tc.weight_decay;
      try {
        const TrainResult tr = train(init, train_set, tc);
        row.train_loss = tr.loss_history.back();
        row.test_loss = mse_loss(tr.network, test_set);
        const auto [lam, diss] = mean_max_lambda(tr.network, train_set);
        row.mean_max_lambda = lam;
        row.dissipative = diss;
        if (!std::isfinite(lam)) row.status = "non-finite-lambda";
      } catch (const NumericError&) {
        row.status = "diverged";
      }
      rows.push_back(row);
    }
    return rows;
  });
  OverfitStudy out;
  std::size_t finite = 0, lower = 0;
  for (const auto& pair : per_seed) {
    for (const auto& r : pair) {
      out.rows.push_back(r);
      if (std::isfinite(r.mean_max_lambda)) ++finite;
    }
    if (std::isfinite(pair[0].mean_max_lambda) && std::isfinite(pair[1].mean_max_lambda)) {
      ++out.compared_seeds;
      if (pair[1].mean_max_lambda < pair[0].mean_max_lambda) ++lower;
    }
  }
  out.finite_fraction = static_cast<double>(finite) / static_cast<double>(out.rows.size());
  if (out.compared_seeds > 0)
    out.regularized_lower_fraction = static_cast<double>(lower) / static_cast<double>(out.compared_seeds);
  return out;
}

inline Json to_json(const OverfitStudyConfig& c) {
  Json net = to_json(c.network);
  net.erase("seed");
  Json train = to_json(c.train);
  train.erase("seed");
  return Json{{"network", net},
              {"train", train},
              {"regularized_weight_decay", c.regularized_weight_decay},
              {"data_kind", std::string(to_string(c.data_kind))},
              {"train_size", c.train_size},
              {"test_size", c.test_size},
              {"noise", c.noise},
              {"seeds", c.seeds},
              {"base_seed", c.base_seed}};
}

inline ExperimentOutput overfit_report(const OverfitStudyConfig& cfg, const OverfitStudy& r) {
  std::string csv = "seed,variant,weight_decay,status,train_loss,test_loss,mean_max_lambda,dissipative\n";
  for (const auto& row : r.rows)
    csv += std::to_string(row.seed) + "," + row.variant + "," + format_double(row.weight_decay) + "," +
           row.status + "," + format_double(row.train_loss) + "," + format_double(row.test_loss) + "," +
           format_double(row.mean_max_lambda) + "," + (row.dissipative ? "1" : "0") + "\n";
  Json meta = experiment_meta("overfit", to_json(cfg));
  meta["expectation"] =
      "regularized training should leave the network less sensitive to its inputs, i.e. a lower "
      "largest finite-time Lyapunov exponent than the unregularized twin";
  meta["observed_fraction_regularized_lower"] = format_double(r.regularized_lower_fraction);
  meta["compared_seeds"] = r.compared_seeds;
  meta["finite_fraction"] = r.finite_fraction;
  meta["gated"] = false;
  return {"overfit", std::move(csv), std::move(meta)};
}

inline ExperimentOutput overfit_report(const OverfitStudyConfig& cfg) {
  return overfit_report(cfg, overfit_study(cfg));
}

// ===========================================================================
// Pruning

struct PruneStudyConfig {
  GeneratorConfig network = [] {
    GeneratorConfig g;
    g.width_D = 16;
    g.depth_N = 9;
    g.weight_scale_s = 0.5;
    g.activation = Activation::tanh();
    return g;
  }();
  std::vector<double> fractions{0.0, 0.25, 0.5, 0.75, 0.9375};
  std::size_t seeds = 20;
  std::uint64_t base_seed = 5;
};

struct PruneRow {
  double fraction = 0.0;
  std::size_t seed = 0;
  double max_lambda = std::numeric_limits<double>::quiet_NaN();
  double sum_lambda = std::numeric_limits<double>::quiet_NaN();
  std::size_t positive_count = 0;
  bool finite = false;
};

struct PruneStudy {
  std::vector<PruneRow> rows;  // fraction-major
  std::vector<double> mean_abs_max_lambda;  // per fraction, finite rows
  std::vector<double> mean_max_lambda;
  double finite_fraction = 0.0;
};

inline PruneStudy prune_study(const PruneStudyConfig& cfg, SeededNetworkFactory factory = nullptr) {
  if (cfg.fractions.empty() || std::find(cfg.fractions.begin(), cfg.fractions.end(), 0.0) == cfg.fractions.end())
    throw UsageError("prune study fractions must include 0");
  if (cfg.seeds < 1) throw UsageError("prune study needs at least one seed");
  if (!factory) {
    factory = [cfg](std::size_t seed) {
      GeneratorConfig g = cfg.network;
      g.seed = derive_seed(cfg.base_seed, seed);
      return generate(g);
    };
  }
  const std::size_t nf = cfg.fractions.size();
  const auto base = parallel_map(cfg.seeds, [&](std::size_t seed) { return factory(seed); });
  PruneStudy out;
  out.rows = parallel_map(nf * cfg.seeds, [&](std::size_t t) {
    PruneRow row;
    row.fraction = cfg.fractions[t / cfg.seeds];
    row.seed = t % cfg.seeds;
    const NetworkSpec& net = base[row.seed];
    const Vector y0 = gaussian_input(net.input_dim, derive_seed(cfg.base_seed, row.seed, 0x1f));
    try {
      const Analysis a = analyze(prune(net, row.fraction), y0, net.transitions());
      row.max_lambda = a.report.max_exponent;
      row.sum_lambda = a.report.sum_exponents;
      row.positive_count = a.report.positive_count;
      row.finite = std::isfinite(row.max_lambda);
    } catch (const NumericError&) {
    }
    return row;
  });
  std::size_t finite = 0;
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<double> abs_vals, vals;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto& r = out.rows[f * cfg.seeds + s];
      if (!r.finite) continue;
      ++finite;
      vals.push_back(r.max_lambda);
      abs_vals.push_back(std::abs(r.max_lambda));
    }
    out.mean_max_lambda.push_back(mean(vals));
    out.mean_abs_max_lambda.push_back(mean(abs_vals));
  }
  out.finite_fraction = static_cast<double>(finite) / static_cast<double>(out.rows.size());
  return out;
}

inline Json to_json(const PruneStudyConfig& c) {
  Json net = to_json(c.network);
  net.erase("seed");
  return Json{{"network", net}, {"fractions", c.fractions}, {"seeds", c.seeds}, {"base_seed", c.base_seed}};
}

inline ExperimentOutput prune_report(const PruneStudyConfig& cfg, const PruneStudy& r) {
  std::string csv = "fraction,seed,max_lambda,sum_lambda,positive_count,finite\n";
  for (const auto& row : r.rows)
    csv += format_double(row.fraction) + "," + std::to_string(row.seed) + "," + format_double(row.max_lambda) +
           "," + format_double(row.sum_lambda) + "," + std::to_string(row.positive_count) + "," +
           (row.finite ? "1" : "0") + "\n";
  Json meta = experiment_meta("prune", to_json(cfg));
  Json summary = Json::array();
  for (std::size_t f = 0; f < cfg.fractions.size(); ++f)
    summary.push_back(Json{{"fraction", cfg.fractions[f]},
                           {"mean_max_lambda", format_double(r.mean_max_lambda[f])},
                           {"mean_abs_max_lambda", format_double(r.mean_abs_max_lambda[f])}});
  meta["summary"] = summary;
  const std::size_t dense = static_cast<std::size_t>(
      std::find(cfg.fractions.begin(), cfg.fractions.end(), 0.0) - cfg.fractions.begin());
  const std::size_t sparsest = static_cast<std::size_t>(
      std::max_element(cfg.fractions.begin(), cfg.fractions.end()) - cfg.fractions.begin());
  meta["expectation"] =
      "sparser connectivity curtails mixing: heavy pruning should pull the largest exponent toward "
      "or below zero relative to the dense network";
  meta["observed_sparsest_reduces_mean_abs_max_lambda"] =
      r.mean_abs_max_lambda[sparsest] < r.mean_abs_max_lambda[dense];
  meta["observed_sparsest_lowers_mean_max_lambda"] = r.mean_max_lambda[sparsest] < r.mean_max_lambda[dense];
  meta["finite_fraction"] = r.finite_fraction;
  meta["gated"] = false;
  return {"prune", std::move(csv), std::move(meta)};
}

inline ExperimentOutput prune_report(const PruneStudyConfig& cfg, SeededNetworkFactory factory = nullptr) {
  return prune_report(cfg, prune_study(cfg, std::move(factory)));
}

// ===========================================================================
// Config parsing. Missing fields keep the defaults above; unknown fields are
// rejected.

namespace experiment_json {

using namespace json_detail;

inline std::size_t count(const Json& j, const char* k, std::size_t dflt, const std::string& where) {
  if (!j.contains(k)) return dflt;
  const long long v = integer(j.at(k), where + "." + k);
  if (v < 0) throw UsageError(where + "." + k + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

inline double real(const Json& j, const char* k, double dflt, const std::string& where) {
  return j.contains(k) ? number(j.at(k), where + "." + k) : dflt;
}

}  // namespace experiment_json

inline WidthScalingConfig width_scaling_config_from_json(const Json& j) {
  using namespace experiment_json;
  const std::string w = "width-scaling";
  reject_unknown(j, {"widths", "connectivity_p", "weight_scale_s", "normalization", "depth", "seeds", "base_seed",
                     "activation", "weight_distribution"}, w);
  WidthScalingConfig c;
  if (j.contains("widths")) {
    if (!j.at("widths").is_array()) throw UsageError(w + ".widths: expected an array");
    c.widths.clear();
    for (const auto& v : j.at("widths")) c.widths.push_back(static_cast<Eigen::Index>(integer(v, w + ".widths")));
  }
  // Reuse the generator parser for the shared fields.
  Json gen = Json::object();
  for (const char* k : {"connectivity_p", "weight_scale_s", "normalization", "activation", "weight_distribution"})
    if (j.contains(k)) gen[k] = j.at(k);
  GeneratorConfig g;
  g.connectivity_p = c.connectivity_p;
  g.weight_scale_s = c.weight_scale_s;
  g.activation = c.activation;
  g = generator_config_from_json(gen, g, w);
  c.connectivity_p = g.connectivity_p;
  c.weight_scale_s = g.weight_scale_s;
  c.normalization = g.normalization;
  c.activation = g.activation;
  c.depth = count(j, "depth", c.depth, w);
  c.seeds = count(j, "seeds", c.seeds, w);
  c.base_seed = count(j, "base_seed", c.base_seed, w);
  validate(c);
  return c;
}

inline ActivationComparisonConfig activation_config_from_json(const Json& j) {
  using namespace experiment_json;
  const std::string w = "activation";
  reject_unknown(j, {"kinds", "depth", "width", "weight_scale_s", "seeds", "base_seed", "weight_distribution"}, w);
  ActivationComparisonConfig c;
  if (j.contains("kinds")) {
    if (!j.at("kinds").is_array()) throw UsageError(w + ".kinds: expected an array");
    c.kinds.clear();
    for (std::size_t k = 0; k < j.at("kinds").size(); ++k)
      c.kinds.push_back(activation_from_json(j.at("kinds")[k], w + ".kinds[" + std::to_string(k) + "]"));
  }
  c.depth = count(j, "depth", c.depth, w);
  c.width = static_cast<Eigen::Index>(count(j, "width", static_cast<std::size_t>(c.width), w));
  c.weight_scale_s = real(j, "weight_scale_s", c.weight_scale_s, w);
  c.seeds = count(j, "seeds", c.seeds, w);
  c.base_seed = count(j, "base_seed", c.base_seed, w);
  if (c.depth < 1 || c.width < 1) throw UsageError(w + ": depth and width must be positive");
  return c;
}

inline DepthProfileConfig depth_profile_config_from_json(const Json& j) {
  using namespace experiment_json;
  const std::string w = "depth-profile";
  reject_unknown(j, {"network", "depths", "seeds", "base_seed"}, w);
  DepthProfileConfig c;
  if (j.contains("depths")) {
    if (!j.at("depths").is_array()) throw UsageError(w + ".depths: expected an array");
    c.depths.clear();
    for (const auto& v : j.at("depths")) {
      const long long d = integer(v, w + ".depths");
      if (d < 1) throw UsageError(w + ".depths: entries must be positive");
      c.depths.push_back(static_cast<std::size_t>(d));
    }
  }
  if (c.depths.empty()) throw UsageError(w + ".depths: must not be empty");
  if (j.contains("network")) {
    Json net = j.at("network");
    if (net.is_object() && !net.contains("depth_N")) net["depth_N"] = c.depths.back() + 1;
    c.network = generator_config_from_json(net, c.network, w + ".network");
  }
  c.seeds = count(j, "seeds", c.seeds, w);
  c.base_seed = count(j, "base_seed", c.base_seed, w);
  return c;
}

inline OverfitStudyConfig overfit_config_from_json(const Json& j) {
  using namespace experiment_json;
  const std::string w = "overfit";
  reject_unknown(j, {"network", "train", "regularized_weight_decay", "data_kind", "train_size", "test_size",
                     "noise", "seeds", "base_seed"}, w);
  OverfitStudyConfig c;
  if (j.contains("network")) c.network = generator_config_from_json(j.at("network"), c.network, w + ".network");
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train, w + ".train");
  c.regularized_weight_decay = real(j, "regularized_weight_decay", c.regularized_weight_decay, w);
  if (j.contains("data_kind")) {
    if (!j.at("data_kind").is_string()) throw UsageError(w + ".data_kind: expected a string");
    c.data_kind = dataset_kind_from_string(j.at("data_kind").get<std::string>());
  }
  c.train_size = count(j, "train_size", c.train_size, w);
  c.test_size = count(j, "test_size", c.test_size, w);
  c.noise = real(j, "noise", c.noise, w);
  c.seeds = count(j, "seeds", c.seeds, w);
  c.base_seed = count(j, "base_seed", c.base_seed, w);
  if (!(c.regularized_weight_decay >= 0.0)) throw UsageError(w + ".regularized_weight_decay must be >= 0");
  if (c.train_size < 1 || c.test_size < 1) throw UsageError(w + ": dataset sizes must be positive");
  return c;
}

inline PruneStudyConfig prune_config_from_json(const Json& j) {
  using namespace experiment_json;
  const std::string w = "prune";
  reject_unknown(j, {"network", "fractions", "seeds", "base_seed"}, w);
  PruneStudyConfig c;
  if (j.contains("network")) c.network = generator_config_from_json(j.at("network"), c.network, w + ".network");
  if (j.contains("fractions")) {
    if (!j.at("fractions").is_array()) throw UsageError(w + ".fractions: expected an array");
    c.fractions.clear();
    for (const auto& v : j.at("fractions")) {
      const double f = number(v, w + ".fractions");
      if (!(f >= 0.0 && f < 1.0)) throw UsageError(w + ".fractions: entries must lie in [0, 1)");
      c.fractions.push_back(f);
    }
  }
  c.seeds = count(j, "seeds", c.seeds, w);
  c.base_seed = count(j, "base_seed", c.base_seed, w);
  return c;
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"width-scaling", "activation", "depth-profile", "overfit", "prune"};
  return names;
}

// Runs a named study from its JSON config (an empty object means defaults).
inline ExperimentOutput run_experiment(const std::string& name, const Json& config) {
  if (name == "width-scaling") return width_scaling_report(width_scaling_config_from_json(config));
  if (name == "activation") return activation_report(activation_config_from_json(config));
  if (name == "depth-profile") return depth_profile_report(depth_profile_config_from_json(config));
  if (name == "overfit") return overfit_report(overfit_config_from_json(config));
  if (name == "prune") return prune_report(prune_config_from_json(config));
  std::string valid;
  for (const auto& n : experiment_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw UsageError("unknown experiment '" + name + "'; valid names: " + valid);
}

}  // namespace lyapnet

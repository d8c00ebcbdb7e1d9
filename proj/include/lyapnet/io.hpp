#pragma once

// File formats: network JSON, numeric CSV input, float rendering and
// atomic output.

#include "lyapnet/network.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace lyapnet {

using Json = nlohmann::json;

// 17 significant digits round-trips every double; -inf/inf/nan get fixed tokens.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Writes to a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace json_detail {

inline void reject_unknown(const Json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw UsageError(where + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw UsageError(where + ": unknown field '" + it.key() + "'");
  }
}

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw UsageError(where + ": missing field '" + key + "'");
  return *it;
}

inline double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw UsageError(where + ": expected a number");
  return v.get<double>();
}

inline long long integer(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) throw UsageError(where + ": expected an integer");
  return v.get<long long>();
}

}  // namespace json_detail

inline Json to_json(const Activation& a) {
  Json j{{"kind", std::string(to_string(a.type))}};
  if (a.uses_param()) j["param"] = a.param;
  return j;
}

inline Activation activation_from_json(const Json& j, const std::string& where) {
  using namespace json_detail;
  reject_unknown(j, {"kind", "param"}, where);
  const auto& kind = require(j, "kind", where);
  if (!kind.is_string()) throw UsageError(where + ".kind: expected a string");
  Activation a{activation_type_from_string(kind.get<std::string>()), 1.0};
  if (auto it = j.find("param"); it != j.end()) a.param = number(*it, where + ".param");
  else if (a.type == ActivationType::SteepStep) a.param = 50.0;
  validate(a);
  return a;
}

inline std::string_view to_string(UpdateForm f) {
  return f == UpdateForm::Plain ? "plain" : "residual";
}

inline UpdateForm update_form_from_string(const std::string& s) {
  if (s == "plain") return UpdateForm::Plain;
  if (s == "residual") return UpdateForm::Residual;
  throw UsageError("update_form must be \"plain\" or \"residual\", got \"" + s + "\"");
}

inline Json to_json(const NetworkSpec& net) {
  Json layers = Json::array();
  for (const auto& L : net.layers) {
    Json w = Json::array();
    for (Eigen::Index r = 0; r < L.weights.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < L.weights.cols(); ++c) row.push_back(L.weights(r, c));
      w.push_back(std::move(row));
    }
    Json b = Json::array();
    for (Eigen::Index r = 0; r < L.bias.size(); ++r) b.push_back(L.bias[r]);
    Json act;
    if (L.uniform_activation()) {
      act = to_json(L.activations.front());
    } else {
      act = Json::array();
      for (const auto& a : L.activations) act.push_back(to_json(a));
    }
    layers.push_back(Json{{"weights", std::move(w)}, {"bias", std::move(b)}, {"activation", act}});
  }
  return Json{{"update_form", std::string(to_string(net.update_form))},
              {"dt", net.dt},
              {"input_dim", net.input_dim},
              {"layers", std::move(layers)}};
}

inline NetworkSpec network_from_json(const Json& j) {
  using namespace json_detail;
  reject_unknown(j, {"update_form", "dt", "input_dim", "layers"}, "network");
  NetworkSpec net;
  const auto& form = require(j, "update_form", "network");
  if (!form.is_string()) throw UsageError("network.update_form: expected a string");
  net.update_form = update_form_from_string(form.get<std::string>());
  net.dt = number(require(j, "dt", "network"), "network.dt");
  net.input_dim = integer(require(j, "input_dim", "network"), "network.input_dim");
  const auto& layers = require(j, "layers", "network");
  if (!layers.is_array()) throw UsageError("network.layers: expected an array");
  for (std::size_t q = 0; q < layers.size(); ++q) {
    const std::string where = "network.layers[" + std::to_string(q) + "]";
    const auto& lj = layers[q];
    reject_unknown(lj, {"weights", "bias", "activation"}, where);
    const auto& wj = require(lj, "weights", where);
    if (!wj.is_array() || wj.empty() || !wj[0].is_array())
      throw UsageError(where + ".weights: expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(wj.size());
    const auto cols = static_cast<Eigen::Index>(wj[0].size());
    Matrix w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = wj[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
        throw UsageError(where + ".weights[" + std::to_string(r) + "]: ragged row");
      for (Eigen::Index c = 0; c < cols; ++c)
        w(r, c) = number(row[static_cast<std::size_t>(c)], where + ".weights");
    }
    const auto& bj = require(lj, "bias", where);
    if (!bj.is_array()) throw UsageError(where + ".bias: expected an array");
    Vector b(static_cast<Eigen::Index>(bj.size()));
    for (std::size_t r = 0; r < bj.size(); ++r)
      b[static_cast<Eigen::Index>(r)] = number(bj[r], where + ".bias");
    const auto& aj = require(lj, "activation", where);
    std::vector<Activation> acts;
    if (aj.is_array()) {
      for (std::size_t k = 0; k < aj.size(); ++k)
        acts.push_back(activation_from_json(aj[k], where + ".activation[" + std::to_string(k) + "]"));
    } else {
      acts.push_back(activation_from_json(aj, where + ".activation"));
    }
    net.layers.emplace_back(std::move(w), std::move(b), std::move(acts));
  }
  validate(net);
  return net;
}

inline NetworkSpec load_network(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  return network_from_json(j);
}

inline std::string dump_network(const NetworkSpec& net) { return to_json(net).dump(1) + "\n"; }

inline void save_network(const NetworkSpec& net, const std::filesystem::path& path) {
  write_file_atomic(path, dump_network(net));
}

// Parses a CSV of numeric rows. Blank lines and lines starting with '#' are
// skipped; a first line whose leading field is not numeric is treated as a
// header. Errors name the 1-based line and field.
inline std::vector<Vector> parse_numeric_csv(const std::string& text, const std::string& name) {
  std::vector<Vector> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string field;
    std::size_t fieldno = 0;
    bool header = false;
    while (std::getline(ls, field, ',')) {
      ++fieldno;
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      const std::string f = b == std::string::npos ? "" : field.substr(b, e - b + 1);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != f.size() || !std::isfinite(v)) {
        if (first_content && fieldno == 1) {
          header = true;
          break;
        }
        throw UsageError(name + ":" + std::to_string(lineno) + ": field " +
                         std::to_string(fieldno) + " is not a finite number: '" + f + "'");
      }
      vals.push_back(v);
    }
    first_content = false;
    if (header) continue;
    rows.push_back(Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return rows;
}

}  // namespace lyapnet

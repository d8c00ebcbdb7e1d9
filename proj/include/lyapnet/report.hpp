#pragma once

// Spectral CSV report: one row per exponent plus one summary row per input.
//
//   input_id,depth_j,k,mu_log,lambda,max_lambda,sum_lambda,positive_count,classification,dissipative
//   0,3,0,1.23...,0.41...,,,,,
//   0,3,summary,,,0.41...,-0.2...,1,chaotic,1

#include "lyapnet/io.hpp"
#include "lyapnet/spectral.hpp"

#include <string>

namespace lyapnet {

inline constexpr const char* kSpectrumCsvHeader =
    "input_id,depth_j,k,mu_log,lambda,max_lambda,sum_lambda,positive_count,classification,dissipative\n";

inline std::string spectrum_csv_rows(const FtleSpectrum& s, const DynamicsReport& r) {
  const std::string id = s.input_id ? std::to_string(*s.input_id) : "";
  const std::string depth = std::to_string(s.depth_j);
  std::string out;
  for (std::size_t k = 0; k < s.log_mu.size(); ++k)
    out += id + "," + depth + "," + std::to_string(k) + "," + format_double(s.log_mu[k]) + "," +
           format_double(s.exponents[k]) + ",,,,,\n";
  out += id + "," + depth + ",summary,,," + format_double(r.max_exponent) + "," +
         format_double(r.sum_exponents) + "," + std::to_string(r.positive_count) + "," +
         std::string(to_string(r.classification)) + "," + (r.dissipative ? "1" : "0") + "\n";
  return out;
}

}  // namespace lyapnet

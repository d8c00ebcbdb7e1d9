#pragma once

// Singular values of the depth-j sensitivity matrix M = J_{j-1} ... J_0 and the
// finite-time Lyapunov exponents derived from them.
//
// Two routes are provided. explicit_sensitivity() multiplies the chain out in
// double precision and hands it to a dense SVD; it overflows for long or
// strongly expanding chains and loses the small singular values to roundoff.
// product_log_singular_values() never forms M: it reduces the factors to
// triangular form with one QR pass and finishes with a one-sided Jacobi sweep on
// rows that carry their magnitude as a separate log scale.

#include "lyapnet/jacobian.hpp"
#include "lyapnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lyapnet {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct FtleSpectrum {
  std::size_t depth_j = 1;
  std::vector<double> log_mu;     // ln μ_k, descending; -inf for μ_k = 0
  std::vector<double> exponents;  // λ_k = ln μ_k / depth_j
  std::optional<std::size_t> input_id;

  // μ_k themselves; may be +inf when ln μ_k exceeds the double range.
  std::vector<double> singular_values() const {
    std::vector<double> mu(log_mu.size());
    std::transform(log_mu.begin(), log_mu.end(), mu.begin(), [](double l) { return std::exp(l); });
    return mu;
  }
};

enum class DynamicsClass { Regular, Chaotic, Hyperchaotic };

inline std::string_view to_string(DynamicsClass c) {
  switch (c) {
    case DynamicsClass::Regular: return "regular";
    case DynamicsClass::Chaotic: return "chaotic";
    case DynamicsClass::Hyperchaotic: return "hyperchaotic";
  }
  return "regular";
}

struct DynamicsReport {
  double max_exponent = 0.0;
  double sum_exponents = 0.0;
  std::size_t positive_count = 0;
  DynamicsClass classification = DynamicsClass::Regular;
  bool dissipative = false;  // sum_exponents < 0
  double edge_distance = 0.0;  // |max_exponent|
};

// ---------------------------------------------------------------------------
// Naive route

inline Matrix explicit_sensitivity(const JacobianChain& chain) {
  if (chain.factors.empty()) throw UsageError("empty Jacobian chain");
  Matrix M = chain.factors.front();
  for (std::size_t q = 1; q < chain.factors.size(); ++q) {
    if (chain.factors[q].cols() != M.rows())
      throw DimensionError(q, "Jacobian factor shapes do not chain");
    M = chain.factors[q] * M;
  }
  if (!M.allFinite())
    throw NumericError("explicit sensitivity product overflowed; use the stable product path");
  return M;
}

// Descending singular values of a dense matrix.
inline std::vector<double> singular_values(const Matrix& m) {
  if (!m.allFinite()) throw UsageError("singular_values: non-finite matrix entry");
  if (m.size() == 0) return {};
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  std::vector<double> out(s.data(), s.data() + s.size());
  std::stable_sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline std::vector<double> log_of(const std::vector<double>& mu) {
  std::vector<double> out(mu.size());
  std::transform(mu.begin(), mu.end(), out.begin(),
                 [](double m) { return m > 0.0 ? std::log(m) : kNegInf; });
  return out;
}

// Σ_q ln|det J_q| for a chain of square factors; equals Σ_k ln μ_k.
inline double log_abs_det_product(const JacobianChain& chain) {
  double total = 0.0;
  for (const auto& J : chain.factors) {
    if (J.rows() != J.cols()) throw UsageError("log_abs_det_product needs square factors");
    Eigen::PartialPivLU<Matrix> lu(J);
    const Matrix& U = lu.matrixLU();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      const double d = std::abs(U(i, i));
      if (d == 0.0) return kNegInf;
      total += std::log(d);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Stable route

namespace detail {

// Rows stored as exp(log_scale[a]) * dir.row(a) with unit-norm directions.
// A row that is exactly zero has log_scale -inf and a zero direction.
struct ScaledRows {
  std::vector<double> log_scale;
  Matrix dir;
};

inline void set_row(ScaledRows& rows, Eigen::Index a, const Eigen::RowVectorXd& w, double log_base) {
  const double n = w.stableNorm();
  if (n == 0.0 || !std::isfinite(log_base)) {
    rows.log_scale[static_cast<std::size_t>(a)] = kNegInf;
    rows.dir.row(a).setZero();
    return;
  }
  rows.log_scale[static_cast<std::size_t>(a)] = log_base + std::log(n);
  rows.dir.row(a) = w / n;
}

inline ScaledRows scaled_rows(const Matrix& m) {
  ScaledRows rows{std::vector<double>(static_cast<std::size_t>(m.rows())), Matrix(m.rows(), m.cols())};
  for (Eigen::Index a = 0; a < m.rows(); ++a) set_row(rows, a, m.row(a), 0.0);
  return rows;
}

// left * P where P is held in scaled-row form. Each output row is accumulated
// relative to its largest contributing term, so nothing overflows.
inline ScaledRows left_multiply(const Matrix& left, const ScaledRows& P) {
  ScaledRows out{std::vector<double>(static_cast<std::size_t>(left.rows())),
                 Matrix(left.rows(), P.dir.cols())};
  for (Eigen::Index a = 0; a < left.rows(); ++a) {
    double m = kNegInf;
    for (Eigen::Index b = 0; b < left.cols(); ++b) {
      const double lb = P.log_scale[static_cast<std::size_t>(b)];
      if (left(a, b) != 0.0 && lb != kNegInf) m = std::max(m, std::log(std::abs(left(a, b))) + lb);
    }
    Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(P.dir.cols());
    if (m != kNegInf) {
      for (Eigen::Index b = 0; b < left.cols(); ++b) {
        const double lb = P.log_scale[static_cast<std::size_t>(b)];
        if (left(a, b) == 0.0 || lb == kNegInf) continue;
        w += left(a, b) * std::exp(lb - m) * P.dir.row(b);
      }
    }
    set_row(out, a, w, m);
  }
  return out;
}

// ln|sinh(x)| for x != 0.
inline double log_abs_sinh(double x) {
  const double ax = std::abs(x);
  if (ax < 20.0) return std::log(std::sinh(ax));
  return ax - std::log(2.0) + std::log1p(-std::exp(-2.0 * ax));
}

// asinh(exp(l)) without overflow.
inline double asinh_exp(double l) {
  if (l > 20.0) return l + std::log(2.0) + std::log1p(std::exp(-2.0 * l) / 4.0);
  return std::asinh(std::exp(l));
}

// One-sided Jacobi on the rows of a scaled-row matrix until every pair of
// nonzero rows is orthogonal; afterwards the row norms are the singular values.
inline void orthogonalize_rows(ScaledRows& rows, double tol = 1e-15, int max_sweeps = 200) {
  const Eigen::Index n = rows.dir.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index a = 0; a + 1 < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        const double sa = rows.log_scale[static_cast<std::size_t>(a)];
        const double sb = rows.log_scale[static_cast<std::size_t>(b)];
        if (sa == kNegInf || sb == kNegInf) continue;
        const double c = rows.dir.row(a).dot(rows.dir.row(b));
        if (std::abs(c) <= tol) continue;
        rotated = true;

        // zeta = (|r_b|^2 - |r_a|^2) / (2 <r_a, r_b>) = sinh(sb - sa) / c
        const double delta = sb - sa;
        double log_t = 0.0;
        double sign_t = c > 0.0 ? 1.0 : -1.0;
        if (delta != 0.0) {
          const double log_zeta = log_abs_sinh(delta) - std::log(std::abs(c));
          log_t = -asinh_exp(log_zeta);
          if (delta < 0.0) sign_t = -sign_t;
        }
        const double log_cos = -0.5 * std::log1p(std::exp(2.0 * log_t));
        const double log_sin = log_cos + log_t;

        const Eigen::RowVectorXd va = rows.dir.row(a);
        const Eigen::RowVectorXd vb = rows.dir.row(b);
        // r_a' = cos r_a - sin r_b,   r_b' = sin r_a + cos r_b
        {
          const double A = log_cos + sa, B = log_sin + sb, m = std::max(A, B);
          set_row(rows, a, std::exp(A - m) * va - sign_t * std::exp(B - m) * vb, m);
        }
        {
          const double A = log_sin + sa, B = log_cos + sb, m = std::max(A, B);
          set_row(rows, b, sign_t * std::exp(A - m) * va + std::exp(B - m) * vb, m);
        }
      }
    }
    if (!rotated) return;
  }
}

// QR pass: F_{j-1} ... F_0 = Q R_{j-1} ... R_0 with each R_q upper
// trapezoidal. Rows of F_q Q_{q-1} are sorted by decreasing norm before the
// factorization, and each reflector is built from its column divided by the
// column's largest entry, so rows near the bottom of the double range
// (saturated units) neither underflow nor get swamped by the large ones.
inline std::vector<Matrix> qr_pass(const std::vector<Matrix>& factors) {
  std::vector<Matrix> tri;
  tri.reserve(factors.size());
  Matrix Q = Matrix::Identity(factors.front().cols(), factors.front().cols());
  for (const auto& F : factors) {
    const Matrix A = F * Q;
    const Eigen::Index m = A.rows(), n = A.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::VectorXd norms = A.rowwise().stableNorm();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return norms[a] > norms[b]; });
    Matrix W(m, n);
    for (Eigen::Index r = 0; r < m; ++r) W.row(r) = A.row(order[static_cast<std::size_t>(r)]);

    Matrix Ht = Matrix::Identity(m, m);  // H_k ... H_0
    Eigen::VectorXd work(std::max(m, n));
    for (Eigen::Index k = 0; k < std::min(m - 1, n); ++k) {
      const double scale = W.col(k).tail(m - k).cwiseAbs().maxCoeff();
      if (scale == 0.0) continue;
      const Eigen::VectorXd x = W.col(k).tail(m - k) / scale;
      Eigen::VectorXd essential(m - k - 1);
      double tau = 0.0, beta = 0.0;
      x.makeHouseholder(essential, tau, beta);
      W.bottomRightCorner(m - k, n - k - 1).applyHouseholderOnTheLeft(essential, tau, work.data());
      Ht.bottomRows(m - k).applyHouseholderOnTheLeft(essential, tau, work.data());
      W(k, k) = beta * scale;
      W.col(k).tail(m - k - 1).setZero();
    }
    tri.push_back(W.triangularView<Eigen::Upper>());
    Q.resize(m, m);
    for (Eigen::Index r = 0; r < m; ++r) Q.row(order[static_cast<std::size_t>(r)]) = Ht.col(r).transpose();
  }
  return tri;
}

}  // namespace detail

// ln μ_k of the chain product, descending, min(D_in, D_out) entries. Exact
// zeros come back as -inf. Never forms a quantity that can overflow.
//
// One QR pass turns the chain into a product of row-graded triangles, which is
// multiplied out in scaled-row form and finished with one-sided Jacobi on the
// rows; the leading Q does not change the singular values.
inline std::vector<double> product_log_singular_values(const JacobianChain& chain) {
  if (chain.factors.empty()) throw UsageError("empty Jacobian chain");
  for (std::size_t q = 0; q < chain.factors.size(); ++q) {
    if (!chain.factors[q].allFinite()) throw UsageError("non-finite Jacobian factor");
    if (q > 0 && chain.factors[q].cols() != chain.factors[q - 1].rows())
      throw DimensionError(q, "Jacobian factor shapes do not chain");
  }
  const auto count = static_cast<std::size_t>(std::min(chain.in_dim(), chain.out_dim()));

  const std::vector<Matrix> tri = detail::qr_pass(chain.factors);
  detail::ScaledRows rows = detail::scaled_rows(tri.front());
  for (std::size_t q = 1; q < tri.size(); ++q) rows = detail::left_multiply(tri[q], rows);
  detail::orthogonalize_rows(rows);

  std::vector<double> out = rows.log_scale;
  std::stable_sort(out.begin(), out.end(), std::greater<>());
  out.resize(count, kNegInf);
  return out;
}

// λ_k = ln μ_k / j.
inline FtleSpectrum ftle(std::vector<double> log_mu, std::size_t depth_j,
                         std::optional<std::size_t> input_id = std::nullopt) {
  if (depth_j == 0) throw UsageError("depth must be at least 1 (exponents divide by depth)");
  FtleSpectrum s;
  s.depth_j = depth_j;
  s.input_id = input_id;
  s.exponents.reserve(log_mu.size());
  for (double l : log_mu) s.exponents.push_back(l / static_cast<double>(depth_j));
  s.log_mu = std::move(log_mu);
  return s;
}

inline DynamicsReport classify(const std::vector<double>& exponents) {
  if (exponents.empty()) throw UsageError("cannot classify an empty spectrum");
  DynamicsReport r;
  r.max_exponent = *std::max_element(exponents.begin(), exponents.end());
  r.sum_exponents = std::accumulate(exponents.begin(), exponents.end(), 0.0);
  r.positive_count = static_cast<std::size_t>(
      std::count_if(exponents.begin(), exponents.end(), [](double l) { return l > 0.0; }));
  r.classification = r.positive_count >= 2   ? DynamicsClass::Hyperchaotic
                     : r.positive_count == 1 ? DynamicsClass::Chaotic
                                             : DynamicsClass::Regular;
  r.dissipative = r.sum_exponents < 0.0;
  r.edge_distance = std::abs(r.max_exponent);
  return r;
}

inline DynamicsReport classify(const FtleSpectrum& s) { return classify(s.exponents); }

struct Analysis {
  Trajectory trajectory;
  FtleSpectrum spectrum;
  DynamicsReport report;
};

// forward -> chain -> stable product SVD -> exponents -> classification.
inline Analysis analyze(const NetworkSpec& net, const Vector& y0, std::size_t depth,
                        std::optional<std::size_t> input_id = std::nullopt) {
  if (depth == 0) throw UsageError("depth must be at least 1 (exponents divide by depth)");
  Analysis out;
  out.trajectory = forward(net, y0, input_id);
  const JacobianChain jc = chain(net, out.trajectory, depth);
  out.spectrum = ftle(product_log_singular_values(jc), depth, input_id);
  out.report = classify(out.spectrum);
  return out;
}

inline Analysis analyze(const NetworkSpec& net, const Vector& y0) {
  return analyze(net, y0, net.transitions());
}

}  // namespace lyapnet

#pragma once

// Weight penalties used in the training objective: L1 sparsity, Gram-matrix
// orthogonality under three closeness measures, and their weighted L1-O
// combination. Penalties act on weight matrices only; biases never enter.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "l1o/common.hpp"

namespace l1o {

using Weights = std::vector<Matrix>;

enum class OrthoNorm { none, l1_norm, frobenius, ldd };

inline std::string_view to_string(OrthoNorm n) {
  switch (n) {
    case OrthoNorm::none: return "none";
    case OrthoNorm::l1_norm: return "l1_norm";
    case OrthoNorm::frobenius: return "frobenius";
    case OrthoNorm::ldd: return "ldd";
  }
  return "none";
}

inline OrthoNorm parse_ortho_norm(std::string_view s) {
  if (s == "none") return OrthoNorm::none;
  if (s == "l1_norm" || s == "l1") return OrthoNorm::l1_norm;
  if (s == "frobenius" || s == "fn") return OrthoNorm::frobenius;
  if (s == "ldd") return OrthoNorm::ldd;
  throw ConfigError("unknown ortho_norm '" + std::string(s) + "'");
}

struct RegularizerSpec {
  double lambda1 = 0.0;
  double lambda_orth = 0.0;
  OrthoNorm ortho_norm = OrthoNorm::none;
  double ldd_jitter = 1e-8;
  /// Zero-based layer indices left out of every penalty.
  std::vector<int> excluded_layers;

  void validate() const {
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ConfigError("lambda1 must be finite and >= 0");
    if (!(lambda_orth >= 0.0) || !std::isfinite(lambda_orth)) {
      throw ConfigError("lambda_orth must be finite and >= 0");
    }
    if (!(ldd_jitter >= 0.0)) throw ConfigError("ldd_jitter must be >= 0");
  }

  bool active() const { return lambda1 > 0.0 || (ortho_norm != OrthoNorm::none && lambda_orth > 0.0); }

  bool penalizes(std::size_t layer) const {
    return std::find(excluded_layers.begin(), excluded_layers.end(), static_cast<int>(layer)) ==
           excluded_layers.end();
  }

  static RegularizerSpec none() { return {}; }
  static RegularizerSpec l1(double lambda1) { return {lambda1, 0.0, OrthoNorm::none}; }
  static RegularizerSpec l1o(double lambda1, double lambda_orth, OrthoNorm norm = OrthoNorm::l1_norm) {
    return {lambda1, lambda_orth, norm};
  }
};

inline void to_json(nlohmann::json& j, const RegularizerSpec& s) {
  j = nlohmann::json{{"lambda1", s.lambda1},
                     {"lambda_orth", s.lambda_orth},
                     {"ortho_norm", std::string(to_string(s.ortho_norm))},
                     {"ldd_jitter", s.ldd_jitter}};
  if (!s.excluded_layers.empty()) j["excluded_layers"] = s.excluded_layers;
}

inline void from_json(const nlohmann::json& j, RegularizerSpec& s) {
  s = RegularizerSpec{};
  s.lambda1 = j.value("lambda1", 0.0);
  s.lambda_orth = j.value("lambda_orth", 0.0);
  s.ortho_norm = parse_ortho_norm(j.value("ortho_norm", std::string("none")));
  s.ldd_jitter = j.value("ldd_jitter", 1e-8);
  if (j.contains("excluded_layers")) s.excluded_layers = j.at("excluded_layers").get<std::vector<int>>();
  s.validate();
}

/// G = W^T W: pairwise inner products of the columns (neuron weight vectors).
inline Matrix gram(const Matrix& w) { return w.transpose() * w; }

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline Matrix sign(const Matrix& m) {
  return m.unaryExpr([](double v) { return sign(v); });
}

inline Matrix gram_deviation(const Matrix& w) {
  Matrix d = gram(w);
  d.diagonal().array() -= 1.0;
  return d;
}

// Per-layer terms.

inline double l1_norm(const Matrix& w) { return w.cwiseAbs().sum(); }

inline double ortho_l1(const Matrix& w) { return gram_deviation(w).cwiseAbs().sum(); }

inline double ortho_frobenius(const Matrix& w) { return gram_deviation(w).squaredNorm(); }

struct LddTerm {
  double value = 0.0;
  /// Condition number of G + jitter*I exceeded 1e12.
  bool ill_conditioned = false;
};

namespace detail {

struct SpdEigen {
  Vector values;
  Matrix vectors;
  bool ill_conditioned;
};

inline SpdEigen spd_eigen(const Matrix& w, double jitter, std::size_t layer) {
  Matrix g = gram(w);
  g.diagonal().array() += jitter;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  if (es.info() != Eigen::Success) {
    throw SingularityError("layer " + std::to_string(layer) + ": eigendecomposition of Gram matrix failed");
  }
  const Vector& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  const double tol = static_cast<double>(ev.size()) * std::numeric_limits<double>::epsilon() * std::max(hi, 1.0);
  if (!(lo > tol)) {
    throw SingularityError("layer " + std::to_string(layer) +
                           ": Gram matrix is singular (min eigenvalue " + format_double(lo) +
                           "), log-determinant undefined");
  }
  return {ev, es.eigenvectors(), hi / lo > 1e12};
}

}  // namespace detail

/// tr(G) - logdet(G + jitter*I). Throws SingularityError when G + jitter*I is
/// not numerically positive definite.
inline LddTerm ldd(const Matrix& w, double jitter, std::size_t layer = 0) {
  const auto eig = detail::spd_eigen(w, jitter, layer);
  const double trace = w.squaredNorm();
  const double logdet = eig.values.array().log().sum();
  return {trace - logdet, eig.ill_conditioned};
}

// Whole-network penalties (sums over all weight matrices).

inline double l1_penalty(const Weights& ws) {
  double s = 0.0;
  for (const auto& w : ws) s += l1_norm(w);
  return s;
}

inline double ortho_penalty_l1(const Weights& ws) {
  double s = 0.0;
  for (const auto& w : ws) s += ortho_l1(w);
  return s;
}

inline double ortho_penalty_frobenius(const Weights& ws) {
  double s = 0.0;
  for (const auto& w : ws) s += ortho_frobenius(w);
  return s;
}

inline LddTerm ldd_penalty(const Weights& ws, double jitter) {
  LddTerm total;
  for (std::size_t l = 0; l < ws.size(); ++l) {
    const auto t = ldd(ws[l], jitter, l);
    total.value += t.value;
    total.ill_conditioned = total.ill_conditioned || t.ill_conditioned;
  }
  return total;
}

/// Orthogonality term selected by `norm` for one layer (unweighted).
inline double ortho_term(const Matrix& w, OrthoNorm norm, double jitter, std::size_t layer = 0) {
  switch (norm) {
    case OrthoNorm::none: return 0.0;
    case OrthoNorm::l1_norm: return ortho_l1(w);
    case OrthoNorm::frobenius: return ortho_frobenius(w);
    case OrthoNorm::ldd: return ldd(w, jitter, layer).value;
  }
  return 0.0;
}

/// lambda1 * Omega_1 + lambda_orth * Omega_norm over the penalized layers.
inline double penalty(const Weights& ws, const RegularizerSpec& spec) {
  double total = 0.0;
  for (std::size_t l = 0; l < ws.size(); ++l) {
    if (!spec.penalizes(l)) continue;
    if (spec.lambda1 != 0.0) total += spec.lambda1 * l1_norm(ws[l]);
    if (spec.ortho_norm != OrthoNorm::none && spec.lambda_orth != 0.0) {
      total += spec.lambda_orth * ortho_term(ws[l], spec.ortho_norm, spec.ldd_jitter, l);
    }
  }
  return total;
}

/// Subgradient of penalty() with respect to each weight matrix; sign(0) = 0.
inline Weights penalty_subgradient(const Weights& ws, const RegularizerSpec& spec) {
  Weights grads;
  grads.reserve(ws.size());
  for (std::size_t l = 0; l < ws.size(); ++l) {
    const Matrix& w = ws[l];
    Matrix g = Matrix::Zero(w.rows(), w.cols());
    if (spec.penalizes(l)) {
      if (spec.lambda1 != 0.0) g += spec.lambda1 * sign(w);
      if (spec.lambda_orth != 0.0) {
        switch (spec.ortho_norm) {
          case OrthoNorm::none: break;
          case OrthoNorm::l1_norm:
            // d/dW sum|G - I| = W (S + S^T) with S = sign(G - I) symmetric.
            g += spec.lambda_orth * 2.0 * w * sign(gram_deviation(w));
            break;
          case OrthoNorm::frobenius:
            g += spec.lambda_orth * 4.0 * w * gram_deviation(w);
            break;
          case OrthoNorm::ldd: {
            const auto eig = detail::spd_eigen(w, spec.ldd_jitter, l);
            const Matrix inv =
                eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose();
            g += spec.lambda_orth * (2.0 * w - 2.0 * w * inv);
            break;
          }
        }
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace l1o

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l1o/common.hpp"
#include "l1o/dtree.hpp"
#include "l1o/nn.hpp"

namespace l1o {

/// Rank-statistic (Mann-Whitney) AUC of `scores` for `positive` vs the rest;
/// tied scores receive their midrank.
inline double binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ShapeError("auc: score/label length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order = iota_indices(n);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share the midrank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedAucError("auc undefined: only one class present");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

/// AUC of a score matrix. One column: binary scores for class 1. Otherwise the
/// macro average of one-vs-rest AUCs over the classes that have both positive
/// and negative examples.
inline double auc(const Matrix& scores, const Labels& y) {
  if (static_cast<Eigen::Index>(y.size()) != scores.rows()) throw ShapeError("auc: score/label length mismatch");
  if (scores.cols() == 1) {
    std::vector<double> s(scores.data(), scores.data() + scores.rows());
    std::vector<bool> pos(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) pos[i] = y[i] == 1;
    return binary_auc(s, pos);
  }
  if (scores.cols() == 2) {
    return auc(Matrix(scores.col(1)), y);
  }
  double total = 0.0;
  int used = 0;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    std::vector<double> s(static_cast<std::size_t>(scores.rows()));
    std::vector<bool> pos(y.size());
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      s[i] = scores(static_cast<Eigen::Index>(i), c);
      pos[i] = y[i] == c;
      n_pos += pos[i];
    }
    if (n_pos == 0 || n_pos == y.size()) continue;
    total += binary_auc(s, pos);
    ++used;
  }
  if (used == 0) throw UndefinedAucError("auc undefined: only one class present");
  return total / used;
}

inline double agreement(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw InputError("prediction length mismatch");
  if (a.empty()) throw InputError("agreement over an empty set");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

/// Share of rows where the tree (on raw features) agrees with the network's
/// argmax class (on standardized features).
inline double fidelity(const DecisionTree& tree, const MlpModel& model, const Matrix& x_raw, const Matrix& x_std) {
  if (x_raw.rows() != x_std.rows()) throw InputError("fidelity: raw and standardized sets differ in length");
  return agreement(predict_tree(tree, x_raw), predict(model, x_std));
}

/// Share of rows on which all trees predict the same class.
inline double consistency(const std::vector<DecisionTree>& trees, const Matrix& x) {
  if (trees.size() < 2) throw InputError("consistency needs at least two trees");
  if (x.rows() < 1) throw InputError("consistency: empty test set");
  std::vector<Labels> preds;
  for (const auto& t : trees) preds.push_back(predict_tree(t, x));
  std::size_t unanimous = 0;
  for (std::size_t r = 0; r < static_cast<std::size_t>(x.rows()); ++r) {
    bool same = true;
    for (std::size_t s = 1; s < preds.size() && same; ++s) same = preds[s][r] == preds[0][r];
    unanimous += same;
  }
  return static_cast<double>(unanimous) / static_cast<double>(x.rows());
}

struct FidelityReport {
  double mean = 0.0;
  /// Population standard deviation of per_run.
  double std = 0.0;
  std::vector<double> per_run;

  static FidelityReport from_runs(std::vector<double> runs) {
    FidelityReport r;
    r.per_run = std::move(runs);
    if (r.per_run.empty()) return r;
    const double n = static_cast<double>(r.per_run.size());
    r.mean = std::accumulate(r.per_run.begin(), r.per_run.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : r.per_run) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / n);
    return r;
  }
};

struct ConsistencyReport {
  double consistency = 0.0;
  int n_sessions = 0;
  double apl_mean = 0.0;
  FidelityReport fidelity;
};

inline void to_json(nlohmann::json& j, const FidelityReport& r) {
  j = nlohmann::json{{"mean", r.mean}, {"std", r.std}, {"per_run", r.per_run}};
}

inline void to_json(nlohmann::json& j, const ConsistencyReport& r) {
  j = nlohmann::json{{"consistency", r.consistency},
                     {"n_sessions", r.n_sessions},
                     {"apl_mean", r.apl_mean},
                     {"fidelity", r.fidelity}};
}

}  // namespace l1o

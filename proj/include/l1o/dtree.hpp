#pragma once

// Binary CART classifier: Gini splits on midpoint thresholds, min-samples-leaf
// and max-depth stopping, reduced-error post-pruning on a held-out set, APL,
// and DOT / if-then rule / JSON export.

#include <algorithm>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l1o/common.hpp"

namespace l1o {

struct DtParams {
  int min_samples_leaf = 1;
  std::optional<int> max_depth;

  void validate() const {
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (max_depth && *max_depth < 1) throw ConfigError("max_depth must be >= 1 when set");
  }
};

inline void to_json(nlohmann::json& j, const DtParams& p) {
  j = nlohmann::json{{"min_samples_leaf", p.min_samples_leaf}};
  j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, DtParams& p) {
  p = DtParams{};
  p.min_samples_leaf = j.value("min_samples_leaf", 1);
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.validate();
}

struct TreeNode {
  /// -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Majority class of the training rows that reached this node.
  int label = 0;
  std::vector<std::size_t> counts;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Nodes are stored in preorder; nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  int n_features = 0;
  int n_classes = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  const TreeNode& root() const { return nodes.front(); }

  std::size_t node_count() const { return nodes.size(); }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
  }

  std::size_t internal_count() const { return node_count() - leaf_count(); }

  /// Longest root-to-leaf path, counted in internal nodes.
  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  std::string class_name(int c) const {
    if (c >= 0 && static_cast<std::size_t>(c) < class_names.size()) return class_names[static_cast<std::size_t>(c)];
    return std::to_string(c);
  }

  bool same_structure(const DecisionTree& o) const { return nodes == o.nodes; }
};

inline std::vector<std::string> default_feature_names(int d) {
  std::vector<std::string> names;
  for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

inline int majority(const std::vector<std::size_t>& counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

/// Gini impurity of a class histogram.
inline double gini(const std::vector<std::size_t>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    s += p * p;
  }
  return 1.0 - s;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  /// Weighted child impurity (nL*gini(L) + nR*gini(R)) / n.
  double impurity = 0.0;
};

namespace detail {

inline constexpr double kImpurityTieTol = 1e-12;

/// Best admissible split of `rows`; ties go to the lowest feature, then the
/// smallest threshold.
inline std::optional<Split> best_split(const Matrix& x, const Labels& y, int n_classes,
                                       const std::vector<std::size_t>& rows, int min_samples_leaf) {
  const std::size_t n = rows.size();
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::size_t> total(k, 0);
  for (auto r : rows) ++total[static_cast<std::size_t>(y[r])];

  std::optional<Split> best;
  std::vector<std::size_t> sorted = rows;
  std::vector<std::size_t> left(k), right(k);
  const auto msl = static_cast<std::size_t>(min_samples_leaf);
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
    });
    std::fill(left.begin(), left.end(), 0);
    right = total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto cls = static_cast<std::size_t>(y[sorted[i]]);
      ++left[cls];
      --right[cls];
      const double lo = x(static_cast<Eigen::Index>(sorted[i]), f);
      const double hi = x(static_cast<Eigen::Index>(sorted[i + 1]), f);
      if (!(lo < hi)) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < msl || n_right < msl) continue;
      const double imp = (static_cast<double>(n_left) * gini(left, n_left) +
                          static_cast<double>(n_right) * gini(right, n_right)) /
                         static_cast<double>(n);
      if (!best || imp < best->impurity - kImpurityTieTol) {
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid < hi)) mid = lo;
        best = Split{static_cast<int>(f), mid, imp};
      }
    }
  }
  return best;
}

struct TreeBuilder {
  const Matrix& x;
  const Labels& y;
  int n_classes;
  DtParams params;
  std::vector<TreeNode> nodes;

  int build(const std::vector<std::size_t>& rows, int depth) {
    TreeNode node;
    node.counts.assign(static_cast<std::size_t>(n_classes), 0);
    for (auto r : rows) ++node.counts[static_cast<std::size_t>(y[r])];
    node.label = majority(node.counts);
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(node);

    const bool pure = node.counts[static_cast<std::size_t>(node.label)] == rows.size();
    const bool depth_capped = params.max_depth && depth >= *params.max_depth;
    if (pure || depth_capped) return id;
    const auto split = best_split(x, y, n_classes, rows, params.min_samples_leaf);
    if (!split) return id;

    std::vector<std::size_t> lrows, rrows;
    for (auto r : rows) {
      (x(static_cast<Eigen::Index>(r), split->feature) <= split->threshold ? lrows : rrows).push_back(r);
    }
    nodes[static_cast<std::size_t>(id)].feature = split->feature;
    nodes[static_cast<std::size_t>(id)].threshold = split->threshold;
    const int l = build(lrows, depth + 1);
    const int r = build(rrows, depth + 1);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace detail

inline void check_tree_input(const DecisionTree& tree, const Matrix& x) {
  if (x.cols() != tree.n_features) {
    throw ShapeError("tree expects " + std::to_string(tree.n_features) + " features, got " +
                     std::to_string(x.cols()));
  }
}

inline DecisionTree fit_tree(const Matrix& x, const Labels& y, int n_classes, const DtParams& params,
                             std::vector<std::string> feature_names = {}, std::vector<std::string> class_names = {}) {
  params.validate();
  if (x.rows() < 1) throw InputError("fit_tree: empty dataset");
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw ShapeError("fit_tree: label count mismatch");
  if (n_classes < 1) throw InputError("fit_tree: n_classes must be >= 1");
  for (auto v : y) {
    if (v < 0 || v >= n_classes) throw InputError("fit_tree: label " + std::to_string(v) + " out of range");
  }
  if (feature_names.empty()) feature_names = default_feature_names(static_cast<int>(x.cols()));
  if (static_cast<Eigen::Index>(feature_names.size()) != x.cols()) {
    throw InputError("fit_tree: feature name count does not match columns");
  }
  detail::TreeBuilder b{x, y, n_classes, params, {}};
  b.build(iota_indices(static_cast<std::size_t>(x.rows())), 0);
  DecisionTree t;
  t.nodes = std::move(b.nodes);
  t.n_features = static_cast<int>(x.cols());
  t.n_classes = n_classes;
  t.feature_names = std::move(feature_names);
  t.class_names = std::move(class_names);
  return t;
}

/// Index of the leaf reached by row `r`, starting at `from`.
inline int route(const DecisionTree& tree, const Matrix& x, Eigen::Index r, int from = 0) {
  int i = from;
  while (!tree.nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    i = x(r, n.feature) <= n.threshold ? n.left : n.right;
  }
  return i;
}

inline Labels predict_tree(const DecisionTree& tree, const Matrix& x) {
  check_tree_input(tree, x);
  Labels out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = tree.nodes[static_cast<std::size_t>(route(tree, x, r))].label;
  return out;
}

/// Leaf class frequencies as an N x n_classes score matrix.
inline Matrix predict_tree_proba(const DecisionTree& tree, const Matrix& x) {
  check_tree_input(tree, x);
  Matrix p = Matrix::Zero(x.rows(), tree.n_classes);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto& leaf = tree.nodes[static_cast<std::size_t>(route(tree, x, r))];
    std::size_t total = 0;
    for (auto c : leaf.counts) total += c;
    for (std::size_t c = 0; c < leaf.counts.size(); ++c) {
      p(r, static_cast<Eigen::Index>(c)) =
          total ? static_cast<double>(leaf.counts[c]) / static_cast<double>(total) : (static_cast<int>(c) == leaf.label);
    }
  }
  return p;
}

/// Mean number of internal (test) nodes on each row's root-to-leaf path.
inline double apl(const DecisionTree& tree, const Matrix& x) {
  check_tree_input(tree, x);
  if (x.rows() < 1) throw InputError("apl: empty input");
  std::size_t total = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    int i = 0;
    while (!tree.nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = tree.nodes[static_cast<std::size_t>(i)];
      i = x(r, n.feature) <= n.threshold ? n.left : n.right;
      ++total;
    }
  }
  return static_cast<double>(total) / static_cast<double>(x.rows());
}

/// Drops nodes no longer reachable from the root and renumbers in preorder.
inline DecisionTree compact(const DecisionTree& tree) {
  DecisionTree out = tree;
  out.nodes.clear();
  auto copy = [&](auto&& self, int i) -> int {
    const int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(tree.nodes[static_cast<std::size_t>(i)]);
    if (!tree.nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const int l = self(self, tree.nodes[static_cast<std::size_t>(i)].left);
      const int r = self(self, tree.nodes[static_cast<std::size_t>(i)].right);
      out.nodes[static_cast<std::size_t>(id)].left = l;
      out.nodes[static_cast<std::size_t>(id)].right = r;
    }
    return id;
  };
  copy(copy, 0);
  return out;
}

inline void make_leaf(TreeNode& n) {
  n.feature = -1;
  n.threshold = 0.0;
  n.left = n.right = -1;
}

/// Reduced-error pruning. Internal nodes are visited deepest-first (ties in
/// preorder) and collapsed into a leaf of their training-majority class when
/// that does not lower accuracy against `target` on the rows of `x` reaching
/// them; passes repeat until nothing changes.
inline DecisionTree prune_tree(const DecisionTree& tree, const Matrix& x, const Labels& target) {
  check_tree_input(tree, x);
  if (x.rows() < 1) throw InputError("prune_tree: empty validation set");
  if (static_cast<Eigen::Index>(target.size()) != x.rows()) throw ShapeError("prune_tree: target length mismatch");

  DecisionTree t = tree;
  const std::size_t n_nodes = t.nodes.size();
  std::vector<int> depth(n_nodes, 0);
  std::vector<std::vector<std::size_t>> reach(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    if (!t.nodes[i].is_leaf()) {
      depth[static_cast<std::size_t>(t.nodes[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(t.nodes[i].right)] = depth[i] + 1;
    }
  }
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    int i = 0;
    while (true) {
      reach[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(r));
      const auto& n = t.nodes[static_cast<std::size_t>(i)];
      if (n.is_leaf()) break;
      i = x(r, n.feature) <= n.threshold ? n.left : n.right;
    }
  }
  std::vector<std::size_t> order = iota_indices(n_nodes);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });

  // Only nodes still attached to the root are candidates.
  auto attached = [&]() {
    std::vector<char> live(n_nodes, 0);
    live[0] = 1;
    for (std::size_t i = 0; i < n_nodes; ++i) {
      if (live[i] && !t.nodes[i].is_leaf()) {
        live[static_cast<std::size_t>(t.nodes[i].left)] = 1;
        live[static_cast<std::size_t>(t.nodes[i].right)] = 1;
      }
    }
    return live;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i : order) {
      if (t.nodes[i].is_leaf() || !attached()[i]) continue;
      std::size_t subtree_hits = 0, leaf_hits = 0;
      for (auto r : reach[i]) {
        const auto ri = static_cast<Eigen::Index>(r);
        subtree_hits += t.nodes[static_cast<std::size_t>(route(t, x, ri, static_cast<int>(i)))].label == target[r];
        leaf_hits += t.nodes[i].label == target[r];
      }
      if (leaf_hits >= subtree_hits) {
        make_leaf(t.nodes[i]);
        changed = true;
      }
    }
  }
  return compact(t);
}

// Export.

inline void check_names(const DecisionTree& tree, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != tree.n_features) {
    throw InputError("expected " + std::to_string(tree.n_features) + " feature names, got " +
                     std::to_string(names.size()));
  }
}

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

inline std::string export_dot(const DecisionTree& tree, const std::vector<std::string>& feature_names) {
  check_names(tree, feature_names);
  std::ostringstream os;
  os << "digraph Tree {\n  node [shape=box, fontname=\"helvetica\"];\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    os << "  n" << i << " [label=\"";
    if (n.is_leaf()) {
      os << dot_escape(tree.class_name(n.label)) << "\\ncounts = [";
      for (std::size_t c = 0; c < n.counts.size(); ++c) os << (c ? ", " : "") << n.counts[c];
      os << "]";
    } else {
      os << dot_escape(feature_names[static_cast<std::size_t>(n.feature)]) << " ≤ " << format_short(n.threshold);
    }
    os << "\"];\n";
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    os << "  n" << i << " -> n" << n.left << " [label=\"true\"];\n";
    os << "  n" << i << " -> n" << n.right << " [label=\"false\"];\n";
  }
  os << "}\n";
  return os.str();
}

/// One "if <conjunction> then <class>" line per leaf, in preorder.
inline std::string export_rules(const DecisionTree& tree, const std::vector<std::string>& feature_names) {
  check_names(tree, feature_names);
  std::ostringstream os;
  std::vector<std::string> path;
  auto walk = [&](auto&& self, int i) -> void {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      os << "if ";
      if (path.empty()) os << "true";
      for (std::size_t k = 0; k < path.size(); ++k) os << (k ? " and " : "") << path[k];
      os << " then " << tree.class_name(n.label) << "\n";
      return;
    }
    const auto& name = feature_names[static_cast<std::size_t>(n.feature)];
    path.push_back(name + " ≤ " + format_short(n.threshold));
    self(self, n.left);
    path.back() = name + " > " + format_short(n.threshold);
    self(self, n.right);
    path.pop_back();
  };
  walk(walk, 0);
  return os.str();
}

inline constexpr int kTreeFormatVersion = 1;

inline nlohmann::json tree_to_json(const DecisionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    nlohmann::json jn{{"label", n.label}, {"counts", n.counts}};
    if (!n.is_leaf()) {
      jn["feature"] = n.feature;
      jn["threshold"] = n.threshold;
      jn["left"] = n.left;
      jn["right"] = n.right;
    }
    nodes.push_back(std::move(jn));
  }
  return {{"format", "l1o-tree"},      {"version", kTreeFormatVersion},  {"n_features", t.n_features},
          {"n_classes", t.n_classes},  {"feature_names", t.feature_names}, {"class_names", t.class_names},
          {"nodes", nodes}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "l1o-tree") throw SchemaError("not an l1o-tree document");
  if (j.value("version", 0) != kTreeFormatVersion) throw SchemaError("unsupported tree document version");
  DecisionTree t;
  t.n_features = j.at("n_features").get<int>();
  t.n_classes = j.at("n_classes").get<int>();
  t.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  t.class_names = j.value("class_names", std::vector<std::string>{});
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.label = jn.at("label").get<int>();
    n.counts = jn.at("counts").get<std::vector<std::size_t>>();
    if (jn.contains("feature")) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    }
    t.nodes.push_back(std::move(n));
  }
  const auto n_nodes = static_cast<int>(t.nodes.size());
  if (n_nodes == 0) throw SchemaError("tree document has no nodes");
  for (const auto& n : t.nodes) {
    if (!n.is_leaf() && (n.feature >= t.n_features || n.left <= 0 || n.right <= 0 || n.left >= n_nodes ||
                         n.right >= n_nodes)) {
      throw SchemaError("tree document has an invalid node reference");
    }
  }
  return t;
}

}  // namespace l1o

#pragma once

// Network-to-tree extraction: label the training inputs with the trained
// network's classes, fit a CART tree on those labels and optionally prune it
// against the network's classes on the validation split.

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "l1o/data.hpp"
#include "l1o/dtree.hpp"
#include "l1o/metrics.hpp"
#include "l1o/nn.hpp"

namespace l1o {

/// Feature space the tree is fitted in. Network labels always come from the
/// standardized inputs.
enum class TreeFeatures { raw, standardized };

inline std::string_view to_string(TreeFeatures f) { return f == TreeFeatures::raw ? "raw" : "standardized"; }

inline TreeFeatures parse_tree_features(std::string_view s) {
  if (s == "raw") return TreeFeatures::raw;
  if (s == "standardized") return TreeFeatures::standardized;
  throw ConfigError("unknown tree feature space '" + std::string(s) + "'");
}

struct ExtractOptions {
  DtParams dt;
  bool prune = true;
  TreeFeatures features = TreeFeatures::raw;
};

struct ExtractionResult {
  MlpModel model;
  TrainHistory history;
  /// Pruned when options.prune, otherwise identical to unpruned_tree.
  DecisionTree tree;
  DecisionTree unpruned_tree;
  ExtractOptions options;
  nlohmann::json provenance = nlohmann::json::object();
};

/// A raw/standardized view of the same rows.
struct FeatureView {
  const Matrix& raw;
  const Matrix& standardized;

  const Matrix& for_tree(TreeFeatures f) const { return f == TreeFeatures::raw ? raw : standardized; }
};

inline ExtractionResult extract(const MlpModel& model, FeatureView train, FeatureView val, const ExtractOptions& opt,
                                std::vector<std::string> feature_names = {},
                                std::vector<std::string> class_names = {}) {
  opt.dt.validate();
  if (train.raw.rows() != train.standardized.rows() || train.raw.cols() != train.standardized.cols()) {
    throw InputError("extract: raw and standardized training views differ in shape");
  }
  if (train.standardized.cols() != model.arch.input_dim) {
    throw InputError("extract: dataset has " + std::to_string(train.standardized.cols()) +
                     " features, network expects " + std::to_string(model.arch.input_dim));
  }
  const Labels y_hat = predict(model, train.standardized);
  ExtractionResult r;
  r.model = model;
  r.options = opt;
  r.unpruned_tree = fit_tree(train.for_tree(opt.features), y_hat, model.arch.n_classes, opt.dt,
                             std::move(feature_names), std::move(class_names));
  if (opt.prune) {
    if (val.standardized.cols() != model.arch.input_dim || val.raw.rows() != val.standardized.rows()) {
      throw InputError("extract: validation views do not match the network");
    }
    r.tree = prune_tree(r.unpruned_tree, val.for_tree(opt.features), predict(model, val.standardized));
  } else {
    r.tree = r.unpruned_tree;
  }
  r.provenance = {{"regularizer", model.regularizer},
                  {"train_config", model.train_config},
                  {"dt_params", opt.dt},
                  {"prune", opt.prune},
                  {"tree_features", std::string(to_string(opt.features))}};
  return r;
}

inline ExtractionResult extract(const MlpModel& model, const PreparedData& data, const ExtractOptions& opt) {
  auto r = extract(model, {data.train.x, data.train_std}, {data.val.x, data.val_std}, opt, data.train.feature_names,
                   data.train.class_names);
  r.provenance["split_seed"] = data.spec.seed;
  r.provenance["split_hash"] = hex64(data.split_hash());
  return r;
}

/// Train a network under `reg`, then extract a tree from it.
inline ExtractionResult train_and_extract(const PreparedData& data, const MlpArchitecture& arch,
                                          const TrainConfig& cfg, const RegularizerSpec& reg,
                                          const ExtractOptions& opt) {
  MlpArchitecture a = arch;
  a.input_dim = data.n_features();
  a.n_classes = data.n_classes();
  auto trained = train(data.train_std, data.train.y, a, cfg, reg);
  auto r = extract(trained.model, data, opt);
  r.history = std::move(trained.history);
  return r;
}

struct ExtractionMetrics {
  /// APL of the final tree on the training split.
  double apl = 0.0;
  double mlp_auc = 0.0;
  double dt_auc = 0.0;
  double fidelity = 0.0;
  double fidelity_unpruned = 0.0;
  double mlp_accuracy = 0.0;
  std::size_t nodes = 0;
};

/// Test-split scores, AUCs as NaN when the split holds a single class.
inline ExtractionMetrics evaluate(const ExtractionResult& r, const PreparedData& data) {
  const auto f = r.options.features;
  const Matrix& train_tree = f == TreeFeatures::raw ? data.train.x : data.train_std;
  const Matrix& test_tree = f == TreeFeatures::raw ? data.test.x : data.test_std;
  ExtractionMetrics m;
  m.apl = apl(r.tree, train_tree);
  const Matrix out = forward(r.model, data.test_std).probs();
  const Labels mlp_pred = argmax_classes(out, r.model.arch.n_classes);
  try {
    m.mlp_auc = auc(out, data.test.y);
    m.dt_auc = auc(predict_tree_proba(r.tree, test_tree), data.test.y);
  } catch (const UndefinedAucError&) {
    m.mlp_auc = m.dt_auc = std::numeric_limits<double>::quiet_NaN();
  }
  m.fidelity = agreement(predict_tree(r.tree, test_tree), mlp_pred);
  m.fidelity_unpruned = agreement(predict_tree(r.unpruned_tree, test_tree), mlp_pred);
  m.mlp_accuracy = agreement(mlp_pred, data.test.y);
  m.nodes = r.tree.node_count();
  return m;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << text;
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open '" + p.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

/// Persists model.json, tree.json, tree_unpruned.json, tree.dot, rules.txt and
/// provenance.json (plus dataset_manifest.json when `data` is given).
inline void save_extraction(const ExtractionResult& r, const std::filesystem::path& dir,
                            const PreparedData* data = nullptr) {
  std::filesystem::create_directories(dir);
  write_text(dir / "model.json", model_to_json(r.model).dump(2) + "\n");
  write_text(dir / "tree.json", tree_to_json(r.tree).dump(2) + "\n");
  write_text(dir / "tree_unpruned.json", tree_to_json(r.unpruned_tree).dump(2) + "\n");
  write_text(dir / "tree.dot", export_dot(r.tree, r.tree.feature_names));
  write_text(dir / "rules.txt", export_rules(r.tree, r.tree.feature_names));
  nlohmann::json prov = r.provenance;
  prov["format"] = "l1o-extraction";
  prov["version"] = 1;
  if (data) {
    const auto m = evaluate(r, *data);
    prov["metrics"] = {{"apl_train", m.apl},
                       {"mlp_test_auc", m.mlp_auc},
                       {"dt_test_auc", m.dt_auc},
                       {"test_fidelity", m.fidelity},
                       {"test_fidelity_unpruned", m.fidelity_unpruned},
                       {"mlp_test_accuracy", m.mlp_accuracy},
                       {"nodes", m.nodes}};
    write_text(dir / "dataset_manifest.json", dataset_manifest(*data).dump(2) + "\n");
  }
  write_text(dir / "provenance.json", prov.dump(2) + "\n");
}

}  // namespace l1o

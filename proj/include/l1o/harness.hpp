#pragma once

// Experiment orchestration: regularization sweeps (fitness points), best-model
// selection, repeated-split fidelity runs, multi-initialization consistency
// runs, standalone tree baselines and timing.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "l1o/data.hpp"
#include "l1o/extraction.hpp"
#include "l1o/metrics.hpp"

namespace l1o {

// Configuration.

struct DatasetRef {
  /// "parabola" or "csv".
  std::string kind = "csv";
  std::string path;
  std::string label_column;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> drop_columns;
  std::size_t n = 500;
  std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const DatasetRef& d) {
  if (d.kind == "parabola") {
    j = {{"kind", "parabola"}, {"n", d.n}, {"seed", d.seed}};
  } else {
    j = {{"kind", "csv"},
         {"path", d.path},
         {"label_column", d.label_column},
         {"categorical_columns", d.categorical_columns},
         {"drop_columns", d.drop_columns}};
  }
}

inline void from_json(const nlohmann::json& j, DatasetRef& d) {
  d = DatasetRef{};
  d.kind = j.value("kind", std::string("csv"));
  if (d.kind == "parabola") {
    d.n = j.value("n", std::size_t{500});
    d.seed = j.value("seed", std::uint64_t{0});
  } else if (d.kind == "csv") {
    d.path = j.at("path").get<std::string>();
    d.label_column = j.at("label_column").get<std::string>();
    d.categorical_columns = j.value("categorical_columns", std::vector<std::string>{});
    d.drop_columns = j.value("drop_columns", std::vector<std::string>{});
  } else {
    throw ConfigError("unknown dataset kind '" + d.kind + "'");
  }
}

struct GridCell {
  double lambda1 = 0.0;
  double lambda_orth = 0.0;
  OrthoNorm norm = OrthoNorm::none;

  RegularizerSpec spec(double ldd_jitter = 1e-8) const { return {lambda1, lambda_orth, norm, ldd_jitter, {}}; }
};

inline std::vector<double> log_space(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw ConfigError("log_space: invalid range");
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    v.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1)));
  }
  return v;
}

inline constexpr double kLambda1Min = 0.001, kLambda1Max = 0.1;
inline constexpr double kLambdaOrthMin = 0.0001, kLambdaOrthMax = 2.0;

/// Regularizer families swept for the fitness curves.
enum class GridKind { l1o, l1o_frobenius, l1, orth };

inline GridKind parse_grid_kind(std::string_view s) {
  if (s == "l1o") return GridKind::l1o;
  if (s == "l1o_fn" || s == "fn") return GridKind::l1o_frobenius;
  if (s == "l1") return GridKind::l1;
  if (s == "orth") return GridKind::orth;
  throw ConfigError("unknown grid kind '" + std::string(s) + "'");
}

/// Log-spaced grid over the default lambda ranges (6 x 6 for the two-parameter families).
inline std::vector<GridCell> make_grid(GridKind kind, int n_lambda1 = 6, int n_lambda_orth = 6,
                                       double l1_lo = kLambda1Min, double l1_hi = kLambda1Max,
                                       double orth_lo = kLambdaOrthMin, double orth_hi = kLambdaOrthMax) {
  std::vector<GridCell> g;
  const auto l1s = log_space(l1_lo, l1_hi, n_lambda1);
  const auto orths = log_space(orth_lo, orth_hi, n_lambda_orth);
  switch (kind) {
    case GridKind::l1o:
    case GridKind::l1o_frobenius: {
      const auto norm = kind == GridKind::l1o ? OrthoNorm::l1_norm : OrthoNorm::frobenius;
      for (double a : l1s) {
        for (double b : orths) g.push_back({a, b, norm});
      }
      break;
    }
    case GridKind::l1:
      for (double a : l1s) g.push_back({a, 0.0, OrthoNorm::none});
      break;
    case GridKind::orth:
      for (double b : orths) g.push_back({0.0, b, OrthoNorm::l1_norm});
      break;
  }
  return g;
}

struct ExperimentConfig {
  DatasetRef dataset;
  /// input_dim and n_classes are taken from the data.
  MlpArchitecture arch;
  TrainConfig train;
  ExtractOptions extract;
  SplitSpec split;
  /// Single-run regularizer (train / extract / fidelity / consistency).
  RegularizerSpec regularizer;
  /// Sweep grid.
  std::vector<GridCell> grid;
  int jobs = 1;

  void validate() const {
    arch.validate();
    train.validate();
    extract.dt.validate();
    split.validate();
    regularizer.validate();
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const GridCell& c) {
  j = {{"lambda1", c.lambda1}, {"lambda_orth", c.lambda_orth}, {"ortho_norm", std::string(to_string(c.norm))}};
}

inline void from_json(const nlohmann::json& j, GridCell& c) {
  c.lambda1 = j.value("lambda1", 0.0);
  c.lambda_orth = j.value("lambda_orth", 0.0);
  c.norm = parse_ortho_norm(j.value("ortho_norm", std::string("none")));
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"dataset", c.dataset},
          {"architecture", {{"hidden_sizes", c.arch.hidden_sizes}}},
          {"train", c.train},
          {"dt", c.extract.dt},
          {"prune", c.extract.prune},
          {"tree_features", std::string(to_string(c.extract.features))},
          {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}, {"seed", c.split.seed}}},
          {"regularizer", c.regularizer},
          {"grid", c.grid},
          {"jobs", c.jobs}};
}

/// Overlays the keys present in `j` onto `base`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  ExperimentConfig c = std::move(base);
  try {
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<DatasetRef>();
    if (j.contains("architecture")) c.arch.hidden_sizes = j.at("architecture").at("hidden_sizes").get<std::vector<int>>();
    if (j.contains("train")) {
      nlohmann::json t = c.train;
      t.update(j.at("train"));
      c.train = t.get<TrainConfig>();
    }
    if (j.contains("dt")) c.extract.dt = j.at("dt").get<DtParams>();
    if (j.contains("prune")) c.extract.prune = j.at("prune").get<bool>();
    if (j.contains("tree_features")) c.extract.features = parse_tree_features(j.at("tree_features").get<std::string>());
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.train = s.value("train", c.split.train);
      c.split.val = s.value("val", c.split.val);
      c.split.test = s.value("test", c.split.test);
      c.split.seed = s.value("seed", c.split.seed);
    }
    if (j.contains("regularizer")) c.regularizer = j.at("regularizer").get<RegularizerSpec>();
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.is_array()) {
        c.grid = g.get<std::vector<GridCell>>();
      } else {
        c.grid = make_grid(parse_grid_kind(g.value("kind", std::string("l1o"))), g.value("n_lambda1", 6),
                           g.value("n_lambda_orth", 6), g.value("lambda1_min", kLambda1Min),
                           g.value("lambda1_max", kLambda1Max), g.value("lambda_orth_min", kLambdaOrthMin),
                           g.value("lambda_orth_max", kLambdaOrthMax));
      }
    }
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Settings of the evaluation datasets (hidden sizes, batch size, learning
/// rate, epochs, min samples per leaf, pruning). CSV paths are relative to
/// `data_dir`.
inline ExperimentConfig preset(const std::string& name, const std::filesystem::path& data_dir = "data") {
  ExperimentConfig c;
  auto csv = [&](const std::string& file, const std::string& label) {
    c.dataset.kind = "csv";
    c.dataset.path = (data_dir / file).string();
    c.dataset.label_column = label;
  };
  auto set = [&](std::vector<int> hidden, int batch, double lr, int epochs, int msl, bool prune) {
    c.arch.hidden_sizes = std::move(hidden);
    c.train.batch_size = batch;
    c.train.learning_rate = lr;
    c.train.epochs = epochs;
    c.extract.dt.min_samples_leaf = msl;
    c.extract.prune = prune;
  };
  if (name == "parabola") {
    c.dataset.kind = "parabola";
    set({100, 100, 10}, 100, 0.001, 1000, 1, false);
  } else if (name == "iris") {
    csv("iris.csv", "species");
    set({8}, 10, 0.01, 50, 5, true);
  } else if (name == "breast_cancer") {
    csv("breast_cancer_wisconsin.csv", "diagnosis");
    set({64, 32}, 10, 0.001, 10, 15, true);
  } else if (name == "pima") {
    csv("pima_indians_diabetes.csv", "diabetes");
    set({24}, 128, 0.01, 10, 30, true);
  } else if (name == "titanic") {
    csv("titanic.csv", "Survived");
    c.dataset.categorical_columns = {"Pclass", "Sex", "Embarked"};
    c.dataset.drop_columns = {"PassengerId", "Name", "Ticket", "Cabin"};
    set({100, 50, 25}, 16, 0.005, 10, 35, true);
  } else if (name == "mushroom") {
    csv("mushroom.csv", "class");
    set({16}, 10, 0.005, 25, 45, true);
  } else if (name == "adult") {
    csv("adult.csv", "income");
    c.dataset.categorical_columns = {"workclass",    "education", "marital-status", "occupation",
                                     "relationship", "race",      "sex",            "native-country"};
    set({32, 16}, 32, 0.005, 10, 75, true);
  } else if (name == "diabetes") {
    csv("diabetic_data.csv", "readmitted");
    set({32, 16, 8}, 512, 0.01, 50, 250, true);
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.grid = make_grid(GridKind::l1o);
  return c;
}

inline Dataset load_dataset(const DatasetRef& ref) {
  if (ref.kind == "parabola") return generate_parabola(ref.n, ref.seed);
  return load_csv(ref.path, CsvOptions{ref.label_column, ref.categorical_columns, ref.drop_columns});
}

// Timing.

template <typename F>
double time_run(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  std::forward<F>(f)();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Fitness points.

struct FitnessPoint {
  double lambda1 = 0.0;
  double lambda_orth = 0.0;
  std::string norm = "none";
  double apl = 0.0;
  double mlp_auc = std::numeric_limits<double>::quiet_NaN();
  double dt_auc = std::numeric_limits<double>::quiet_NaN();
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  std::size_t nodes = 0;
  double seconds = 0.0;
  /// "ok", or "failed: <reason>" for a cell whose training diverged.
  std::string status = "ok";
  std::uint64_t seed = 0;
  std::string split_hash;

  bool ok() const { return status == "ok"; }
};

inline constexpr const char* kFitnessHeader = "lambda1,lambda_orth,norm,apl,mlp_auc,dt_auc,fidelity,nodes,seconds,status,seed,split_hash";

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fitness_csv(const std::vector<FitnessPoint>& points) {
  std::ostringstream os;
  os << kFitnessHeader << "\n";
  for (const auto& p : points) {
    os << format_double(p.lambda1) << ',' << format_double(p.lambda_orth) << ',' << p.norm << ','
       << format_double(p.apl) << ',' << format_double(p.mlp_auc) << ',' << format_double(p.dt_auc) << ','
       << format_double(p.fidelity) << ',' << p.nodes << ',' << format_double(p.seconds) << ','
       << csv_field(p.status) << ',' << p.seed << ',' << p.split_hash << "\n";
  }
  return os.str();
}

inline std::vector<FitnessPoint> parse_fitness_csv(std::istream& in) {
  const auto t = parse_csv(in);
  std::vector<std::string> expect;
  {
    std::stringstream ss(kFitnessHeader);
    std::string tok;
    while (std::getline(ss, tok, ',')) expect.push_back(tok);
  }
  if (t.header != expect) throw SchemaError("fitness CSV header mismatch");
  std::vector<FitnessPoint> out;
  for (const auto& r : t.rows) {
    FitnessPoint p;
    p.lambda1 = std::stod(r[0]);
    p.lambda_orth = std::stod(r[1]);
    p.norm = r[2];
    p.apl = std::stod(r[3]);
    p.mlp_auc = std::stod(r[4]);
    p.dt_auc = std::stod(r[5]);
    p.fidelity = std::stod(r[6]);
    p.nodes = std::stoull(r[7]);
    p.seconds = std::stod(r[8]);
    p.status = r[9];
    p.seed = std::stoull(r[10]);
    p.split_hash = r[11];
    out.push_back(std::move(p));
  }
  return out;
}

// Sweeps.

struct SweepResult {
  /// Unregularized network on the same split and init seed.
  FitnessPoint baseline;
  /// One point per grid cell, in grid order.
  std::vector<FitnessPoint> points;

  double baseline_auc() const { return baseline.mlp_auc; }

  /// Baseline row first, then the grid.
  std::vector<FitnessPoint> rows() const {
    std::vector<FitnessPoint> r{baseline};
    r.insert(r.end(), points.begin(), points.end());
    return r;
  }
};

inline FitnessPoint run_cell(const PreparedData& data, const ExperimentConfig& cfg, const GridCell& cell) {
  FitnessPoint p;
  p.lambda1 = cell.lambda1;
  p.lambda_orth = cell.lambda_orth;
  p.norm = std::string(to_string(cell.norm));
  p.seed = cfg.train.seed;
  p.split_hash = hex64(data.split_hash());
  const auto reg = cell.spec(cfg.regularizer.ldd_jitter);
  try {
    std::optional<ExtractionResult> r;
    p.seconds = time_run([&] { r = train_and_extract(data, cfg.arch, cfg.train, reg, cfg.extract); });
    const auto m = evaluate(*r, data);
    p.apl = m.apl;
    p.mlp_auc = m.mlp_auc;
    p.dt_auc = m.dt_auc;
    p.fidelity = m.fidelity;
    p.nodes = m.nodes;
  } catch (const Error& e) {
    p.status = std::string("failed: ") + e.what();
    p.apl = p.mlp_auc = p.dt_auc = p.fidelity = std::numeric_limits<double>::quiet_NaN();
  }
  return p;
}

/// Runs `n` independent jobs on up to `jobs` threads; results keep index order.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, int jobs, F&& f) {
  std::vector<T> out(n);
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            out[i] = f(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// One train-and-extract per grid cell plus the unregularized baseline, all
/// from the same initialization seed and split.
inline SweepResult run_sweep(const PreparedData& data, const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.grid.empty()) throw ConfigError("sweep grid is empty");
  std::vector<GridCell> cells{GridCell{}};
  cells.insert(cells.end(), cfg.grid.begin(), cfg.grid.end());
  auto pts = parallel_map<FitnessPoint>(cells.size(), cfg.jobs,
                                        [&](std::size_t i) { return run_cell(data, cfg, cells[i]); });
  SweepResult r;
  r.baseline = std::move(pts.front());
  r.points.assign(std::make_move_iterator(pts.begin() + 1), std::make_move_iterator(pts.end()));
  return r;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  return run_sweep(prepare(load_dataset(cfg.dataset), cfg.split), cfg);
}

struct BestSelection {
  FitnessPoint point;
  /// False when no point reached the baseline AUC and the max-AUC point was taken instead.
  bool qualified = true;
};

/// Smallest-APL point whose network AUC reaches `baseline_auc` (ties: higher
/// fidelity, then smaller lambda1 + lambda_orth); failed points are ignored.
inline BestSelection select_best(const std::vector<FitnessPoint>& points, double baseline_auc) {
  std::vector<const FitnessPoint*> usable;
  for (const auto& p : points) {
    if (p.ok() && std::isfinite(p.mlp_auc)) usable.push_back(&p);
  }
  if (usable.empty()) throw InputError("select_best: no usable points");
  const FitnessPoint* best = nullptr;
  auto better = [](const FitnessPoint& a, const FitnessPoint& b) {
    if (a.apl != b.apl) return a.apl < b.apl;
    if (a.fidelity != b.fidelity) return a.fidelity > b.fidelity;
    return a.lambda1 + a.lambda_orth < b.lambda1 + b.lambda_orth;
  };
  for (const auto* p : usable) {
    if (p->mlp_auc >= baseline_auc && (!best || better(*p, *best))) best = p;
  }
  if (best) return {*best, true};
  for (const auto* p : usable) {
    if (!best || p->mlp_auc > best->mlp_auc) best = p;
  }
  return {*best, false};
}

/// Smallest APL among ok points whose performance (network AUC, or tree AUC
/// for standalone trees) is at least `min_auc`.
inline std::optional<double> min_qualifying_apl(const std::vector<FitnessPoint>& points, double min_auc,
                                                bool use_dt_auc = false) {
  std::optional<double> best;
  for (const auto& p : points) {
    const double perf = use_dt_auc ? p.dt_auc : p.mlp_auc;
    if (!p.ok() || !(perf >= min_auc)) continue;
    if (!best || p.apl < *best) best = p.apl;
  }
  return best;
}

// Repeated experiments.

struct FidelityExperiment {
  FidelityReport fidelity;
  FidelityReport fidelity_unpruned;
  std::vector<double> apl;
  std::vector<double> mlp_auc;
  std::vector<double> seconds;
};

/// Retrains and re-extracts with fixed regularization on `n_seeds` seeded
/// resplits (split seeds cfg.split.seed + i); any failed run aborts.
inline FidelityExperiment run_fidelity_experiment(const Dataset& dataset, const ExperimentConfig& cfg,
                                                  const RegularizerSpec& reg, int n_seeds = 5) {
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  struct Run {
    double fid = 0, fid_unpruned = 0, apl = 0, auc = 0, secs = 0;
  };
  auto runs = parallel_map<Run>(static_cast<std::size_t>(n_seeds), cfg.jobs, [&](std::size_t i) {
    SplitSpec s = cfg.split;
    s.seed = cfg.split.seed + i;
    const auto data = prepare(dataset, s);
    std::optional<ExtractionResult> r;
    Run run;
    run.secs = time_run([&] { r = train_and_extract(data, cfg.arch, cfg.train, reg, cfg.extract); });
    const auto m = evaluate(*r, data);
    run.fid = m.fidelity;
    run.fid_unpruned = m.fidelity_unpruned;
    run.apl = m.apl;
    run.auc = m.mlp_auc;
    return run;
  });
  FidelityExperiment e;
  std::vector<double> fid, fid_u;
  for (const auto& r : runs) {
    fid.push_back(r.fid);
    fid_u.push_back(r.fid_unpruned);
    e.apl.push_back(r.apl);
    e.mlp_auc.push_back(r.auc);
    e.seconds.push_back(r.secs);
  }
  e.fidelity = FidelityReport::from_runs(std::move(fid));
  e.fidelity_unpruned = FidelityReport::from_runs(std::move(fid_u));
  return e;
}

/// S trainings on one split with init seeds cfg.train.seed + s (all equal
/// when `identical_seeds`), one extraction each.
inline ConsistencyReport run_consistency_experiment(const PreparedData& data, const ExperimentConfig& cfg,
                                                    const RegularizerSpec& reg, int sessions = 10,
                                                    bool identical_seeds = false) {
  if (sessions < 2) throw InputError("consistency needs at least two sessions");
  auto results = parallel_map<std::optional<ExtractionResult>>(
      static_cast<std::size_t>(sessions), cfg.jobs, [&](std::size_t s) {
        TrainConfig t = cfg.train;
        if (!identical_seeds) t.seed = cfg.train.seed + s;
        return std::optional<ExtractionResult>(train_and_extract(data, cfg.arch, t, reg, cfg.extract));
      });
  std::vector<DecisionTree> trees;
  std::vector<double> fids;
  double apl_sum = 0.0;
  for (const auto& r : results) {
    const auto m = evaluate(*r, data);
    trees.push_back(r->tree);
    fids.push_back(m.fidelity);
    apl_sum += m.apl;
  }
  const Matrix& test = cfg.extract.features == TreeFeatures::raw ? data.test.x : data.test_std;
  ConsistencyReport rep;
  rep.consistency = consistency(trees, test);
  rep.n_sessions = sessions;
  rep.apl_mean = apl_sum / sessions;
  rep.fidelity = FidelityReport::from_runs(std::move(fids));
  return rep;
}

/// Trees fitted directly on the true labels for max_depth in {unbounded, 1..10},
/// pruned against the true validation labels when cfg.extract.prune.
inline std::vector<FitnessPoint> run_standalone_dt_baseline(const PreparedData& data, const ExperimentConfig& cfg,
                                                            std::vector<std::optional<int>> depths = {}) {
  if (depths.empty()) {
    depths.push_back(std::nullopt);
    for (int d = 1; d <= 10; ++d) depths.push_back(d);
  }
  std::vector<FitnessPoint> out;
  for (const auto& depth : depths) {
    FitnessPoint p;
    p.norm = depth ? "dt_depth_" + std::to_string(*depth) : "dt_depth_none";
    p.split_hash = hex64(data.split_hash());
    DtParams params = cfg.extract.dt;
    params.max_depth = depth;
    DecisionTree tree;
    p.seconds = time_run([&] {
      tree = fit_tree(data.train.x, data.train.y, data.n_classes(), params, data.train.feature_names,
                      data.train.class_names);
      if (cfg.extract.prune) tree = prune_tree(tree, data.val.x, data.val.y);
    });
    p.apl = apl(tree, data.train.x);
    try {
      p.dt_auc = auc(predict_tree_proba(tree, data.test.x), data.test.y);
    } catch (const UndefinedAucError&) {
    }
    p.nodes = tree.node_count();
    out.push_back(std::move(p));
  }
  return out;
}

// Text reports.

inline std::string pm(const FidelityReport& r) { return format_fixed(r.mean, 2) + " ± " + format_fixed(r.std, 2); }

struct FidelityRow {
  std::string dataset;
  std::string regularizer;
  FidelityReport report;
};

inline std::string fidelity_table(const std::vector<FidelityRow>& rows) {
  std::ostringstream os;
  os << "Fidelity of extracted trees (test split, mean ± std over runs)\n";
  os << "dataset                 | regularizer                     | fidelity\n";
  os << "------------------------+---------------------------------+------------\n";
  for (const auto& r : rows) {
    std::string d = r.dataset, g = r.regularizer;
    d.resize(std::max<std::size_t>(d.size(), 23), ' ');
    g.resize(std::max<std::size_t>(g.size(), 31), ' ');
    os << d << " | " << g << " | " << pm(r.report) << "\n";
  }
  return os.str();
}

struct ConsistencyRow {
  std::string dataset;
  RegularizerSpec reg;
  ConsistencyReport report;
};

inline std::string consistency_table(const std::vector<ConsistencyRow>& rows) {
  std::ostringstream os;
  os << "Consistency of extracted trees\n";
  os << "dataset                 | norm      | lambda1  | lambda_orth | APL    | consistency | fidelity\n";
  os << "------------------------+-----------+----------+-------------+--------+-------------+------------\n";
  for (const auto& r : rows) {
    std::string d = r.dataset, n(to_string(r.reg.ortho_norm));
    d.resize(std::max<std::size_t>(d.size(), 23), ' ');
    n.resize(std::max<std::size_t>(n.size(), 9), ' ');
    std::string l1 = format_double(r.reg.lambda1), lo = format_double(r.reg.lambda_orth);
    l1.resize(std::max<std::size_t>(l1.size(), 8), ' ');
    lo.resize(std::max<std::size_t>(lo.size(), 11), ' ');
    std::string a = format_fixed(r.report.apl_mean, 2);
    a.resize(std::max<std::size_t>(a.size(), 6), ' ');
    std::string c = format_fixed(r.report.consistency, 2);
    c.resize(std::max<std::size_t>(c.size(), 11), ' ');
    os << d << " | " << n << " | " << l1 << " | " << lo << " | " << a << " | " << c << " | " << pm(r.report.fidelity)
       << "\n";
  }
  return os.str();
}

}  // namespace l1o

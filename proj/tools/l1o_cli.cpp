// Command-line front end: toy data generation, training, extraction, sweeps
// and the fidelity / consistency / standalone-tree experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "l1o/l1o.hpp"

namespace fs = std::filesystem;
using namespace l1o;

namespace {

struct CommonOptions {
  std::string config;
  std::string dataset;
  std::string label;
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda1;
  std::optional<double> lambda_orth;
  std::optional<std::string> ortho_norm;
  std::optional<int> min_samples_leaf;
  std::optional<int> max_depth;
  bool no_prune = false;
  std::optional<int> jobs;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "JSON config file overlaid on the dataset preset");
  app->add_option("--dataset", o.dataset, "Preset name (parabola, iris, breast_cancer, pima, ...) or a CSV path");
  app->add_option("--label", o.label, "Label column when --dataset is a CSV path");
  app->add_option("--data-dir", o.data_dir, "Directory holding the preset CSV files");
  app->add_option("--out-dir", o.out_dir, "Output directory");
  app->add_option("--seed", o.seed, "Seed for the split, the initialization and generated data");
  app->add_option("--lambda1", o.lambda1, "L1 strength");
  app->add_option("--lambda-orth", o.lambda_orth, "Orthogonality strength");
  app->add_option("--ortho-norm", o.ortho_norm, "none, l1_norm (l1), frobenius (fn) or ldd");
  app->add_option("--min-samples-leaf", o.min_samples_leaf, "Minimum training rows per leaf");
  app->add_option("--max-depth", o.max_depth, "Maximum tree depth");
  app->add_flag("--no-prune", o.no_prune, "Skip reduced-error pruning");
  app->add_option("--jobs", o.jobs, "Worker threads for independent runs");
}

bool looks_like_path(const std::string& s) {
  return s.find('/') != std::string::npos || s.ends_with(".csv") || fs::exists(s);
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig c;
  if (!o.dataset.empty() && !looks_like_path(o.dataset)) {
    c = preset(o.dataset, o.data_dir);
  } else {
    c.arch.hidden_sizes = {16};
    c.grid = make_grid(GridKind::l1o);
    if (!o.dataset.empty()) {
      if (o.label.empty()) throw ConfigError("--label is required when --dataset is a CSV path");
      c.dataset.kind = "csv";
      c.dataset.path = o.dataset;
      c.dataset.label_column = o.label;
    }
  }
  if (!o.config.empty()) c = config_from_json(read_json(o.config), c);
  if (c.dataset.kind == "csv" && c.dataset.path.empty()) {
    throw ConfigError("no dataset given (use --dataset or a config with a \"dataset\" entry)");
  }
  if (o.seed) {
    c.split.seed = *o.seed;
    c.train.seed = *o.seed;
    c.dataset.seed = *o.seed;
  }
  if (o.lambda1) c.regularizer.lambda1 = *o.lambda1;
  if (o.lambda_orth) c.regularizer.lambda_orth = *o.lambda_orth;
  if (o.ortho_norm) c.regularizer.ortho_norm = parse_ortho_norm(*o.ortho_norm);
  if (o.lambda_orth && *o.lambda_orth > 0.0 && !o.ortho_norm && c.regularizer.ortho_norm == OrthoNorm::none) {
    c.regularizer.ortho_norm = OrthoNorm::l1_norm;
  }
  if (o.min_samples_leaf) c.extract.dt.min_samples_leaf = *o.min_samples_leaf;
  if (o.max_depth) c.extract.dt.max_depth = *o.max_depth;
  if (o.no_prune) c.extract.prune = false;
  if (o.jobs) c.jobs = *o.jobs;
  c.validate();
  return c;
}

fs::path out_dir(const CommonOptions& o) {
  fs::create_directories(o.out_dir);
  return o.out_dir;
}

void write_config(const fs::path& dir, const ExperimentConfig& c) {
  write_text(dir / "config.json", config_to_json(c).dump(2) + "\n");
}

std::string describe(const RegularizerSpec& r) {
  std::ostringstream os;
  os << "lambda1=" << format_double(r.lambda1) << " lambda_orth=" << format_double(r.lambda_orth)
     << " norm=" << to_string(r.ortho_norm);
  return os.str();
}

std::string history_csv(const TrainHistory& h) {
  std::ostringstream os;
  os << "epoch,data_loss,penalty,objective,train_accuracy\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    os << i + 1 << ',' << format_double(h[i].data_loss) << ',' << format_double(h[i].penalty) << ','
       << format_double(h[i].objective) << ',' << format_double(h[i].train_accuracy) << "\n";
  }
  return os.str();
}

int cmd_gen_toy(const CommonOptions& o, std::size_t n, double flip, const std::string& mode) {
  const FlipMode m = mode == "band" ? FlipMode::band_fraction
                     : mode == "total" ? FlipMode::total_fraction
                                       : throw ConfigError("--flip-mode must be 'band' or 'total'");
  const auto d = generate_parabola(n, o.seed.value_or(0), flip, m);
  const auto dir = out_dir(o);
  std::ostringstream os;
  os << "x0,x1,label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << format_double(d.x(r, 0)) << ',' << format_double(d.x(r, 1)) << ',' << d.class_names[d.y[i]] << "\n";
  }
  write_text(dir / "parabola.csv", os.str());
  write_text(dir / "parabola_manifest.json", d.manifest.dump(2) + "\n");
  std::cout << "wrote " << d.size() << " points (" << d.manifest.at("flipped").size() << " flipped) to "
            << (dir / "parabola.csv").string() << "\n";
  return 0;
}

int cmd_train(const CommonOptions& o) {
  const auto c = resolve(o);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  MlpArchitecture a = c.arch;
  a.input_dim = data.n_features();
  a.n_classes = data.n_classes();
  const auto r = train(data.train_std, data.train.y, a, c.train, c.regularizer);
  const auto dir = out_dir(o);
  write_text(dir / "model.json", model_to_json(r.model).dump(2) + "\n");
  write_text(dir / "history.csv", history_csv(r.history));
  write_text(dir / "dataset_manifest.json", dataset_manifest(data).dump(2) + "\n");
  write_config(dir, c);
  const auto test_pred = predict(r.model, data.test_std);
  std::cout << "trained " << describe(c.regularizer) << "\n"
            << "test accuracy " << format_fixed(accuracy(test_pred, data.test.y), 4) << "\n";
  return 0;
}

int cmd_extract(const CommonOptions& o) {
  const auto c = resolve(o);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  std::optional<ExtractionResult> r;
  const double secs = time_run([&] { r = train_and_extract(data, c.arch, c.train, c.regularizer, c.extract); });
  const auto dir = out_dir(o);
  save_extraction(*r, dir, &data);
  write_text(dir / "history.csv", history_csv(r->history));
  write_config(dir, c);
  const auto m = evaluate(*r, data);
  std::cout << "extracted " << describe(c.regularizer) << "\n"
            << "apl " << format_fixed(m.apl, 3) << "  nodes " << m.nodes << "  fidelity " << format_fixed(m.fidelity, 4)
            << "  mlp_auc " << format_fixed(m.mlp_auc, 4) << "  dt_auc " << format_fixed(m.dt_auc, 4) << "  seconds "
            << format_fixed(secs, 3) << "\n";
  return 0;
}

int cmd_sweep(const CommonOptions& o) {
  const auto c = resolve(o);
  const auto r = run_sweep(c);
  const auto dir = out_dir(o);
  write_text(dir / "fitness.csv", fitness_csv(r.rows()));
  const auto best = select_best(r.points, r.baseline_auc());
  nlohmann::json jb{{"lambda1", best.point.lambda1},
                    {"lambda_orth", best.point.lambda_orth},
                    {"ortho_norm", best.point.norm},
                    {"apl", best.point.apl},
                    {"mlp_auc", best.point.mlp_auc},
                    {"fidelity", best.point.fidelity},
                    {"baseline_auc", r.baseline_auc()},
                    {"qualified", best.qualified}};
  write_text(dir / "best.json", jb.dump(2) + "\n");
  write_config(dir, c);
  std::size_t failed = 0;
  for (const auto& p : r.points) failed += !p.ok();
  std::cout << r.points.size() << " cells (" << failed << " failed), baseline auc "
            << format_fixed(r.baseline_auc(), 4) << "\n"
            << (best.qualified ? "best" : "best (no point reached the baseline)") << ": lambda1 "
            << format_double(best.point.lambda1) << " lambda_orth " << format_double(best.point.lambda_orth) << " apl "
            << format_fixed(best.point.apl, 3) << " auc " << format_fixed(best.point.mlp_auc, 4) << "\n";
  return 0;
}

RegularizerSpec best_from_csv(const std::string& path, double jitter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  const auto rows = parse_fitness_csv(in);
  if (rows.size() < 2) throw InputError(path + ": need a baseline row and at least one grid row");
  const std::vector<FitnessPoint> grid(rows.begin() + 1, rows.end());
  const auto best = select_best(grid, rows.front().mlp_auc);
  return {best.point.lambda1, best.point.lambda_orth, parse_ortho_norm(best.point.norm), jitter, {}};
}

int cmd_fidelity(const CommonOptions& o, int runs, const std::string& from_sweep, const std::string& name) {
  auto c = resolve(o);
  const RegularizerSpec reg = from_sweep.empty() ? c.regularizer : best_from_csv(from_sweep, c.regularizer.ldd_jitter);
  const auto e = run_fidelity_experiment(load_dataset(c.dataset), c, reg, runs);
  const auto dir = out_dir(o);
  nlohmann::json j{{"regularizer", reg},
                   {"fidelity", e.fidelity},
                   {"fidelity_unpruned", e.fidelity_unpruned},
                   {"apl", e.apl},
                   {"mlp_auc", e.mlp_auc},
                   {"seconds", e.seconds}};
  write_text(dir / "fidelity.json", j.dump(2) + "\n");
  const auto table = fidelity_table({{name.empty() ? o.dataset : name, describe(reg), e.fidelity}});
  write_text(dir / "fidelity.txt", table);
  write_config(dir, c);
  std::cout << table;
  return 0;
}

int cmd_consistency(const CommonOptions& o, int sessions, bool identical, const std::string& name) {
  const auto c = resolve(o);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  const auto r = run_consistency_experiment(data, c, c.regularizer, sessions, identical);
  const auto dir = out_dir(o);
  nlohmann::json j = r;
  j["regularizer"] = c.regularizer;
  write_text(dir / "consistency.json", j.dump(2) + "\n");
  const auto table = consistency_table({{name.empty() ? o.dataset : name, c.regularizer, r}});
  write_text(dir / "consistency.txt", table);
  write_config(dir, c);
  std::cout << table;
  return 0;
}

int cmd_baseline_dt(const CommonOptions& o) {
  const auto c = resolve(o);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  const auto pts = run_standalone_dt_baseline(data, c);
  const auto dir = out_dir(o);
  write_text(dir / "baseline_dt.csv", fitness_csv(pts));
  write_config(dir, c);
  for (const auto& p : pts) {
    std::cout << p.norm << ": apl " << format_fixed(p.apl, 3) << " dt_auc " << format_fixed(p.dt_auc, 4) << " nodes "
              << p.nodes << "\n";
  }
  return 0;
}

int cmd_export(const CommonOptions& o, const std::string& model_dir, const std::string& tree_file) {
  fs::path tree_path = tree_file;
  if (tree_path.empty()) {
    if (model_dir.empty()) throw ConfigError("export needs --model-dir or --tree");
    tree_path = fs::path(model_dir) / "tree.json";
  }
  const auto tree = tree_from_json(read_json(tree_path));
  const auto dir = out_dir(o);
  write_text(dir / "tree.dot", export_dot(tree, tree.feature_names));
  write_text(dir / "rules.txt", export_rules(tree, tree.feature_names));
  std::cout << "exported " << tree.node_count() << " nodes to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized network-to-decision-tree extraction"};
  app.require_subcommand(1);
  CommonOptions o;

  auto* gen = app.add_subcommand("gen-toy", "Generate the 2D parabola dataset as CSV");
  std::size_t n = 500;
  double flip = 0.10;
  std::string flip_mode = "band";
  gen->add_option("--n", n, "Number of points");
  gen->add_option("--flip-fraction", flip, "Share of points to flip");
  gen->add_option("--flip-mode", flip_mode, "band: share of band points; total: share of all points");
  gen->add_option("--out-dir", o.out_dir, "Output directory");
  gen->add_option("--seed", o.seed, "Generator seed");

  auto* tr = app.add_subcommand("train", "Train a network and save it");
  add_common(tr, o);
  auto* ex = app.add_subcommand("extract", "Train a network and extract a decision tree");
  add_common(ex, o);
  auto* sw = app.add_subcommand("sweep", "Regularization sweep; writes fitness.csv");
  add_common(sw, o);

  auto* fi = app.add_subcommand("fidelity", "Fidelity over repeated seeded splits");
  add_common(fi, o);
  int runs = 5;
  std::string from_sweep, name;
  fi->add_option("--runs", runs, "Number of seeded resplits");
  fi->add_option("--from-sweep", from_sweep, "Take the best regularization from this fitness.csv");
  fi->add_option("--name", name, "Dataset label for the report");

  auto* co = app.add_subcommand("consistency", "Agreement of trees from independently initialized networks");
  add_common(co, o);
  int sessions = 10;
  bool identical = false;
  co->add_option("--sessions", sessions, "Number of trainings");
  co->add_flag("--identical-seeds", identical, "Use one initialization seed for every session");
  co->add_option("--name", name, "Dataset label for the report");

  auto* bd = app.add_subcommand("baseline-dt", "Trees fitted directly on the labels over max_depth 1..10 and unbounded");
  add_common(bd, o);

  auto* exp = app.add_subcommand("export", "Write DOT and rules files for a saved tree");
  std::string model_dir, tree_file;
  exp->add_option("--model-dir", model_dir, "Directory written by extract");
  exp->add_option("--tree", tree_file, "Path to a tree.json");
  exp->add_option("--out-dir", o.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen_toy(o, n, flip, flip_mode);
    if (tr->parsed()) return cmd_train(o);
    if (ex->parsed()) return cmd_extract(o);
    if (sw->parsed()) return cmd_sweep(o);
    if (fi->parsed()) return cmd_fidelity(o, runs, from_sweep, name);
    if (co->parsed()) return cmd_consistency(o, sessions, identical, name);
    if (bd->parsed()) return cmd_baseline_dt(o);
    if (exp->parsed()) return cmd_export(o, model_dir, tree_file);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "l1o/l1o.hpp"
#include "oracles.hpp"

using namespace l1o;

namespace {

const std::string kData = L1O_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fx(double v, int d = 4) { return format_fixed(v, d); }

// 1. Analytic gradients against central differences.
Outcome gradients() {
  std::mt19937_64 g(2024);
  std::uniform_int_distribution<int> dim(1, 6);
  double worst = 0.0;
  int points = 0;
  const std::vector<std::pair<std::string, RegularizerSpec>> penalties{
      {"l1", RegularizerSpec::l1(0.7)},
      {"ortho_l1", RegularizerSpec::l1o(0.0, 1.3, OrthoNorm::l1_norm)},
      {"frobenius", RegularizerSpec::l1o(0.0, 1.3, OrthoNorm::frobenius)},
      {"ldd", RegularizerSpec::l1o(0.0, 1.3, OrthoNorm::ldd)}};
  std::ostringstream per;
  for (const auto& [name, spec] : penalties) {
    double w_err = 0.0;
    for (int i = 0; i < 60; ++i) {
      Eigen::Index r = dim(g), c = dim(g);
      if (spec.ortho_norm == OrthoNorm::ldd && c > r) std::swap(r, c);
      Matrix w;
      do {
        w = oracle::random_matrix(g, r, c, 0.8);
      } while (!((gram_deviation(w).array().abs() > 1e-3).all() && (w.array().abs() > 1e-3).all()));
      const auto f = [&](const Matrix& m) { return penalty({m}, spec); };
      w_err = std::max(w_err, oracle::max_rel_error(penalty_subgradient({w}, spec)[0], oracle::numeric_gradient(f, w)));
      ++points;
    }
    per << name << "=" << std::scientific << w_err << std::defaultfloat << " ";
    worst = std::max(worst, w_err);
  }
  // Composite objective: mean cross-entropy plus L1-O penalty through the network.
  double comp = 0.0;
  for (int i = 0; i < 60; ++i) {
    const int classes = 2 + i % 2;
    auto m = init_model({3, {4, 3}, classes}, static_cast<std::uint64_t>(i));
    for (auto& b : m.biases) b = oracle::random_matrix(g, 1, b.size(), 0.3);
    const Matrix x = oracle::random_matrix(g, 12, 3);
    const auto y = oracle::random_labels(g, 12, classes);
    const auto reg = RegularizerSpec::l1o(0.01, 0.1, i % 3 == 0 ? OrthoNorm::frobenius : OrthoNorm::l1_norm);
    const auto grad = backward(m, x, y, reg);
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      const auto f = [&](const Matrix& w) {
        MlpModel t = m;
        t.weights[l] = w;
        return data_loss(forward(t, x).probs(), y) + penalty(t.weights, reg);
      };
      comp = std::max(comp, oracle::max_rel_error(grad.weights[l], oracle::numeric_gradient(f, m.weights[l])));
    }
    ++points;
  }
  per << "composite=" << std::scientific << comp;
  worst = std::max(worst, comp);
  return {worst < 1e-4, std::to_string(points) + " points, max rel err " + per.str() + " (< 1e-4)"};
}

// 2. CART splits equal the exhaustive minimum; constraints hold.
Outcome cart_oracle() {
  std::mt19937_64 g(7);
  std::uniform_int_distribution<int> rows(1, 20), feats(1, 3), classes(2, 3), msl(1, 4), depth(1, 5);
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rows(g), d = feats(g), k = classes(g);
    const Matrix x = oracle::random_grid_features(g, n, d);
    const auto y = oracle::random_labels(g, static_cast<std::size_t>(n), k);
    DtParams p{msl(g), std::nullopt};
    if (trial % 2) p.max_depth = depth(g);
    const auto t = fit_tree(x, y, k, p);
    if (!oracle::check_cart(t, x, y, k, p.min_samples_leaf, p.max_depth.value_or(1 << 20)).empty()) ++bad;
  }
  return {bad == 0, "200 random datasets, " + std::to_string(bad) + " with a non-optimal split or violated constraint"};
}

// 3. APL against recursive path counting.
Outcome apl_oracle() {
  std::mt19937_64 g(11);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const auto t = oracle::random_tree(g, 3, 3, 6);
    const Matrix x = oracle::random_grid_features(g, 30, 3);
    if (apl(t, x) != oracle::apl(t, x)) ++bad;
  }
  Matrix x(4, 1);
  x << 0, 1, 2, 3;
  const auto leaf = fit_tree(x, {1, 1, 1, 1}, 2, {});
  const auto stump = fit_tree(x, {0, 0, 1, 1}, 2, {});
  const double a0 = apl(leaf, x), a1 = apl(stump, x);
  return {bad == 0 && a0 == 0.0 && a1 == 1.0,
          "100 pairs, " + std::to_string(bad) + " mismatches; single leaf " + fx(a0, 1) + ", one test node " + fx(a1, 1)};
}

// 4. Parabola pipeline at the table settings.
Outcome parabola() {
  const auto cfg = preset("parabola");
  const auto dataset = load_dataset(cfg.dataset);
  const auto data = prepare(dataset, cfg.split);
  std::optional<ExtractionResult> plain;
  const double t_plain = time_run([&] {
    plain = train_and_extract(data, cfg.arch, cfg.train, RegularizerSpec::none(), cfg.extract);
  });
  const auto m = evaluate(*plain, data);
  const bool plain_ok = std::abs(m.fidelity - 0.96) <= 0.05;

  // Best-model protocol on a reduced grid at the low end of the ranges.
  auto sweep_cfg = cfg;
  sweep_cfg.grid = make_grid(GridKind::l1o, 2, 2, kLambda1Min, 0.01, kLambdaOrthMin, 0.01);
  const auto sweep = run_sweep(data, sweep_cfg);
  const auto best = select_best(sweep.points, sweep.baseline_auc());
  const RegularizerSpec reg{best.point.lambda1, best.point.lambda_orth, OrthoNorm::l1_norm};
  const auto e = run_fidelity_experiment(dataset, cfg, reg, 5);
  double worst_secs = t_plain;
  for (double s : e.seconds) worst_secs = std::max(worst_secs, s);
  double apl_mean = 0.0, auc_mean = 0.0;
  for (std::size_t i = 0; i < e.apl.size(); ++i) {
    apl_mean += e.apl[i] / e.apl.size();
    auc_mean += e.mlp_auc[i] / e.mlp_auc.size();
  }
  const bool ok = plain_ok && e.fidelity.mean >= 0.90 && worst_secs <= 600.0;
  return {ok, "unregularized fidelity " + fx(m.fidelity) + " (target 0.96 +- 0.05, apl " + fx(m.apl, 2) +
                  "); L1-O lambda1=" + format_double(reg.lambda1) + " lambda_orth=" + format_double(reg.lambda_orth) +
                  (best.qualified ? "" : " [no grid point reached baseline auc " + fx(sweep.baseline_auc()) + "]") +
                  " fidelity " + pm(e.fidelity) + " (>= 0.90), apl " + fx(apl_mean, 2) + ", mlp auc " +
                  fx(auc_mean) + "; slowest run " + fx(worst_secs, 1) + " s"};
}

struct BestModelRun {
  FitnessPoint best;
  bool qualified = false;
  FidelityExperiment experiment;
  double seconds = 0.0;
};

BestModelRun best_model_protocol(const std::string& name) {
  const auto cfg = preset(name, kData);
  const auto dataset = load_dataset(cfg.dataset);
  BestModelRun r;
  r.seconds = time_run([&] {
    const auto sweep = run_sweep(prepare(dataset, cfg.split), cfg);
    const auto b = select_best(sweep.points, sweep.baseline_auc());
    r.best = b.point;
    r.qualified = b.qualified;
    r.experiment =
        run_fidelity_experiment(dataset, cfg, {b.point.lambda1, b.point.lambda_orth, OrthoNorm::l1_norm}, 5);
  });
  return r;
}

std::string describe_best(const BestModelRun& r) {
  return "best lambda1=" + format_double(r.best.lambda1) + " lambda_orth=" + format_double(r.best.lambda_orth) +
         (r.qualified ? "" : " [fallback]") + ", fidelity " + pm(r.experiment.fidelity);
}

// 5. Iris best-model fidelity and complexity.
Outcome iris_fidelity() {
  const auto r = best_model_protocol("iris");
  double max_apl = 0.0, max_secs = 0.0;
  for (double a : r.experiment.apl) max_apl = std::max(max_apl, a);
  for (double s : r.experiment.seconds) max_secs = std::max(max_secs, s);
  const bool ok = r.experiment.fidelity.mean >= 0.94 && max_apl <= 4.0 && max_secs < 60.0;
  return {ok, describe_best(r) + " (>= 0.94), max apl " + fx(max_apl, 2) + " (<= 4), slowest run " + fx(max_secs, 2) +
                  " s"};
}

// 6. Breast cancer best-model fidelity.
Outcome bcw_fidelity() {
  const auto r = best_model_protocol("breast_cancer");
  const bool ok = r.experiment.fidelity.mean >= 0.90 && r.seconds < 300.0;
  return {ok, describe_best(r) + " (>= 0.90), total " + fx(r.seconds, 1) + " s"};
}

// 7. Minimum qualifying APL: L1-O against L1-only and standalone trees.
Outcome complexity_reduction() {
  bool ok = true;
  std::string detail;
  const auto show = [](const std::optional<double>& v) { return v ? fx(*v, 3) : std::string("none"); };
  for (const std::string name : {"iris", "pima"}) {
    const auto cfg = preset(name, kData);
    const auto data = prepare(load_dataset(cfg.dataset), cfg.split);
    const auto l1o_sweep = run_sweep(data, cfg);
    auto l1_cfg = cfg;
    l1_cfg.grid = make_grid(GridKind::l1);
    const auto l1_sweep = run_sweep(data, l1_cfg);
    const auto dt = run_standalone_dt_baseline(data, cfg);
    const double target = l1o_sweep.baseline_auc() - 0.02;
    const auto a = min_qualifying_apl(l1o_sweep.points, target);
    const auto b = min_qualifying_apl(l1_sweep.points, target);
    const auto c = min_qualifying_apl(dt, target, true);
    // A family with no qualifying point imposes no bound.
    const double inf = std::numeric_limits<double>::infinity();
    const bool pass = a && *a <= b.value_or(inf) && *a <= c.value_or(inf);
    ok = ok && pass;
    detail += name + ": target auc " + fx(target) + ", min apl L1-O " + show(a) + " / L1 " + show(b) + " / DT " +
              show(c) + "; ";
  }
  return {ok, detail};
}

// 8. The penalties actually shape the trained weights.
Outcome regularization_effect() {
  const auto cfg = preset("iris", kData);
  const auto data = prepare(load_dataset(cfg.dataset), cfg.split);
  MlpArchitecture a = cfg.arch;
  a.input_dim = data.n_features();
  a.n_classes = data.n_classes();
  const auto plain = train(data.train_std, data.train.y, a, cfg.train, RegularizerSpec::none()).model;
  const auto orth = train(data.train_std, data.train.y, a, cfg.train, RegularizerSpec::l1o(0.001, 0.5)).model;
  const auto l1 = train(data.train_std, data.train.y, a, cfg.train, RegularizerSpec::l1(0.01)).model;
  const double o_plain = ortho_penalty_l1(plain.weights), o_reg = ortho_penalty_l1(orth.weights);
  const double l_plain = l1_penalty(plain.weights), l_reg = l1_penalty(l1.weights);
  return {o_reg < 0.5 * o_plain && l_reg < l_plain,
          "ortho penalty " + fx(o_reg, 3) + " vs unregularized " + fx(o_plain, 3) + " (< 50%); L1 penalty " +
              fx(l_reg, 3) + " vs " + fx(l_plain, 3)};
}

// 9. Consistency fixtures.
Outcome consistency_suite() {
  const auto cfg = preset("iris", kData);
  const auto data = prepare(load_dataset(cfg.dataset), cfg.split);
  const double same = run_consistency_experiment(data, cfg, RegularizerSpec::l1o(0.01, 0.1), 5, true).consistency;

  std::vector<DecisionTree> constant_trees;
  for (int s = 0; s < 4; ++s) {
    auto m = init_model({data.n_features(), {8}, data.n_classes()}, static_cast<std::uint64_t>(s));
    for (auto& w : m.weights) w.setZero();
    constant_trees.push_back(extract(m, data, {}).tree);
  }
  const double constant = consistency(constant_trees, data.test.x);

  Matrix x(10, 1);
  for (int i = 0; i < 10; ++i) x(i, 0) = i;
  std::vector<DecisionTree> trio;
  for (double thr : {5.5, 7.5, 4.5}) {
    Labels y(10);
    for (int i = 0; i < 10; ++i) y[static_cast<std::size_t>(i)] = i > thr;
    trio.push_back(fit_tree(x, y, 2, {}));
  }
  const double fixture = consistency(trio, x);
  return {same == 1.0 && constant == 1.0 && fixture == 0.7,
          "identical seeds " + fx(same, 2) + ", constant models " + fx(constant, 2) + ", 3-tree fixture " +
              fx(fixture, 2)};
}

// 10. Pruning never lowers validation fidelity nor grows the tree.
Outcome pruning_contract() {
  std::mt19937_64 g(99);
  std::uniform_int_distribution<int> width(2, 12), feats(1, 4), classes(2, 4), msl(1, 3);
  int bad = 0, shrunk = 0;
  for (int i = 0; i < 100; ++i) {
    const int d = feats(g), k = classes(g);
    const auto m = init_model({d, {width(g), width(g)}, k}, static_cast<std::uint64_t>(i));
    const Matrix tr = oracle::random_matrix(g, 80, d), va = oracle::random_matrix(g, 30, d);
    ExtractOptions opt;
    opt.dt.min_samples_leaf = msl(g);
    const auto r = extract(m, {tr, tr}, {va, va}, opt);
    const auto target = predict(m, va);
    const double fp = agreement(predict_tree(r.tree, va), target);
    const double fu = agreement(predict_tree(r.unpruned_tree, va), target);
    if (fp < fu || r.tree.node_count() > r.unpruned_tree.node_count()) ++bad;
    shrunk += r.tree.node_count() < r.unpruned_tree.node_count();
  }
  return {bad == 0, "100 random extractions, " + std::to_string(bad) + " violations, " + std::to_string(shrunk) +
                        " pruned smaller"};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Drops the seconds column (index 8) of a fitness CSV.
std::string without_seconds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() > 8) f.erase(f.begin() + 8);
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += "\n";
  }
  return out;
}

// 11. Two CLI sweeps with one config produce the same CSV.
Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "l1o_acceptance_sweep";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  const auto cfg_path = root / "config.json";
  write_text(cfg_path, R"({"grid": {"kind": "l1o", "n_lambda1": 3, "n_lambda_orth": 3}, "jobs": 2})");
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = root / ("run" + std::to_string(i));
    const std::string cmd = std::string("\"") + L1O_CLI_PATH + "\" sweep --dataset iris --data-dir \"" + kData +
                            "\" --config \"" + cfg_path.string() + "\" --out-dir \"" + out.string() + "\" > \"" +
                            (root / "log.txt").string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "sweep command failed: " + read_file(root / "log.txt")};
    csv[i] = read_file(out / "fitness.csv");
  }
  const bool header = csv[0].rfind("lambda1,lambda_orth,norm,apl,mlp_auc,dt_auc,fidelity,nodes,seconds", 0) == 0;
  const auto a = without_seconds(csv[0]), b = without_seconds(csv[1]);
  const auto lines = std::count(a.begin(), a.end(), '\n');
  std::filesystem::remove_all(root);
  return {header && a == b && lines == 11,
          std::to_string(lines) + " lines, identical without seconds: " + (a == b ? "yes" : "no")};
}

// 12. LDD singularity.
Outcome ldd_failure() {
  Matrix w(4, 3);
  w << 1, 1, 0.5, 2, 2, -1, 0, 0, 3, 1, 1, 0;
  bool raised = false;
  try {
    penalty({w}, {0.0, 1.0, OrthoNorm::ldd, 0.0, {}});
  } catch (const SingularityError&) {
    raised = true;
  }
  const double v = penalty({w}, RegularizerSpec::l1o(0.0, 1.0, OrthoNorm::ldd));
  return {raised && std::isfinite(v),
          std::string("jitter 0 raises: ") + (raised ? "yes" : "no") + ", default jitter value " + fx(v, 3)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradients},
      {"CART oracle equivalence", cart_oracle},
      {"APL oracle", apl_oracle},
      {"2D-parabola pipeline", parabola},
      {"Iris fidelity", iris_fidelity},
      {"Breast Cancer Wisconsin fidelity", bcw_fidelity},
      {"complexity reduction", complexity_reduction},
      {"regularization effect", regularization_effect},
      {"consistency suite", consistency_suite},
      {"pruning contract", pruning_contract},
      {"sweep determinism", determinism},
      {"LDD failure mode", ldd_failure},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    double secs = 0.0;
    try {
      secs = time_run([&] { o = criteria[i].second(); });
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": " << o.detail << " ["
              << format_fixed(secs, 1) << " s]" << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

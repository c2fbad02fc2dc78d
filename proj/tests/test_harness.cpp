#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "l1o/harness.hpp"

using namespace l1o;

namespace {

const std::string kData = L1O_DATA_DIR;

FitnessPoint pt(double apl, double auc, double fid = 1.0, double l1 = 0.01, double lo = 0.01) {
  FitnessPoint p;
  p.apl = apl;
  p.mlp_auc = auc;
  p.fidelity = fid;
  p.lambda1 = l1;
  p.lambda_orth = lo;
  return p;
}

ExperimentConfig small_iris() {
  auto c = preset("iris", kData);
  c.grid = make_grid(GridKind::l1o, 2, 2);
  return c;
}

}  // namespace

TEST(SelectBest, FilterThenMinimum) {
  const auto b = select_best({pt(2, 0.8), pt(5, 0.95)}, 0.9);
  EXPECT_TRUE(b.qualified);
  EXPECT_EQ(b.point.apl, 5);
}

TEST(SelectBest, FallbackToMaxAuc) {
  const auto b = select_best({pt(2, 0.8), pt(5, 0.85)}, 0.9);
  EXPECT_FALSE(b.qualified);
  EXPECT_EQ(b.point.mlp_auc, 0.85);
}

TEST(SelectBest, TieBreaks) {
  EXPECT_EQ(select_best({pt(3, 0.95, 0.9), pt(3, 0.95, 0.97)}, 0.9).point.fidelity, 0.97);
  EXPECT_EQ(select_best({pt(3, 0.95, 0.9, 0.1, 1.0), pt(3, 0.95, 0.9, 0.01, 0.1)}, 0.9).point.lambda1, 0.01);
}

TEST(SelectBest, IgnoresFailedAndRejectsEmpty) {
  auto failed = pt(0, 0.99);
  failed.status = "failed: diverged";
  EXPECT_EQ(select_best({failed, pt(4, 0.95)}, 0.9).point.apl, 4);
  EXPECT_THROW(select_best({}, 0.9), InputError);
  EXPECT_THROW(select_best({failed}, 0.9), InputError);
}

TEST(MinQualifyingApl, UsesChosenAxis) {
  auto a = pt(1, 0.5);
  a.dt_auc = 0.95;
  const std::vector<FitnessPoint> pts{a, pt(3, 0.95)};
  EXPECT_EQ(*min_qualifying_apl(pts, 0.9), 3);
  EXPECT_EQ(*min_qualifying_apl(pts, 0.9, true), 1);
  EXPECT_FALSE(min_qualifying_apl(pts, 0.99).has_value());
}

TEST(Grid, DefaultShapeAndRanges) {
  const auto g = make_grid(GridKind::l1o);
  ASSERT_EQ(g.size(), 36u);
  EXPECT_DOUBLE_EQ(g.front().lambda1, kLambda1Min);
  EXPECT_DOUBLE_EQ(g.front().lambda_orth, kLambdaOrthMin);
  EXPECT_NEAR(g.back().lambda1, kLambda1Max, 1e-15);
  EXPECT_NEAR(g.back().lambda_orth, kLambdaOrthMax, 1e-12);
  EXPECT_EQ(make_grid(GridKind::l1).size(), 6u);
  EXPECT_EQ(make_grid(GridKind::l1).front().norm, OrthoNorm::none);
}

TEST(Config, OverlayAndValidation) {
  const auto base = preset("iris", kData);
  const auto c = config_from_json(nlohmann::json::parse(R"({"train": {"epochs": 3}, "grid": {"kind": "l1", "n_lambda1": 4}})"), base);
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.train.batch_size, base.train.batch_size);
  EXPECT_EQ(c.grid.size(), 4u);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"train": {"epochs": -1}})"), base), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"jobs": 0})"), base), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"dataset": {"kind": "xyz"}})"), base), ConfigError);
  EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  const auto c = small_iris();
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Sweep, SingleNoneCellMatchesBaseline) {
  auto c = small_iris();
  c.grid = {GridCell{}};
  const auto r = run_sweep(c);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_EQ(r.points[0].mlp_auc, r.baseline_auc());
  EXPECT_EQ(r.points[0].apl, r.baseline.apl);
}

TEST(Sweep, CsvRowsProvenanceAndDeterminism) {
  const auto c = small_iris();
  const auto a = run_sweep(c), b = run_sweep(c);
  const auto rows_a = a.rows(), rows_b = b.rows();
  ASSERT_EQ(rows_a.size(), c.grid.size() + 1);
  for (std::size_t i = 0; i < rows_a.size(); ++i) {
    EXPECT_EQ(rows_a[i].apl, rows_b[i].apl);
    EXPECT_EQ(rows_a[i].mlp_auc, rows_b[i].mlp_auc);
    EXPECT_EQ(rows_a[i].fidelity, rows_b[i].fidelity);
    EXPECT_FALSE(rows_a[i].split_hash.empty());
  }
  const std::string text = fitness_csv(rows_a);
  EXPECT_EQ(text.rfind("lambda1,lambda_orth,norm,apl,mlp_auc,dt_auc,fidelity,nodes,seconds", 0), 0u);
  std::istringstream in(text);
  const auto parsed = parse_fitness_csv(in);
  ASSERT_EQ(parsed.size(), rows_a.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].apl, rows_a[i].apl);
    EXPECT_EQ(parsed[i].mlp_auc, rows_a[i].mlp_auc);
    EXPECT_EQ(parsed[i].split_hash, rows_a[i].split_hash);
  }
  // Selection is a pure function of the CSV.
  EXPECT_EQ(select_best(parsed, parsed[0].mlp_auc).point.apl, select_best(rows_a, a.baseline_auc()).point.apl);
}

TEST(Sweep, ParallelMatchesSerial) {
  auto c = small_iris();
  const auto serial = run_sweep(c);
  c.jobs = 3;
  const auto par = run_sweep(c);
  for (std::size_t i = 0; i < serial.points.size(); ++i) {
    EXPECT_EQ(serial.points[i].apl, par.points[i].apl);
    EXPECT_EQ(serial.points[i].fidelity, par.points[i].fidelity);
  }
}

TEST(Sweep, IrisHasSimpleAccuratePoint) {
  auto c = preset("iris", kData);
  c.grid = make_grid(GridKind::l1o, 3, 4);
  const auto r = run_sweep(c);
  bool found = false;
  for (const auto& p : r.points) found = found || (p.apl <= 3.0 && p.mlp_auc >= r.baseline_auc() - 0.02);
  EXPECT_TRUE(found);
}

TEST(Sweep, DivergedCellIsRecorded) {
  auto c = small_iris();
  c.train.learning_rate = 1e308;
  c.grid = {GridCell{0.01, 0.0, OrthoNorm::none}};
  const auto r = run_sweep(c);
  EXPECT_FALSE(r.points[0].ok());
  EXPECT_EQ(r.points[0].status.rfind("failed: ", 0), 0u);
  EXPECT_NE(fitness_csv(r.rows()).find("\"failed: "), std::string::npos);
}

TEST(FidelityExperiment, MeanOfRuns) {
  const auto c = preset("iris", kData);
  const auto e = run_fidelity_experiment(load_dataset(c.dataset), c, RegularizerSpec::l1o(0.001, 0.01), 3);
  ASSERT_EQ(e.fidelity.per_run.size(), 3u);
  const double mean = std::accumulate(e.fidelity.per_run.begin(), e.fidelity.per_run.end(), 0.0) / 3.0;
  EXPECT_NEAR(e.fidelity.mean, mean, 1e-12);
}

TEST(Consistency, IdenticalSeedsAreUnanimous) {
  const auto c = preset("iris", kData);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  const auto r = run_consistency_experiment(data, c, RegularizerSpec::l1o(0.001, 0.01), 3, true);
  EXPECT_EQ(r.consistency, 1.0);
  EXPECT_THROW(run_consistency_experiment(data, c, {}, 1), InputError);
}

TEST(Consistency, IrisModerateL1o) {
  const auto c = preset("iris", kData);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  const auto r = run_consistency_experiment(data, c, RegularizerSpec::l1o(0.01, 0.1), 10);
  EXPECT_GE(r.consistency, 0.5);
  const auto table = consistency_table({{"iris", RegularizerSpec::l1o(0.01, 0.1), r}});
  EXPECT_NE(table.find("iris"), std::string::npos);
}

TEST(StandaloneDt, ElevenPointsAndDepthBound) {
  const auto c = preset("iris", kData);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  const auto pts = run_standalone_dt_baseline(data, c);
  ASSERT_EQ(pts.size(), 11u);
  EXPECT_EQ(pts[0].norm, "dt_depth_none");
  EXPECT_LE(pts[1].apl, 1.0);
  for (const auto& p : pts) EXPECT_TRUE(std::isfinite(p.dt_auc));
}

TEST(StandaloneDt, UnboundedDepthFitsTrainingBest) {
  const auto c = preset("iris", kData);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  const auto full = fit_tree(data.train.x, data.train.y, 3, c.extract.dt);
  const double best = agreement(predict_tree(full, data.train.x), data.train.y);
  for (int d = 1; d <= 10; ++d) {
    DtParams p = c.extract.dt;
    p.max_depth = d;
    const auto t = fit_tree(data.train.x, data.train.y, 3, p);
    EXPECT_LE(agreement(predict_tree(t, data.train.x), data.train.y), best);
  }
}

TEST(TimeRun, NoOpIsFast) { EXPECT_LT(time_run([] {}), 0.01); }

TEST(TimeRun, IrisRunUnderOneMinute) {
  const auto c = preset("iris", kData);
  const auto data = prepare(load_dataset(c.dataset), c.split);
  EXPECT_LT(time_run([&] { train_and_extract(data, c.arch, c.train, RegularizerSpec::l1o(0.01, 0.1), c.extract); }),
            60.0);
}

TEST(Reports, FidelityTable) {
  const auto t = fidelity_table({{"iris", "L1-O", FidelityReport::from_runs({1.0, 0.96})}});
  EXPECT_NE(t.find("0.98 ± 0.02"), std::string::npos);
}

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "l1o/metrics.hpp"
#include "oracles.hpp"

using namespace l1o;

namespace {

// Stump on x0: class `low` when x0 <= thr, otherwise `high`.
DecisionTree stump(double thr, int low = 0, int high = 1) {
  DecisionTree t;
  t.n_features = 1;
  t.n_classes = 2;
  t.feature_names = {"x0"};
  TreeNode root;
  root.feature = 0;
  root.threshold = thr;
  root.left = 1;
  root.right = 2;
  root.counts = {1, 1};
  TreeNode l, r;
  l.label = low;
  l.counts = {1, 0};
  r.label = high;
  r.counts = {0, 1};
  t.nodes = {root, l, r};
  return t;
}

Matrix ramp(int n) {
  Matrix x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = i;
  return x;
}

}  // namespace

TEST(Auc, HandExample) {
  EXPECT_DOUBLE_EQ(binary_auc({0.1, 0.4, 0.35, 0.8}, {false, false, true, true}), 0.75);
}

TEST(Auc, PerfectSeparation) { EXPECT_EQ(binary_auc({0.1, 0.2, 0.8, 0.9}, {false, false, true, true}), 1.0); }

TEST(Auc, AllTiesIsHalf) { EXPECT_EQ(binary_auc({0.3, 0.3, 0.3, 0.3}, {false, true, false, true}), 0.5); }

TEST(Auc, SingleClassUndefined) {
  EXPECT_THROW(binary_auc({0.1, 0.2}, {true, true}), UndefinedAucError);
  EXPECT_THROW(auc(Matrix::Zero(3, 3), {1, 1, 1}), UndefinedAucError);
}

TEST(Auc, LengthMismatch) { EXPECT_THROW(binary_auc({0.1}, {true, false}), ShapeError); }

TEST(Auc, MatchesPairCounting) {
  std::mt19937_64 g(1);
  std::uniform_int_distribution<int> level(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 40;
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = level(g) / 6.0;
      pos[i] = level(g) % 2;
    }
    pos[0] = true;
    pos[1] = false;
    EXPECT_NEAR(binary_auc(s, pos), oracle::pair_auc(s, pos), 1e-12);
  }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(50), t(50);
  std::vector<bool> pos(50);
  for (std::size_t i = 0; i < 50; ++i) {
    s[i] = u(g);
    t[i] = std::exp(3.0 * s[i]) - 7.0;
    pos[i] = u(g) < 0.4;
  }
  EXPECT_DOUBLE_EQ(binary_auc(s, pos), binary_auc(t, pos));
}

TEST(Auc, MacroOneVsRest) {
  Matrix p(4, 3);
  p << 0.8, 0.1, 0.1,  //
      0.1, 0.8, 0.1,   //
      0.1, 0.1, 0.8,   //
      0.6, 0.3, 0.1;
  EXPECT_DOUBLE_EQ(auc(p, {0, 1, 2, 0}), 1.0);
  // Class 2 absent: averaged over classes 0 and 1 only.
  Matrix q = p.topRows(2);
  EXPECT_DOUBLE_EQ(auc(q, {0, 1}), 1.0);
}

TEST(Auc, TwoColumnsUsePositiveColumn) {
  Matrix p(4, 2);
  p << 0.9, 0.1, 0.6, 0.4, 0.65, 0.35, 0.2, 0.8;
  EXPECT_DOUBLE_EQ(auc(p, {0, 0, 1, 1}), 0.75);
}

TEST(Fidelity, ComplementIsZero) {
  const Matrix x = ramp(10);
  EXPECT_EQ(agreement(predict_tree(stump(4.5), x), predict_tree(stump(4.5, 1, 0), x)), 0.0);
}

TEST(Fidelity, ConstantModelAgreesWithLeaf) {
  auto m = init_model({1, {2}, 2}, 0);
  for (auto& w : m.weights) w.setZero();
  m.biases.back()(0) = -1.0;
  DecisionTree leaf = stump(0.0);
  leaf.nodes.resize(1);
  make_leaf(leaf.nodes[0]);
  leaf.nodes[0].label = 0;
  const Matrix x = ramp(7);
  EXPECT_EQ(fidelity(leaf, m, x, x), 1.0);
}

TEST(Fidelity, Errors) {
  EXPECT_THROW(agreement({0, 1}, {0}), InputError);
  EXPECT_THROW(agreement({}, {}), InputError);
}

TEST(Consistency, CopiesAreUnanimous) {
  EXPECT_EQ(consistency({stump(3.5), stump(3.5), stump(3.5)}, ramp(10)), 1.0);
}

TEST(Consistency, TotalDisagreement) {
  EXPECT_EQ(consistency({stump(4.5), stump(4.5, 1, 0)}, ramp(10)), 0.0);
}

TEST(Consistency, SevenOfTenFixture) {
  // Rows 0..9; the stumps disagree on rows 5, 6 and 7 only.
  EXPECT_DOUBLE_EQ(consistency({stump(5.5), stump(7.5), stump(4.5)}, ramp(10)), 0.7);
}

TEST(Consistency, NeedsTwoTrees) {
  EXPECT_THROW(consistency({stump(1.0)}, ramp(3)), InputError);
  EXPECT_THROW(consistency({stump(1.0), stump(1.0)}, Matrix(0, 1)), InputError);
}

TEST(FidelityReport, MeanAndPopulationStd) {
  const auto r = FidelityReport::from_runs({0.9, 1.0, 0.95, 0.85, 1.0});
  EXPECT_NEAR(r.mean, 0.94, 1e-12);
  EXPECT_NEAR(r.std, std::sqrt((0.0016 + 0.0036 + 0.0001 + 0.0081 + 0.0036) / 5.0), 1e-12);
}

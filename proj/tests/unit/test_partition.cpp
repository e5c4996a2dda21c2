#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <coat/error.hpp>
#include <coat/partition.hpp>

using namespace coat;

namespace {

Dataset make(std::vector<double> y, std::vector<Column> cov) {
  Dataset d;
  d.y = std::move(y);
  d.covariates = std::move(cov);
  return d;
}

Dataset noise(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Dataset d;
  d.y.resize(n);
  for (auto& v : d.y) v = z(rng);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> x(n);
    for (auto& v : x) v = z(rng);
    d.covariates.push_back(Column::continuous("X" + std::to_string(j + 1), x));
  }
  return d;
}

Dataset binary_shift(std::size_t n, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Dataset d = noise(n, 2, seed + 1);
  std::vector<int> codes(n);
  for (std::size_t i = 0; i < n; ++i) {
    codes[i] = 1 + static_cast<int>(i % 2);
    d.y[i] = z(rng) + (codes[i] == 2 ? shift : 0.0);
  }
  d.covariates.push_back(Column::categorical("grp", {"a", "b"}, codes));
  return d;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST(NormalMlFit, TwoPoints) {
  const std::vector<double> y{0, 2};
  const auto f = normal_ml_fit(y);
  EXPECT_NEAR(f.mu_hat, 1.0, 1e-15);
  EXPECT_NEAR(f.sigma_hat, 1.0, 1e-15);
  EXPECT_NEAR(f.scores(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(f.scores(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(f.scores(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(f.scores(1, 1), 0.0, 1e-15);
}

TEST(NormalMlFit, LogLik) {
  const std::vector<double> y{1, 2, 3};
  const auto f = normal_ml_fit(y);
  EXPECT_NEAR(f.sigma_hat * f.sigma_hat, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(f.loglik, -1.5 * std::log(2 * M_PI * 2.0 / 3.0) - 1.5, 1e-12);
  EXPECT_NEAR(f.loglik, -3.6486, 1e-4);
}

TEST(NormalMlFit, ScoresSumToZero) {
  const auto d = noise(137, 0, 3);
  const auto f = normal_ml_fit(d.y);
  EXPECT_NEAR(f.scores.col(0).sum(), 0.0, 1e-8);
  EXPECT_NEAR(f.scores.col(1).sum(), 0.0, 1e-8);
}

TEST(NormalMlFit, Constant) {
  const std::vector<double> y{2, 2, 2};
  EXPECT_THROW(normal_ml_fit(y), DegenerateVariance);
}

TEST(EngineStatistic, DistTreeFixture) {
  const std::vector<double> y{1, 2, 3};
  const auto x = Column::continuous("x", {0, 1, 2});
  const auto ls = engine_statistic(EngineKind::DistTree, y, x);
  EXPECT_NEAR(ls.t(0), 3.0, 1e-12);
  EXPECT_NEAR(ls.t(1), 0.0, 1e-12);
  EXPECT_TRUE(ls.mu.isZero(1e-12));
  EXPECT_NEAR(ls.sigma(0, 0), 4.5, 1e-12);
  EXPECT_NEAR(ls.sigma(1, 1), 2.25, 1e-12);
  EXPECT_NEAR(c_quad(ls).statistic, 2.0, 1e-12);
  EXPECT_NEAR(c_quad(engine_statistic(EngineKind::CTreeTrafo, y, x)).statistic, 2.0, 1e-12);
  const auto base = c_quad(engine_statistic(EngineKind::CTreeBaseline, y, x));
  EXPECT_EQ(base.df, 1);
}

TEST(EngineStatistic, MobHasNone) {
  const std::vector<double> y{1, 2, 3};
  EXPECT_THROW(engine_statistic(EngineKind::MOB, y, Column::continuous("x", {0, 1, 2})), std::exception);
}

TEST(EngineStatistic, TrafoEqualsDistTreeOnContinuous) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 200; ++rep) {
    const auto d = noise(20 + rep, 1, rng());
    const auto a = c_quad(engine_statistic(EngineKind::CTreeTrafo, d.y, d.covariates[0]));
    const auto b = c_quad(engine_statistic(EngineKind::DistTree, d.y, d.covariates[0]));
    EXPECT_LT(rel_diff(a.statistic, b.statistic), 1e-8);
  }
}

TEST(MobFluctuation, ZeroScores) {
  const Matrix s = Matrix::Zero(10, 2);
  std::vector<double> x(10);
  std::iota(x.begin(), x.end(), 0.0);
  const auto r = mob_fluctuation_test(s, Column::continuous("x", x), 0.1);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_raw, 1.0);
}

TEST(MobFluctuation, HandProcess) {
  Matrix s(4, 1);
  s << 1, -1, 1, -1;
  // Ordered by x the scores read (-1, -1, 1, 1).
  const auto r = mob_fluctuation_test(s, Column::continuous("x", {3, 1, 4, 2}), 0.25);
  EXPECT_NEAR(r.statistic, 4.0, 1e-12);
  EXPECT_EQ(r.df, 1);
}

TEST(MobFluctuation, MonotoneTransformInvariance) {
  const auto d = noise(150, 1, 9);
  const auto f = normal_ml_fit(d.y);
  std::vector<double> ex(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) ex[i] = std::exp(3 * d.covariates[0].values[i]) - 5;
  const auto a = mob_fluctuation_test(f.scores, d.covariates[0], 0.1);
  const auto b = mob_fluctuation_test(f.scores, Column::continuous("ex", ex), 0.1);
  EXPECT_NEAR(a.statistic, b.statistic, 1e-10);
  EXPECT_NEAR(a.p_raw, b.p_raw, 1e-12);
}

TEST(MobFluctuation, Categorical) {
  Matrix s(6, 2);
  s << -1, 0, -1, 0, -1, 0, 1, 0, 1, 0, 1, 0;
  const auto r = mob_fluctuation_test(s, Column::categorical("g", {"a", "b"}, {1, 1, 1, 2, 2, 2}), 0.1);
  // J has rank 1; per-level sums -3 and 3 over 3 rows each, J = 1.
  EXPECT_EQ(r.df, 1);
  EXPECT_NEAR(r.statistic, 6.0, 1e-12);
}

TEST(SupLmPvalue, MatchesSimulatedTail) {
  // Tail frequencies of the supremum of a squared 2-d Bessel bridge process over
  // [0.1, 0.9], from 20000 simulated paths on a 2000-step grid.
  EXPECT_NEAR(suplm_pvalue(12.0, 2, 0.1), 0.052, 0.008);
  EXPECT_NEAR(suplm_pvalue(16.0, 2, 0.1), 0.0102, 0.002);
}

TEST(SupLmPvalue, Monotone) {
  double prev = 1.0;
  for (double c = 0.5; c < 40; c += 0.5) {
    const double p = suplm_pvalue(c, 2, 0.1);
    EXPECT_LE(p, prev + 1e-15);
    EXPECT_GE(p, 0.0);
    prev = p;
  }
}

TEST(MobFluctuation, NullCalibration) {
  std::mt19937_64 rng(123);
  int rejected = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    const auto d = noise(500, 1, rng());
    const auto f = normal_ml_fit(d.y);
    rejected += mob_fluctuation_test(f.scores, d.covariates[0], 0.1).p_raw < 0.05 ? 1 : 0;
  }
  const double rate = static_cast<double>(rejected) / reps;
  EXPECT_GE(rate, 0.03);
  EXPECT_LE(rate, 0.08);
}

TEST(SelectSplitVariable, NoiseMostlyUnselected) {
  int selected = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = noise(100, 5, 1000 + seed);
    selected += select_split_variable(d.y, d.covariates, FitConfig{}).selected ? 1 : 0;
  }
  EXPECT_LE(selected, 10);
}

TEST(SelectSplitVariable, StrongBinaryEffect) {
  const auto d = binary_shift(100, 10.0, 5);
  for (auto e : {EngineKind::CTreeTrafo, EngineKind::DistTree, EngineKind::MOB, EngineKind::CTreeBaseline}) {
    FitConfig cfg;
    cfg.engine = e;
    const auto sel = select_split_variable(d.y, d.covariates, cfg);
    ASSERT_TRUE(sel.selected) << to_string(e);
    EXPECT_EQ(*sel.selected, 2u) << to_string(e);
    EXPECT_LT(*sel.min_p_adjusted, 1e-6) << to_string(e);
  }
}

TEST(SelectSplitVariable, ConstantColumnSkipped) {
  auto d = noise(50, 2, 6);
  d.covariates.push_back(Column::continuous("c", std::vector<double>(50, 1.0)));
  const auto sel = select_split_variable(d.y, d.covariates, FitConfig{});
  EXPECT_EQ(sel.tested, 2u);
  EXPECT_FALSE(sel.tests[2].has_value());
}

TEST(SelectSplitVariable, BonferroniMultiplier) {
  const auto d = noise(80, 3, 12);
  FitConfig with, without;
  without.bonferroni = false;
  const auto a = select_split_variable(d.y, d.covariates, with);
  const auto b = select_split_variable(d.y, d.covariates, without);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(a.tests[j]->p_adjusted, std::min(1.0, 3 * b.tests[j]->p_raw), 1e-15);
    EXPECT_EQ(b.tests[j]->p_adjusted, b.tests[j]->p_raw);
  }
}

TEST(FindBestSplit, StepThreshold) {
  const std::vector<double> y{0, 0, 0, 10, 10, 10};
  const auto x = Column::continuous("x", {1, 2, 3, 4, 5, 6});
  FitConfig cfg;
  cfg.minbucket = 2;
  const auto s = find_best_split(y, x, 0, cfg);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(std::get<ThresholdRule>(s->rule).value, 3.5);
}

TEST(FindBestSplit, MobLogLik) {
  const std::vector<double> y{0, 1, 9, 10};
  const auto x = Column::continuous("x", {1, 2, 3, 4});
  FitConfig cfg;
  cfg.engine = EngineKind::MOB;
  cfg.minbucket = 2;
  const auto s = find_best_split(y, x, 0, cfg);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(std::get<ThresholdRule>(s->rule).value, 2.5);
  const std::vector<double> left{0, 1};
  EXPECT_NEAR(normal_ml_fit(left).loglik, -1.45158, 1e-5);
}

TEST(FindBestSplit, ConstantCovariate) {
  const std::vector<double> y{0, 1, 2, 3, 4, 5};
  const auto x = Column::continuous("x", std::vector<double>(6, 2.0));
  FitConfig cfg;
  cfg.minbucket = 2;
  EXPECT_FALSE(find_best_split(y, x, 0, cfg));
}

TEST(FindBestSplit, CategoricalSubset) {
  std::vector<double> y;
  std::vector<int> codes;
  for (int i = 0; i < 40; ++i) {
    codes.push_back(1 + i % 4);
    y.push_back((codes.back() == 2 || codes.back() == 4) ? 5.0 + 0.01 * i : 0.01 * i);
  }
  const auto col = Column::categorical("g", {"a", "b", "c", "d"}, codes);
  const auto s = find_best_split(y, col, 0, FitConfig{});
  ASSERT_TRUE(s);
  auto left = std::get<SubsetRule>(s->rule).left_levels;
  std::sort(left.begin(), left.end());
  EXPECT_EQ(left, (std::vector<int>{1, 3}));
}

TEST(FindBestSplit, TooManyLevels) {
  std::vector<double> y;
  std::vector<int> codes;
  std::vector<std::string> levels;
  for (int k = 0; k < 13; ++k) levels.push_back("l" + std::to_string(k));
  for (int i = 0; i < 130; ++i) {
    codes.push_back(1 + i % 13);
    y.push_back(i % 7);
  }
  EXPECT_THROW(find_best_split(y, Column::categorical("g", levels, codes), 0, FitConfig{}), ValidationError);
}

TEST(FitCoat, BelowMinsplit) {
  const auto model = fit_coat(noise(10, 2, 1), FitConfig{});
  EXPECT_EQ(model.nodes.size(), 1u);
  EXPECT_TRUE(model.root().is_leaf());
}

TEST(FitCoat, BinaryStump) {
  const auto d = binary_shift(200, 10.0, 21);
  for (auto e : {EngineKind::CTreeTrafo, EngineKind::DistTree, EngineKind::MOB}) {
    FitConfig cfg;
    cfg.engine = e;
    const auto m = fit_coat(d, cfg);
    ASSERT_EQ(m.nodes.size(), 3u) << to_string(e);
    EXPECT_EQ(m.root().split->variable, 2u);
    const auto& l = m.nodes[static_cast<std::size_t>(m.root().children->first)];
    const auto& r = m.nodes[static_cast<std::size_t>(m.root().children->second)];
    EXPECT_NEAR(l.ba.bias, 0.0, 0.4);
    EXPECT_NEAR(r.ba.bias, 10.0, 0.4);
  }
}

TEST(FitCoat, LeavesPartitionRows) {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> z;
  auto d = noise(600, 3, 45);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double x1 = d.covariates[0].values[i], x2 = d.covariates[1].values[i];
    d.y[i] = z(rng) * (x2 > 0.5 ? 2.0 : 1.0) + (x1 > 0 ? 1.0 : 0.0);
  }
  for (auto e : {EngineKind::CTreeTrafo, EngineKind::MOB, EngineKind::CTreeBaseline}) {
    FitConfig cfg;
    cfg.engine = e;
    cfg.minbucket = 15;
    const auto m = fit_coat(d, cfg);
    EXPECT_GT(m.leaf_ids().size(), 1u);
    std::vector<int> seen(d.n(), 0);
    for (int id : m.leaf_ids()) {
      const auto& leaf = m.nodes[static_cast<std::size_t>(id)];
      EXPECT_GE(leaf.n, cfg.minbucket);
      EXPECT_EQ(leaf.members.size(), leaf.n);
      for (auto r : leaf.members) ++seen[r];
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    const auto assign = m.leaf_assignment();
    EXPECT_EQ(assign.size(), d.n());
  }
}

TEST(FitCoat, TinyAlphaRootOnly) {
  const auto d = binary_shift(200, 10.0, 3);
  FitConfig cfg;
  cfg.alpha = 1e-300;
  EXPECT_EQ(fit_coat(d, cfg).nodes.size(), 1u);
}

TEST(FitCoat, MaxDepth) {
  const auto d = binary_shift(400, 10.0, 3);
  FitConfig cfg;
  cfg.maxdepth = 0;
  EXPECT_EQ(fit_coat(d, cfg).nodes.size(), 1u);
}

TEST(FitCoat, ConstantOutcomeIsLeaf) {
  auto d = noise(50, 2, 4);
  std::fill(d.y.begin(), d.y.end(), 1.5);
  for (auto e : {EngineKind::DistTree, EngineKind::MOB, EngineKind::CTreeTrafo}) {
    FitConfig cfg;
    cfg.engine = e;
    EXPECT_EQ(fit_coat(d, cfg).nodes.size(), 1u);
  }
}

TEST(FitCoat, TrafoAndDistTreeAgree) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    auto d = noise(300, 2, seed + 100);
    for (std::size_t i = 0; i < d.n(); ++i) d.y[i] = z(rng) * (d.covariates[0].values[i] > 0 ? 2.0 : 1.0);
    FitConfig a, b;
    b.engine = EngineKind::DistTree;
    const auto ma = fit_coat(d, a), mb = fit_coat(d, b);
    ASSERT_EQ(ma.nodes.size(), mb.nodes.size());
    for (std::size_t k = 0; k < ma.nodes.size(); ++k) EXPECT_EQ(ma.nodes[k].n, mb.nodes[k].n);
  }
}

TEST(FitCoat, InvalidConfig) {
  FitConfig cfg;
  cfg.minbucket = 1;
  EXPECT_THROW(fit_coat(noise(30, 1, 1), cfg), ValidationError);
  cfg = FitConfig{};
  cfg.alpha = 1.0;
  EXPECT_THROW(fit_coat(noise(30, 1, 1), cfg), ValidationError);
}

TEST(PredictNode, RootOnly) {
  const auto m = fit_coat(noise(10, 1, 1), FitConfig{});
  const std::vector<CovariateValue> row{0.3};
  EXPECT_EQ(predict_node(m, row).leaf, 0);
}

TEST(PredictNode, AgeThreshold) {
  CoatModel m;
  m.covariates.push_back({"age", ColumnKind::Continuous, {}});
  m.nodes.resize(3);
  m.nodes[0].split = SplitSpec{0, ThresholdRule{41.0}};
  m.nodes[0].children = std::pair{1, 2};
  m.nodes[1].id = 1;
  m.nodes[2].id = 2;
  EXPECT_EQ(predict_node(m, std::vector<CovariateValue>{30.0}).leaf, 1);
  EXPECT_EQ(predict_node(m, std::vector<CovariateValue>{41.0}).leaf, 1);
  EXPECT_EQ(predict_node(m, std::vector<CovariateValue>{41.5}).leaf, 2);
  EXPECT_THROW(predict_node(m, std::vector<CovariateValue>{std::string("x")}), ValidationError);
}

TEST(PredictNode, MatchesFittedMembership) {
  const auto d = binary_shift(200, 3.0, 8);
  const auto m = fit_coat(d, FitConfig{});
  const auto assign = m.leaf_assignment();
  for (std::size_t i = 0; i < d.n(); ++i) {
    std::vector<CovariateValue> row{d.covariates[0].values[i], d.covariates[1].values[i],
                                    d.covariates[2].levels[static_cast<std::size_t>(d.covariates[2].codes[i] - 1)]};
    EXPECT_EQ(predict_node(m, row).leaf, assign[i]);
  }
  std::vector<CovariateValue> unseen{0.0, 0.0, std::string("zzz")};
  if (m.nodes.size() > 1 && m.root().split->variable == 2) EXPECT_THROW(predict_node(m, unseen), ValidationError);
}

#include "gppl/active.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

namespace gppl {
namespace {

struct Pool {
  Matrix x;
  std::vector<PreferencePair> pool, eval;
  KernelConfig cfg;
};

Pool make_pool(std::uint64_t seed, Index n = 20, std::ptrdiff_t held_out = 50) {
  std::mt19937_64 rng(seed);
  Pool p;
  p.x = testing::uniform_features(n, 2, 0.0, 3.0, rng);
  Vector f(n);
  for (Index i = 0; i < n; ++i) f[i] = std::sin(2.0 * p.x(i, 0)) + std::cos(2.0 * p.x(i, 1));
  std::vector<PreferencePair> all;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      all.push_back({i, j, f[i] > f[j] ? PreferenceLabel::FirstPreferred : PreferenceLabel::SecondPreferred});
  std::shuffle(all.begin(), all.end(), rng);
  p.eval.assign(all.begin(), all.begin() + held_out);
  p.pool.assign(all.begin() + held_out, all.end());
  p.cfg.lengthscales = median_heuristic(p.x);
  return p;
}

TEST(UncertaintySelect, Examples) {
  const std::vector<double> probs = {0.9, 0.5, 0.6};
  EXPECT_EQ(uncertainty_select(probs, 1), std::vector<std::size_t>({1}));
  EXPECT_EQ(uncertainty_select(probs, 3), std::vector<std::size_t>({1, 2, 0}));
  EXPECT_EQ(uncertainty_select(probs, 10), std::vector<std::size_t>({1, 2, 0}));
  const std::vector<double> flat(5, 0.5);
  EXPECT_EQ(uncertainty_select(flat, 2), std::vector<std::size_t>({0, 1}));
  const std::vector<double> mirrored = {0.75, 0.25, 0.45};
  EXPECT_EQ(uncertainty_select(mirrored, 3), std::vector<std::size_t>({2, 0, 1}));
}

TEST(UncertaintySelect, UntrainedModelKeepsPoolOrder) {
  ModelState model;
  model.dim = 1;
  model.kernel.lengthscales = Vector::Ones(1);
  model.inducing = Matrix::Zero(2, 1);
  model.inducing(1, 0) = 1.0;
  model.fhat_m = Vector::Zero(2);
  model.cov_m = Matrix::Identity(2, 2) * 100.0;
  model.scale = ScalePosterior::from_prior(2.0, 200.0);
  const Predictor pred(model);
  Matrix x(4, 1);
  x << 0.0, 0.3, 0.6, 0.9;
  const std::vector<PreferencePair> pool = {{0, 1}, {2, 3}, {1, 3}, {0, 2}};
  EXPECT_EQ(uncertainty_select(pred, x, pool, 2), std::vector<std::size_t>({0, 1}));
  // Every prediction is exactly 0.5, which counts as wrong.
  EXPECT_EQ(pairwise_accuracy(pred, x, pool), 0.0);
}

TEST(ActiveConfig, Validate) {
  ActiveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.init_labels = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ActiveConfig{};
  c.batch = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ActiveConfig{};
  c.budget = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Simulate, BudgetEqualToInitialLabels) {
  const auto p = make_pool(1);
  ActiveConfig c;
  c.budget = 2;
  c.eval_pairs = p.eval;
  const auto curve = simulate(p.x, p.pool, p.cfg, c);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve[0].labels_used, 2);
}

TEST(Simulate, ReproducibleAndMonotone) {
  const auto p = make_pool(2);
  for (Strategy s : {Strategy::Random, Strategy::Uncertainty}) {
    ActiveConfig c;
    c.budget = 30;
    c.seed = 17;
    c.strategy = s;
    c.eval_pairs = p.eval;
    const auto a = simulate(p.x, p.pool, p.cfg, c);
    const auto b = simulate(p.x, p.pool, p.cfg, c);
    ASSERT_EQ(a.size(), b.size());
    ASSERT_EQ(a.size(), 15u);
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].labels_used, b[k].labels_used);
      EXPECT_EQ(a[k].accuracy, b[k].accuracy);
      EXPECT_EQ(a[k].labels_used, static_cast<Index>(2 + 2 * k));
      EXPECT_GE(a[k].accuracy, 0.0);
      EXPECT_LE(a[k].accuracy, 1.0);
    }
  }
}

TEST(Simulate, ExhaustedPoolTruncatesWithoutRepeats) {
  const auto p = make_pool(3, 8, 17);  // 28 pairs, 11 in the pool
  ASSERT_EQ(p.pool.size(), 11u);
  ActiveConfig c;
  c.budget = 400;
  c.batch = 3;
  c.eval_pairs = p.eval;
  const auto curve = simulate(p.x, p.pool, p.cfg, c);
  // 2, 5, 8, 11 and then the pool is empty; every pool pair was used once.
  ASSERT_EQ(curve.size(), 4u);
  EXPECT_EQ(curve.back().labels_used, 11);
}

TEST(Simulate, LearnsWithMoreLabels) {
  const auto p = make_pool(4, 25);
  ActiveConfig c;
  c.budget = 80;
  c.batch = 4;
  c.eval_pairs = p.eval;
  const auto curve = simulate(p.x, p.pool, p.cfg, c);
  EXPECT_GT(curve.back().accuracy, 0.75);
}

TEST(Simulate, SviAndWarmStartOptions) {
  const auto p = make_pool(5);
  ActiveConfig c;
  c.budget = 10;
  c.eval_pairs = p.eval;
  c.use_svi = true;
  c.svi.inducing = 10;
  c.svi.max_steps = 20;
  EXPECT_EQ(simulate(p.x, p.pool, p.cfg, c).size(), 5u);
  c.use_svi = false;
  c.warm_start = true;
  EXPECT_EQ(simulate(p.x, p.pool, p.cfg, c).size(), 5u);
}

TEST(Simulate, EmptyPoolThrows) {
  const auto p = make_pool(6);
  EXPECT_THROW(simulate(p.x, {}, p.cfg, ActiveConfig{}), std::invalid_argument);
}

}  // namespace
}  // namespace gppl

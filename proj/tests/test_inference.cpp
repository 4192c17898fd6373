#include "gppl/errors.hpp"
#include "gppl/inference.hpp"
#include "gppl/io.hpp"
#include "gppl/linalg.hpp"
#include "gppl/predict.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace gppl {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

KernelConfig unit_kernel(Index d, double l = 1.0) {
  KernelConfig cfg;
  cfg.lengthscales = Vector::Constant(d, l);
  return cfg;
}

// Independent dense implementation of the full-VB updates with explicit
// inverses and hand-rolled kernel and normal functions.
struct DenseOracle {
  Vector fhat;
  Matrix cov;
  double a = 0.0, b = 0.0;
  int iterations = 0;
};

DenseOracle dense_oracle(const Matrix& x, const std::vector<PreferencePair>& pairs, const Vector& ls,
                         double a0, double b0, double tol, int max_iter) {
  const Index n = x.rows();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double v = 1.0;
      for (Index d = 0; d < x.cols(); ++d) {
        const double r = std::sqrt(3.0) * std::abs(x(i, d) - x(j, d)) / ls[d];
        v *= (1.0 + r) * std::exp(-r);
      }
      k(i, j) = v;
    }
  k.diagonal().array() += 1e-6 * k.diagonal().mean();
  const Matrix kinv = k.inverse();
  const Index p = static_cast<Index>(pairs.size());

  DenseOracle o;
  o.fhat = Vector::Zero(n);
  o.a = a0;
  o.b = b0;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix g = Matrix::Zero(p, n);
    Vector qinv(p), resid(p);
    for (Index r = 0; r < p; ++r) {
      const auto& pr = pairs[static_cast<std::size_t>(r)];
      const double z = (o.fhat[pr.i] - o.fhat[pr.j]) / std::sqrt(2.0);
      const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
      const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
      g(r, pr.i) = pdf / std::sqrt(2.0);
      g(r, pr.j) = -pdf / std::sqrt(2.0);
      qinv[r] = 1.0 / std::max(cdf * (1.0 - cdf), 1e-10);
      const double y = pr.label == PreferenceLabel::FirstPreferred    ? 1.0
                       : pr.label == PreferenceLabel::SecondPreferred ? 0.0
                                                                      : 0.5;
      resid[r] = y - cdf;
    }
    const double shat = o.a / o.b;
    const Matrix cov = (shat * kinv + g.transpose() * qinv.asDiagonal() * g).inverse();
    const Vector f = cov * g.transpose() * qinv.asDiagonal() * (resid + g * o.fhat);
    o.a = a0 + 0.5 * static_cast<double>(n);
    o.b = b0 + 0.5 * ((kinv * cov).trace() + f.dot(kinv * f));
    const double change = (f - o.fhat).cwiseAbs().maxCoeff();
    o.fhat = f;
    o.cov = cov;
    o.iterations = it;
    if (change < tol) break;
  }
  return o;
}

TEST(RobustCholesky, PlainAndEscalated) {
  const Matrix spd = Matrix::Identity(3, 3) * 4.0;
  const auto plain = robust_cholesky(spd);
  EXPECT_EQ(plain.jitter, 0.0);
  EXPECT_NEAR(plain.log_det(), 3.0 * std::log(4.0), 1e-14);

  Matrix singular = Matrix::Ones(4, 4);
  singular(3, 3) = 1.0 - 1e-14;
  const auto esc = robust_cholesky(singular);
  EXPECT_GT(esc.jitter, 0.0);
  EXPECT_LE(esc.jitter, 1e-2);
  EXPECT_EQ(esc.llt.info(), Eigen::Success);

  Matrix neg = -Matrix::Identity(2, 2);
  EXPECT_THROW(robust_cholesky(neg), SingularModelError);
}

TEST(UpdateF, ZeroPairsRecoversPrior) {
  std::mt19937_64 rng(1);
  const Matrix x = testing::gaussian_features(6, 2, rng);
  const Matrix k = jittered_kernel(x, unit_kernel(2));
  const Vector mu = Vector::LinSpaced(6, -1.0, 1.0);
  const auto ap = linearize(mu, {});
  const auto upd = update_f(ap, k, 0.25, mu);
  EXPECT_LT((upd.fhat - mu).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((upd.cov - k / 0.25).cwiseAbs().maxCoeff(), 1e-9);
}

// Posterior mean of f_0 - f_1 under N(0, I) times Phi((f_0 - f_1) / sqrt 2),
// integrated on a grid.
double grid_mean_difference() {
  double num = 0.0, den = 0.0;
  const double h = 0.02;
  for (double u = -8.0; u <= 8.0; u += h)
    for (double v = -8.0; v <= 8.0; v += h) {
      const double w = std::exp(-0.5 * (u * u + v * v)) * 0.5 * std::erfc(-(u - v) / 2.0);
      num += w * (u - v);
      den += w;
    }
  return num / den;
}

TEST(UpdateF, SinglePairOrdersItems) {
  const Matrix k = Matrix::Identity(2, 2);
  const Vector mu = Vector::Zero(2);
  const std::vector<PreferencePair> pairs = {{0, 1, PreferenceLabel::FirstPreferred}};
  Vector f = mu;
  for (int it = 0; it < 100; ++it) f = update_f(linearize(f, pairs), k, 1.0, mu).fhat;
  const double oracle = grid_mean_difference();
  EXPECT_GT(oracle, 0.0);
  EXPECT_GT(f[0] - f[1], 0.0);
  EXPECT_NEAR(f[0], -f[1], 1e-12);
}

TEST(UpdateF, DuplicatedLabelsShrinkCovariance) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = testing::gaussian_features(8, 2, rng);
    const Matrix k = jittered_kernel(x, unit_kernel(2));
    const Vector f = testing::gaussian_features(8, 1, rng).col(0);
    auto pairs = testing::sample_pairs(f, 10, rng);
    const auto once = update_f(linearize(f, pairs), k, 0.5, Vector::Zero(8));
    const auto ap1 = linearize(f, pairs);
    pairs.insert(pairs.end(), pairs.begin(), pairs.end());
    const auto ap2 = linearize(f, pairs);
    EXPECT_LT((ap2.precision(8) - 2.0 * ap1.precision(8)).cwiseAbs().maxCoeff(), 1e-12);
    const auto twice = update_f(ap2, k, 0.5, Vector::Zero(8));
    std::vector<bool> involved(8, false);
    for (const auto& p : pairs) involved[static_cast<std::size_t>(p.i)] = involved[static_cast<std::size_t>(p.j)] = true;
    for (Index i = 0; i < 8; ++i) {
      if (involved[static_cast<std::size_t>(i)]) EXPECT_LT(twice.cov(i, i), once.cov(i, i));
      else EXPECT_LE(twice.cov(i, i), once.cov(i, i) * (1.0 + 1e-12));
    }
  }
}

TEST(UpdateF, CovarianceIsSymmetricPositiveDefinite) {
  std::mt19937_64 rng(3);
  const Matrix x = testing::gaussian_features(15, 3, rng);
  const Matrix k = jittered_kernel(x, unit_kernel(3, 0.3));
  const Vector f = testing::gaussian_features(15, 1, rng).col(0) * 4.0;
  const auto pairs = testing::sample_pairs(f, 60, rng);
  const auto upd = update_f(linearize(f, pairs), k, 0.01, Vector::Zero(15));
  EXPECT_EQ((upd.cov - upd.cov.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(Eigen::LLT<Matrix>(upd.cov).info(), Eigen::Success);
}

TEST(UpdateScale, Examples) {
  std::mt19937_64 rng(4);
  const Matrix x = testing::gaussian_features(10, 2, rng);
  const Matrix k = jittered_kernel(x, unit_kernel(2));
  const auto prior = ScalePosterior::from_prior(2.0, 200.0);
  const Vector mu = Vector::Constant(10, 0.5);
  const auto sp = update_scale(mu, k, k, mu, prior);
  EXPECT_DOUBLE_EQ(sp.a, 7.0);
  EXPECT_NEAR(sp.b, 200.0 + 5.0, 1e-9);
  EXPECT_EQ(sp.prior_a, 2.0);
  EXPECT_EQ(sp.prior_b, 200.0);

  const auto empty = update_scale(Vector(), Matrix(), Matrix(), Vector(), prior);
  EXPECT_EQ(empty.a, 2.0);
  EXPECT_EQ(empty.b, 200.0);
}

TEST(ExpectedLogScale, Digamma) {
  ScalePosterior sp;
  sp.a = 1.0;
  sp.b = 1.0;
  EXPECT_NEAR(expected_log_scale(sp), -kEulerGamma, 1e-14);
  EXPECT_NEAR(expected_log_scale(sp), -0.577216, 5e-7);
  sp.a = 2.0;
  EXPECT_NEAR(expected_log_scale(sp), 1.0 - kEulerGamma, 1e-14);
  EXPECT_NEAR(expected_log_scale(sp), 0.422784, 5e-7);
  for (double a : {0.3, 2.0, 17.5}) {
    ScalePosterior s1, s2;
    s1.a = s2.a = a;
    s1.b = 3.1;
    s2.b = 3.1 * std::exp(1.0);
    EXPECT_NEAR(expected_log_scale(s2), expected_log_scale(s1) - 1.0, 1e-13);
  }
  sp.a = 0.0;
  EXPECT_THROW(expected_log_scale(sp), std::invalid_argument);
}

TEST(FullVb, ZeroPairsReturnsPrior) {
  std::mt19937_64 rng(5);
  const Matrix x = testing::gaussian_features(5, 2, rng);
  const auto fit = fit_full_vb(x, {}, unit_kernel(2));
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.posterior.fhat, Vector::Zero(5));
  EXPECT_LT((fit.posterior.cov - fit.posterior.k / 0.01).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(fit.scale.a, 2.0);
  EXPECT_EQ(fit.scale.b, 200.0);
}

TEST(FullVb, TwoItemsOnePair) {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const std::vector<PreferencePair> pairs = {{0, 1, PreferenceLabel::FirstPreferred}};
  const auto fit = fit_full_vb(x, pairs, unit_kernel(1));
  EXPECT_TRUE(fit.converged);
  EXPECT_GT(fit.posterior.fhat[0], fit.posterior.fhat[1]);
  const std::vector<PreferencePair> flipped = {{0, 1, PreferenceLabel::SecondPreferred}};
  const auto fit2 = fit_full_vb(x, flipped, unit_kernel(1));
  EXPECT_LT(fit2.posterior.fhat[0], fit2.posterior.fhat[1]);
}

TEST(FullVb, ConflictingLabelsCancel) {
  Matrix x(2, 1);
  x << 0.0, 0.4;
  std::vector<PreferencePair> pairs;
  for (int r = 0; r < 3; ++r) {
    pairs.push_back({0, 1, PreferenceLabel::FirstPreferred});
    pairs.push_back({0, 1, PreferenceLabel::SecondPreferred});
  }
  const FullVbOptions opts;
  const auto fit = fit_full_vb(x, pairs, unit_kernel(1), opts);
  EXPECT_LT(std::abs(fit.posterior.fhat[0] - fit.posterior.fhat[1]), opts.tol * 10.0);
}

TEST(FullVb, SingleCycleMembersTie) {
  Vector mean = Vector::Zero(5);
  for (int rep = 0; rep < 25; ++rep) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(rep));
    const Matrix x = testing::gaussian_features(5, 10, rng);
    KernelConfig cfg;
    cfg.lengthscales = median_heuristic(x);
    const auto fit = fit_full_vb(x, toy_scenario("single-cycle"), cfg);
    mean += fit.posterior.fhat;
  }
  mean /= 25.0;
  const double range = mean.maxCoeff() - mean.minCoeff();
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) EXPECT_LT(std::abs(mean[i] - mean[j]), 0.05 * range);
  EXPECT_GT(mean[3], mean[4]);
}

TEST(FullVb, LabelSwapEquivariance) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = testing::gaussian_features(9, 2, rng);
    const Vector f = testing::gaussian_features(9, 1, rng).col(0);
    auto pairs = testing::sample_pairs(f, 25, rng);
    pairs.push_back({2, 5, PreferenceLabel::Undecided});
    auto swapped = pairs;
    for (auto& p : swapped) {
      std::swap(p.i, p.j);
      if (p.label == PreferenceLabel::FirstPreferred) p.label = PreferenceLabel::SecondPreferred;
      else if (p.label == PreferenceLabel::SecondPreferred) p.label = PreferenceLabel::FirstPreferred;
    }
    const auto cfg = unit_kernel(2, 0.8);
    const auto a = fit_full_vb(x, pairs, cfg);
    const auto b = fit_full_vb(x, swapped, cfg);
    EXPECT_LT((a.posterior.fhat - b.posterior.fhat).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.posterior.cov - b.posterior.cov).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FullVb, TranslationOfPriorMean) {
  std::mt19937_64 rng(7);
  const Matrix x = testing::gaussian_features(10, 2, rng);
  const Vector f = testing::gaussian_features(10, 1, rng).col(0);
  const auto pairs = testing::sample_pairs(f, 30, rng);
  const auto cfg = unit_kernel(2);
  FullVbOptions shifted;
  shifted.mu = Vector::Constant(10, 3.5);
  const auto a = fit_full_vb(x, pairs, cfg);
  const auto b = fit_full_vb(x, pairs, cfg, shifted);
  EXPECT_LT((b.posterior.fhat - a.posterior.fhat - Vector::Constant(10, 3.5)).cwiseAbs().maxCoeff(), 1e-9);
  for (const auto& p : pairs) {
    const auto prob = [&](const FullVbResult& r) {
      const auto& c = r.posterior.cov;
      return classify_probability(r.posterior.fhat[p.i], r.posterior.fhat[p.j], c(p.i, p.i), c(p.j, p.j),
                                  c(p.i, p.j));
    };
    EXPECT_NEAR(prob(a), prob(b), 1e-10);
  }
}

TEST(FullVb, MatchesIndependentDenseImplementation) {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
    std::mt19937_64 rng(seed);
    const Index n = seed == 14u ? 50 : 12 + static_cast<Index>(seed);
    const Matrix x = testing::gaussian_features(n, 3, rng);
    const Vector f = 2.0 * testing::gaussian_features(n, 1, rng).col(0);
    auto pairs = testing::sample_pairs(f, static_cast<std::size_t>(3 * n), rng);
    pairs.push_back({0, 1, PreferenceLabel::Undecided});
    KernelConfig cfg;
    cfg.lengthscales = median_heuristic(x);
    const auto fit = fit_full_vb(x, pairs, cfg);
    const auto oracle = dense_oracle(x, pairs, cfg.lengthscales, 2.0, 200.0, 1e-3, 200);
    EXPECT_EQ(fit.iterations, oracle.iterations);
    const double fscale = oracle.fhat.cwiseAbs().maxCoeff();
    EXPECT_LT((fit.posterior.fhat - oracle.fhat).cwiseAbs().maxCoeff() / fscale, 1e-8) << "seed " << seed;
    const double cscale = oracle.cov.cwiseAbs().maxCoeff();
    EXPECT_LT((fit.posterior.cov - oracle.cov).cwiseAbs().maxCoeff() / cscale, 1e-8);
    EXPECT_NEAR(fit.scale.b, oracle.b, 1e-8 * oracle.b);
  }
}

TEST(FullVb, RequiresTwoItems) {
  EXPECT_THROW(fit_full_vb(Matrix::Zero(1, 1), {}, unit_kernel(1)), std::invalid_argument);
}

}  // namespace
}  // namespace gppl

#include "gppl/svi.hpp"

#include "gppl/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace gppl {
namespace {

inline double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
  double s = 0.0;
  for (Index d = 0; d < a.cols(); ++d) {
    const double diff = a(i, d) - b(j, d);
    s += diff * diff;
  }
  return s;
}

inline Index nearest_center(const Matrix& points, Index i, const Matrix& centers) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(points, i, centers, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

InducingSet make_inducing_set(Matrix z, const KernelConfig& cfg, double shat) {
  InducingSet set;
  set.z = std::move(z);
  set.kmm = kernel_matrix(set.z, set.z, cfg);
  set.jitter = default_jitter(set.kmm);
  set.kmm.diagonal().array() += set.jitter;
  JitteredCholesky chol = robust_cholesky(set.kmm);
  if (chol.jitter > 0.0) {
    set.kmm.diagonal().array() += chol.jitter;
    set.jitter += chol.jitter;
  }
  set.kmm_chol = std::move(chol.llt);
  set.fhat_m = Vector::Zero(set.z.rows());
  set.cov_m = set.kmm / shat;
  return set;
}

std::vector<Index> assign_to_centers(const Matrix& points, const Matrix& centers) {
  std::vector<Index> labels(static_cast<std::size_t>(points.rows()));
  const Index n = points.rows();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = nearest_center(points, i, centers);
  return labels;
}

std::vector<Index> assign_to_centers_serial(const Matrix& points, const Matrix& centers) {
  std::vector<Index> labels(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    labels[static_cast<std::size_t>(i)] = nearest_center(points, i, centers);
  }
  return labels;
}

Matrix select_inducing(const Matrix& features, Index m, std::uint64_t seed, int max_lloyd) {
  const Index n = features.rows();
  if (m < 1 || m > n) {
    throw std::invalid_argument("select_inducing: need 1 <= M <= N (M=" + std::to_string(m) +
                                ", N=" + std::to_string(n) + ")");
  }
  std::mt19937_64 rng(seed);
  Matrix centers(m, features.cols());

  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.row(0) = features.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = squared_distance(features, i, centers, 0);

  for (Index c = 1; c < m; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double cum = 0.0;
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        cum += d2[static_cast<std::size_t>(i)];
        if (cum > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          chosen = i;
          break;
        }
      }
      // Round-off can leave the tail pick on an already chosen point.
      while (d2[static_cast<std::size_t>(chosen)] == 0.0 && chosen > 0) --chosen;
    } else {
      chosen = pick(rng);  // only duplicates remain
    }
    centers.row(c) = features.row(chosen);
    for (Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], squared_distance(features, i, centers, c));
    }
  }

  std::vector<Index> labels;
  for (int iter = 0; iter < max_lloyd; ++iter) {
    std::vector<Index> next = assign_to_centers(features, centers);
    if (next == labels) break;
    labels = std::move(next);
    Matrix sums = Matrix::Zero(m, features.cols());
    std::vector<Index> counts(static_cast<std::size_t>(m), 0);
    for (Index i = 0; i < n; ++i) {
      const Index c = labels[static_cast<std::size_t>(i)];
      sums.row(c) += features.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (Index c = 0; c < m; ++c) {
      const Index count = counts[static_cast<std::size_t>(c)];
      if (count > 0) centers.row(c) = sums.row(c) / static_cast<double>(count);
    }
  }
  return centers;
}

double step_size(int t, double forgetting) {
  if (t < 1) throw std::invalid_argument("step_size: t must be >= 1");
  return std::pow(static_cast<double>(t), -forgetting);
}

SviStepInfo svi_step(InducingSet& inducing, ScalePosterior& scale, const Matrix& features,
                     std::span<const PreferencePair> minibatch, Index total_pairs, int t,
                     const KernelConfig& cfg, const SviConfig& svi) {
  if (minibatch.empty()) throw std::invalid_argument("svi_step: empty minibatch");
  const Index m = inducing.z.rows();

  // Restrict to the items touched by the minibatch.
  std::unordered_map<Index, Index> local_of;
  std::vector<Index> items;
  std::vector<PreferencePair> local_pairs;
  local_pairs.reserve(minibatch.size());
  auto local = [&](Index global) {
    if (global < 0 || global >= features.rows()) throw std::out_of_range("svi_step: invalid item index");
    auto [it, inserted] = local_of.try_emplace(global, static_cast<Index>(items.size()));
    if (inserted) items.push_back(global);
    return it->second;
  };
  for (const auto& p : minibatch) local_pairs.push_back({local(p.i), local(p.j), p.label});

  Matrix x_local(static_cast<Index>(items.size()), features.cols());
  for (std::size_t r = 0; r < items.size(); ++r) x_local.row(static_cast<Index>(r)) = features.row(items[r]);

  const Matrix k_nm = prior_cross_covariance(x_local, inducing.z, cfg, inducing.jitter);
  const Matrix a = inducing.kmm_chol.solve(k_nm.transpose()).transpose();  // U x M
  const Vector f_local = a * inducing.fhat_m;
  const LikelihoodApprox approx = linearize(f_local, local_pairs);

  const double data_scale = static_cast<double>(total_pairs) / static_cast<double>(minibatch.size());
  const Index nb = approx.size();
  Matrix g_rows(nb, m);  // rows of Q^{-1/2} G A
  Vector b_m = Vector::Zero(m);
  for (Index k = 0; k < nb; ++k) {
    const Index i = approx.first[static_cast<std::size_t>(k)];
    const Index j = approx.second[static_cast<std::size_t>(k)];
    const double inv_sd = 1.0 / std::sqrt(approx.q[k]);
    g_rows.row(k) = (approx.slope[k] * inv_sd) * (a.row(i) - a.row(j));
    const double r =
        (approx.y[k] - approx.prob[k] + approx.slope[k] * std::numbers::sqrt2 * approx.zhat[k]) / approx.q[k];
    b_m += (approx.slope[k] * r) * (a.row(i) - a.row(j)).transpose();
  }
  b_m *= data_scale;

  const double shat = scale.mean();
  const Matrix lower = Matrix(inducing.kmm_chol.matrixL()) / std::sqrt(shat);
  const Matrix gl = g_rows * lower;  // nb x M
  Matrix bmat = data_scale * (gl.transpose() * gl);
  bmat.diagonal().array() += 1.0;
  const JitteredCholesky b_chol = robust_cholesky(symmetrize(bmat));
  const Matrix v = b_chol.llt.matrixL().solve(lower.transpose());
  const Matrix cov_hat = v.transpose() * v;
  const Vector fhat_hat = cov_hat * b_m;

  SviStepInfo info;
  info.rho = step_size(t, svi.forgetting);
  const Vector next = (1.0 - info.rho) * inducing.fhat_m + info.rho * fhat_hat;
  info.max_change = (next - inducing.fhat_m).cwiseAbs().maxCoeff();
  inducing.fhat_m = next;
  inducing.cov_m = symmetrize((1.0 - info.rho) * inducing.cov_m + info.rho * cov_hat);

  scale.a = scale.prior_a + 0.5 * static_cast<double>(m);
  const double trace = inducing.kmm_chol.solve(inducing.cov_m).trace();
  const double quad = inducing.fhat_m.dot(inducing.kmm_chol.solve(inducing.fhat_m));
  scale.b = scale.prior_b + 0.5 * (trace + quad);
  return info;
}

ModelState fit_svi(const Matrix& features, std::span<const PreferencePair> pairs, const KernelConfig& cfg,
                   double a0, double b0, const SviConfig& svi, SviDiagnostics* diag) {
  svi.validate();
  cfg.validate(features.cols());
  const Index n = features.rows();
  if (n < 1) throw std::invalid_argument("fit_svi: no items");
  const Index m = std::min(svi.inducing, n);

  ScalePosterior scale = ScalePosterior::from_prior(a0, b0);
  InducingSet inducing = make_inducing_set(select_inducing(features, m, svi.seed), cfg, scale.mean());

  const Index total = static_cast<Index>(pairs.size());
  const Index batch = std::min(svi.batch_pairs, total);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(svi.seed ^ 0x9e3779b97f4a7c15ull);
  std::size_t cursor = order.size();
  std::vector<PreferencePair> minibatch;

  if (diag) {
    diag->step_seconds.clear();
    diag->max_change.clear();
    diag->inducing_used = m;
  }
  int steps = 0;
  for (int t = 1; t <= svi.max_steps && total > 0; ++t) {
    const auto start = std::chrono::steady_clock::now();
    minibatch.clear();
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    // The last batch of an epoch may be short; it is never topped up from the
    // next permutation so no pair repeats within a batch.
    const std::size_t take = std::min(static_cast<std::size_t>(batch), order.size() - cursor);
    for (std::size_t k = 0; k < take; ++k) minibatch.push_back(pairs[order[cursor++]]);
    const SviStepInfo info = svi_step(inducing, scale, features, minibatch, total, t, cfg, svi);
    steps = t;
    if (diag) {
      diag->step_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      diag->max_change.push_back(info.max_change);
    }
  }

  ModelState model;
  model.kernel = cfg;
  model.a0 = a0;
  model.b0 = b0;
  model.svi = svi;
  model.svi.inducing = m;
  model.inducing = std::move(inducing.z);
  model.fhat_m = std::move(inducing.fhat_m);
  model.cov_m = std::move(inducing.cov_m);
  model.scale = scale;
  model.jitter = inducing.jitter;
  model.dim = features.cols();
  model.steps = steps;
  return model;
}

}  // namespace gppl

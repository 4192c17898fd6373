#pragma once

#include "gppl/kernel.hpp"
#include "gppl/likelihood.hpp"

#include <optional>
#include <span>

namespace gppl {

/// q(s) = Gamma(a, rate b) over the inverse prior scale, with its prior.
struct ScalePosterior {
  double a = 2.0;
  double b = 200.0;
  double prior_a = 2.0;
  double prior_b = 200.0;

  static ScalePosterior from_prior(double a0, double b0);

  /// E[s] = a / b.
  double mean() const { return a / b; }
};

/// Gaussian posterior q(f) = N(fhat, C) under the prior N(mu, K / s).
struct DensePosterior {
  Vector fhat;
  Matrix cov;
  Vector mu;
  Matrix k;  // jittered prior kernel matrix
};

struct FullVbOptions {
  double a0 = 2.0;
  double b0 = 200.0;
  int max_iter = 200;
  double tol = 1e-3;
  std::optional<Vector> mu;          // prior mean, zero when empty
  std::optional<Vector> init_fhat;   // warm start, mu when empty
};

struct FullVbResult {
  DensePosterior posterior;
  ScalePosterior scale;
  LikelihoodApprox approx;  // linearization behind the final covariance
  double shat_used = 0.0;   // E[s] used in the final covariance update
  double jitter = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct FUpdate {
  Vector fhat;
  Matrix cov;
};

/// C = (shat K^{-1} + G^T Q^{-1} G)^{-1},
/// fhat = mu + C G^T Q^{-1} (y - Phi(zhat) + G (fhat_prev - mu)).
/// The covariance is formed as L B^{-1} L^T with K / shat = L L^T and
/// B = I + L^T W L, which stays well conditioned for near-singular K.
FUpdate update_f(const LikelihoodApprox& approx, const Matrix& k, double shat, const Vector& mu);

/// a = a0 + N/2, b = b0 + (tr(K^{-1} C) + (fhat - mu)^T K^{-1} (fhat - mu)) / 2.
ScalePosterior update_scale(const Vector& fhat, const Matrix& cov, const Matrix& k, const Vector& mu,
                            const ScalePosterior& prior);

/// E[log s] = digamma(a) - log(b).
double expected_log_scale(const ScalePosterior& sp);

/// K(X, X) plus the default jitter on the diagonal.
Matrix jittered_kernel(const Matrix& features, const KernelConfig& cfg, double* jitter_out = nullptr);

/// Alternates linearize -> update_f -> update_scale until the largest change
/// in fhat drops below `tol` or `max_iter` is reached.
FullVbResult fit_full_vb(const Matrix& features, std::span<const PreferencePair> pairs,
                         const KernelConfig& cfg, const FullVbOptions& opts = {});

}  // namespace gppl

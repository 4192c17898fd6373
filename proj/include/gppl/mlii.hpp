#pragma once

#include "gppl/inference.hpp"

#include <span>
#include <string>
#include <vector>

namespace gppl {

/// Everything the lower bound depends on: the prior matrix, q(f), the frozen
/// likelihood linearization and q(s).
struct BoundState {
  Matrix k;
  Vector fhat;
  Matrix cov;
  Vector mu;
  LikelihoodApprox approx;
  ScalePosterior scale;
};

/// State at the end of a full-VB fit, with the covariance recomputed under the
/// final E[s] so that cov = (E[s] K^{-1} + G^T Q^{-1} G)^{-1} holds exactly.
BoundState bound_state(const FullVbResult& fit);

/// Same posterior with a new prior matrix `k`: fhat, the linearization and q(s)
/// stay fixed while the covariance is recomputed from `k`. This is the map the
/// analytic length-scale gradient differentiates.
BoundState refreeze(const BoundState& state, const Matrix& k);

struct BoundTerms {
  double likelihood_fit = 0.0;  // -1/2 {P log 2pi + log|Q| + (y - Phi)^T Q^{-1} (y - Phi)}
  double f_prior = 0.0;         // -1/2 {log|K/s| - log|C| + s (f - mu)^T K^{-1} (f - mu)}
  double s_prior = 0.0;         // Gamma prior terms

  double total() const { return likelihood_fit + f_prior + s_prior; }
};

struct BoundReport {
  double value = 0.0;
  BoundTerms terms;
  Vector gradients;  // dL/dl_d
};

BoundTerms lower_bound_terms(const BoundState& state);
double lower_bound(const BoundState& state);

/// sum_k y_k log Phi(zhat_k) + (1 - y_k) log(1 - Phi(zhat_k)): the pairwise
/// log likelihood with its expectation linearized at the posterior mean.
double linearized_log_likelihood(const BoundState& state);

/// Objective driven by optimize_lengthscales: the bound with its likelihood
/// term replaced by linearized_log_likelihood. The Gaussian surrogate's
/// normalizer -1/2 log|Q| grows without limit as predictions saturate, so the
/// surrogate form rewards overfitting once q is refit. Both forms share the
/// f and s terms and therefore the same length-scale gradient.
double mlii_objective(const BoundState& state);

/// dL/dl_d for every feature with q held fixed:
///   -1/2 tr(K^{-1} C (C^{-1} - s K^{-1}) dK) + s/2 (f - mu)^T K^{-1} dK K^{-1} (f - mu)
Vector lengthscale_gradients(const BoundState& state, const Matrix& features, const KernelConfig& cfg);

BoundReport bound_report(const BoundState& state, const Matrix& features, const KernelConfig& cfg);

struct MliiOptions {
  int max_iter = 25;
  double log_span = 5.0;  // box half-width around log of the median heuristic
  FullVbOptions vb;
};

struct MliiStep {
  int iteration = 0;
  double objective = 0.0;  // mlii_objective at the refit
  double bound = 0.0;      // lower_bound at the refit
  Vector lengthscales;
  Vector normalized;  // lengthscales / median heuristic
};

struct MliiResult {
  KernelConfig kernel;          // best seen
  double best_objective = 0.0;
  double initial_objective = 0.0;
  std::vector<MliiStep> history;
  Vector reference;             // median heuristic used for normalization and bounds
  bool improved = false;
  std::string status;
};

/// Bounded quasi-Newton (projected L-BFGS) ascent of mlii_objective over log
/// length-scales. Every objective evaluation refits full VB; gradients are
/// taken at the refit with q frozen.
MliiResult optimize_lengthscales(const Matrix& features, std::span<const PreferencePair> pairs,
                                 const KernelConfig& initial, const MliiOptions& opts = {});

}  // namespace gppl

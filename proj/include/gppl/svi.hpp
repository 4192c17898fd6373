#pragma once

#include "gppl/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gppl {

/// Inducing inputs with their prior and current variational posterior.
struct InducingSet {
  Matrix z;                    // M x D
  Matrix kmm;                  // jittered K(Z, Z)
  Eigen::LLT<Matrix> kmm_chol;
  double jitter = 0.0;
  Vector fhat_m;
  Matrix cov_m;
};

/// Builds K_mm for `z` and initializes q(f_m) to the prior N(0, K_mm / shat).
InducingSet make_inducing_set(Matrix z, const KernelConfig& cfg, double shat);

/// Index of the nearest center (squared Euclidean, lowest index on ties) for
/// every row of `points`. Parallel over points.
std::vector<Index> assign_to_centers(const Matrix& points, const Matrix& centers);

/// Serial reference for assign_to_centers.
std::vector<Index> assign_to_centers_serial(const Matrix& points, const Matrix& centers);

/// K-means++ seeding followed by at most `max_lloyd` Lloyd iterations.
Matrix select_inducing(const Matrix& features, Index m, std::uint64_t seed, int max_lloyd = 20);

/// rho_t = t^-u.
double step_size(int t, double forgetting);

struct SviStepInfo {
  double rho = 0.0;
  double max_change = 0.0;  // largest |delta fhat_m|
};

/// One stochastic update from `minibatch`, a sample of `total_pairs` pairs.
/// Local estimates of (fhat_m, C_m) are formed from the minibatch likelihood
/// projected onto the inducing points through A = K_nm K_mm^{-1}, with the
/// data terms scaled by P / P_n, then blended with weight rho_t. The scale
/// posterior is refreshed from the blended inducing posterior.
SviStepInfo svi_step(InducingSet& inducing, ScalePosterior& scale, const Matrix& features,
                     std::span<const PreferencePair> minibatch, Index total_pairs, int t,
                     const KernelConfig& cfg, const SviConfig& svi);

struct SviDiagnostics {
  std::vector<double> step_seconds;
  std::vector<double> max_change;
  Index inducing_used = 0;
};

/// Selects inducing points and runs `max_steps` minibatch updates. Minibatches
/// walk a seeded permutation of the pairs that is reshuffled every epoch. M is
/// capped at the number of items.
ModelState fit_svi(const Matrix& features, std::span<const PreferencePair> pairs, const KernelConfig& cfg,
                   double a0, double b0, const SviConfig& svi, SviDiagnostics* diag = nullptr);

}  // namespace gppl

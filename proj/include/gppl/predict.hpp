#pragma once

#include "gppl/likelihood.hpp"
#include "gppl/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gppl {

struct Prediction {
  Vector fmean;
  Vector fvar;                 // clamped at 0
  std::optional<Matrix> cov;   // requested with full_cov
};

/// Caches the inducing-point factorization so many queries against one model
/// share it.
///
///   fmean = K_*m K_mm^{-1} fhat_m
///   cov   = K_** / s - K_*m K_mm^{-1} (K_mm / s - C_m) K_mm^{-1} K_m*
///
/// with s = E[s] and the jitter of K_mm applied as a nugget to test points
/// that coincide with inducing inputs.
class Predictor {
 public:
  explicit Predictor(ModelState model);

  Prediction predict(const Matrix& test, bool full_cov = false) const;

  /// Probability that item i beats item j for each pair, accounting for the
  /// joint posterior covariance of the two items.
  std::vector<double> classify(const Matrix& features, std::span<const PreferencePair> pairs) const;

  const ModelState& model() const { return model_; }

 private:
  Matrix projection(const Matrix& test) const;

  ModelState model_;
  Eigen::LLT<Matrix> kmm_chol_;
  Matrix residual_cov_;  // K_mm / s - C_m
  double shat_ = 1.0;
};

Prediction predict_f(const ModelState& model, const Matrix& test, bool full_cov = false);

struct RankedItem {
  std::string id;
  double score = 0.0;
  double stdev = 0.0;
};

/// Items sorted by descending posterior mean; ties by ascending identifier.
std::vector<RankedItem> rank(const ModelState& model, const ItemSet& items);

/// Phi((f_i - f_j) / sqrt(2 + C_ii + C_jj - 2 C_ij)).
double classify_probability(double f_i, double f_j, double c_ii, double c_jj, double c_ij);

double classify_pair(const ModelState& model, const Matrix& features, Index i, Index j);

/// Shannon entropy in bits of a Bernoulli(p) prediction.
double pair_entropy(double p);

}  // namespace gppl

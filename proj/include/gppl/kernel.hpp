#pragma once

#include "gppl/types.hpp"

#include <cstdint>

namespace gppl {

enum class KernelFamily { Matern32 };

/// ARD product kernel: k(x, x') = prod_d matern32(|x_d - x'_d| / l_d).
struct KernelConfig {
  KernelFamily family = KernelFamily::Matern32;
  Vector lengthscales;

  Index dim() const { return lengthscales.size(); }

  /// Throws std::invalid_argument unless every length-scale is positive and
  /// finite and, when `feature_dim` is non-negative, the sizes agree.
  void validate(Index feature_dim = -1) const;
};

/// (1 + sqrt(3) r) exp(-sqrt(3) r) for a scaled distance r >= 0.
double matern32(double r);

/// d/dl of matern32(dist / l).
double matern32_lengthscale_derivative(double dist, double lengthscale);

double kernel_value(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                    const KernelConfig& cfg);

/// Cross-kernel matrix between the rows of `a` and the rows of `b`. Rows are
/// assembled in parallel; every entry is evaluated in the same order as
/// kernel_matrix_serial so the two agree bit for bit.
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelConfig& cfg);

/// Single-threaded reference assembly.
Matrix kernel_matrix_serial(const Matrix& a, const Matrix& b, const KernelConfig& cfg);

/// Per-feature median of |x_id - x_jd| over all ordered pairs (i = j included),
/// divided by D. A zero median falls back to the mean nonzero distance / D, or
/// 1.0 when the feature is constant. More than `max_items` rows are
/// subsampled uniformly with `seed`.
Vector median_heuristic(const Matrix& features, Index max_items = 1000, std::uint64_t seed = 0);

/// dK/dl_d for K = kernel_matrix(X, X). `feature` is zero-based.
Matrix kernel_gradient_lengthscale(const Matrix& features, Index feature, const KernelConfig& cfg);

/// Default diagonal jitter: 1e-6 times the mean of the diagonal.
double default_jitter(const Matrix& k);

/// Prior covariance between test rows and inducing rows: kernel_matrix plus
/// `nugget` wherever a test row coincides exactly with an inducing row. The
/// nugget makes predictions at the inducing inputs reproduce the jittered
/// inducing prior.
Matrix prior_cross_covariance(const Matrix& test, const Matrix& inducing, const KernelConfig& cfg,
                              double nugget);

}  // namespace gppl

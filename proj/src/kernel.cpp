#include "gppl/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace gppl {
namespace {

constexpr double kSqrt3 = 1.7320508075688772;

// Shared by the serial and parallel assemblies so both evaluate each entry
// with exactly the same sequence of floating point operations.
inline double product_kernel(const Matrix& a, Index row_a, const Matrix& b, Index row_b,
                             const Vector& lengthscales) {
  double value = 1.0;
  for (Index d = 0; d < lengthscales.size(); ++d) {
    const double r = std::abs(a(row_a, d) - b(row_b, d)) / lengthscales[d];
    value *= (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
  }
  return value;
}

void check_dims(const Matrix& a, const Matrix& b, const KernelConfig& cfg) {
  cfg.validate();
  if (a.cols() != cfg.dim() || b.cols() != cfg.dim()) {
    throw std::invalid_argument("kernel: feature dimension " + std::to_string(a.cols()) + "/" +
                                std::to_string(b.cols()) + " does not match " +
                                std::to_string(cfg.dim()) + " length-scales");
  }
}

}  // namespace

void KernelConfig::validate(Index feature_dim) const {
  if (lengthscales.size() == 0) throw std::invalid_argument("kernel: no length-scales");
  for (Index d = 0; d < lengthscales.size(); ++d) {
    if (!(lengthscales[d] > 0.0) || !std::isfinite(lengthscales[d])) {
      throw std::invalid_argument("kernel: length-scale " + std::to_string(d) +
                                  " must be positive and finite");
    }
  }
  if (feature_dim >= 0 && feature_dim != lengthscales.size()) {
    throw std::invalid_argument("kernel: expected " + std::to_string(lengthscales.size()) +
                                " features, got " + std::to_string(feature_dim));
  }
}

double matern32(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("matern32: scaled distance must be finite and non-negative");
  }
  return (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
}

double matern32_lengthscale_derivative(double dist, double lengthscale) {
  const double l3 = lengthscale * lengthscale * lengthscale;
  return 3.0 * dist * dist / l3 * std::exp(-kSqrt3 * dist / lengthscale);
}

double kernel_value(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                    const KernelConfig& cfg) {
  cfg.validate();
  if (x.size() != cfg.dim() || y.size() != cfg.dim()) {
    throw std::invalid_argument("kernel_value: dimension mismatch");
  }
  double value = 1.0;
  for (Index d = 0; d < cfg.dim(); ++d) {
    value *= matern32(std::abs(x[d] - y[d]) / cfg.lengthscales[d]);
  }
  return value;
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelConfig& cfg) {
  check_dims(a, b, cfg);
  Matrix k(a.rows(), b.rows());
  const Index rows = a.rows();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < b.rows(); ++j) k(i, j) = product_kernel(a, i, b, j, cfg.lengthscales);
  }
  return k;
}

Matrix kernel_matrix_serial(const Matrix& a, const Matrix& b, const KernelConfig& cfg) {
  check_dims(a, b, cfg);
  Matrix k(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) k(i, j) = product_kernel(a, i, b, j, cfg.lengthscales);
  }
  return k;
}

Vector median_heuristic(const Matrix& features, Index max_items, std::uint64_t seed) {
  if (features.rows() < 2) throw std::invalid_argument("median_heuristic: need at least 2 items");
  const Index dim = features.cols();

  std::vector<Index> rows(static_cast<std::size_t>(features.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  if (max_items >= 2 && features.rows() > max_items) {
    std::vector<Index> picked;
    picked.reserve(static_cast<std::size_t>(max_items));
    std::mt19937_64 rng(seed);
    std::sample(rows.begin(), rows.end(), std::back_inserter(picked), max_items, rng);
    rows = std::move(picked);
  }
  const std::size_t n = rows.size();

  Vector out(dim);
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (Index d = 0; d < dim; ++d) {
    dists.clear();
    double nonzero_sum = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dist = std::abs(features(rows[i], d) - features(rows[j], d));
        dists.push_back(dist);
        if (dist > 0.0) {
          nonzero_sum += dist;
          ++nonzero;
        }
      }
    }
    // The ordered-pair multiset is n zeros (i = j) followed by every unordered
    // distance twice, so position p >= n maps to unordered rank (p - n) / 2.
    auto ordered_at = [&](std::size_t p) {
      if (p < n) return 0.0;
      auto it = dists.begin() + static_cast<std::ptrdiff_t>((p - n) / 2);
      std::nth_element(dists.begin(), it, dists.end());
      return *it;
    };
    const std::size_t total = n * n;
    double median = total % 2 == 1 ? ordered_at(total / 2)
                                   : 0.5 * (ordered_at(total / 2 - 1) + ordered_at(total / 2));
    if (median > 0.0) {
      out[d] = median / static_cast<double>(dim);
    } else if (nonzero > 0) {
      out[d] = nonzero_sum / static_cast<double>(nonzero) / static_cast<double>(dim);
    } else {
      out[d] = 1.0;
    }
  }
  return out;
}

Matrix kernel_gradient_lengthscale(const Matrix& features, Index feature, const KernelConfig& cfg) {
  check_dims(features, features, cfg);
  if (feature < 0 || feature >= cfg.dim()) {
    throw std::out_of_range("kernel_gradient_lengthscale: feature index out of range");
  }
  const Index n = features.rows();
  Matrix grad(n, n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double others = 1.0;
      for (Index d = 0; d < cfg.dim(); ++d) {
        if (d == feature) continue;
        const double r = std::abs(features(i, d) - features(j, d)) / cfg.lengthscales[d];
        others *= (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
      }
      const double dist = std::abs(features(i, feature) - features(j, feature));
      grad(i, j) = others * matern32_lengthscale_derivative(dist, cfg.lengthscales[feature]);
    }
  }
  return grad;
}

double default_jitter(const Matrix& k) {
  if (k.rows() == 0) return 1e-6;
  return 1e-6 * k.diagonal().mean();
}

Matrix prior_cross_covariance(const Matrix& test, const Matrix& inducing, const KernelConfig& cfg,
                              double nugget) {
  Matrix k = kernel_matrix(test, inducing, cfg);
  if (nugget == 0.0) return k;
  for (Index i = 0; i < test.rows(); ++i) {
    for (Index m = 0; m < inducing.rows(); ++m) {
      if (test.row(i) == inducing.row(m)) k(i, m) += nugget;
    }
  }
  return k;
}

}  // namespace gppl

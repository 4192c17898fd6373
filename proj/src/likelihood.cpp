#include "gppl/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gppl {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double preference_probability(double f_i, double f_j) {
  if (!std::isfinite(f_i) || !std::isfinite(f_j)) {
    throw std::invalid_argument("preference_probability: non-finite score");
  }
  return std_normal_cdf((f_i - f_j) / std::numbers::sqrt2);
}

double soft_label(PreferenceLabel label) {
  switch (label) {
    case PreferenceLabel::FirstPreferred:
      return 1.0;
    case PreferenceLabel::SecondPreferred:
      return 0.0;
    case PreferenceLabel::Undecided:
      return 0.5;
  }
  return 0.5;
}

LikelihoodApprox linearize(const Vector& fhat, std::span<const PreferencePair> pairs) {
  const Index p = static_cast<Index>(pairs.size());
  LikelihoodApprox approx;
  approx.first.resize(pairs.size());
  approx.second.resize(pairs.size());
  approx.slope.resize(p);
  approx.zhat.resize(p);
  approx.prob.resize(p);
  approx.q.resize(p);
  approx.y.resize(p);
  for (Index k = 0; k < p; ++k) {
    const auto& pair = pairs[static_cast<std::size_t>(k)];
    if (pair.i < 0 || pair.j < 0 || pair.i >= fhat.size() || pair.j >= fhat.size()) {
      throw std::out_of_range("linearize: pair " + std::to_string(k) + " has an invalid item index");
    }
    if (!std::isfinite(fhat[pair.i]) || !std::isfinite(fhat[pair.j])) {
      throw std::invalid_argument("linearize: non-finite linearization point");
    }
    const double z = (fhat[pair.i] - fhat[pair.j]) / std::numbers::sqrt2;
    const double phi = std_normal_cdf(z);
    approx.first[static_cast<std::size_t>(k)] = pair.i;
    approx.second[static_cast<std::size_t>(k)] = pair.j;
    approx.zhat[k] = z;
    approx.prob[k] = phi;
    approx.slope[k] = std_normal_pdf(z) / std::numbers::sqrt2;
    approx.q[k] = std::max(phi * (1.0 - phi), kMinObservationVariance);
    approx.y[k] = soft_label(pair.label);
  }
  return approx;
}

Matrix LikelihoodApprox::dense_g(Index n_items) const {
  Matrix g = Matrix::Zero(size(), n_items);
  for (Index k = 0; k < size(); ++k) {
    g(k, first[static_cast<std::size_t>(k)]) += slope[k];
    g(k, second[static_cast<std::size_t>(k)]) -= slope[k];
  }
  return g;
}

Matrix LikelihoodApprox::precision(Index n_items) const {
  Matrix w = Matrix::Zero(n_items, n_items);
  for (Index k = 0; k < size(); ++k) {
    const Index i = first[static_cast<std::size_t>(k)];
    const Index j = second[static_cast<std::size_t>(k)];
    const double v = slope[k] * slope[k] / q[k];
    w(i, i) += v;
    w(j, j) += v;
    w(i, j) -= v;
    w(j, i) -= v;
  }
  return w;
}

Vector LikelihoodApprox::weighted_residual(Index n_items, const Vector& mu) const {
  Vector b = Vector::Zero(n_items);
  for (Index k = 0; k < size(); ++k) {
    const Index i = first[static_cast<std::size_t>(k)];
    const Index j = second[static_cast<std::size_t>(k)];
    // G (fhat - mu) for row k: slope * (fhat_i - fhat_j - (mu_i - mu_j)).
    const double g_centered = slope[k] * (std::numbers::sqrt2 * zhat[k] - (mu[i] - mu[j]));
    const double r = (y[k] - prob[k] + g_centered) / q[k];
    b[i] += slope[k] * r;
    b[j] -= slope[k] * r;
  }
  return b;
}

}  // namespace gppl

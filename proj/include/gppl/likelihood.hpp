#pragma once

#include "gppl/types.hpp"

#include <span>
#include <vector>

namespace gppl {

enum class PreferenceLabel { FirstPreferred, SecondPreferred, Undecided };

/// One pairwise judgment between items i and j.
struct PreferencePair {
  Index i = 0;
  Index j = 0;
  PreferenceLabel label = PreferenceLabel::FirstPreferred;

  bool operator==(const PreferencePair&) const = default;
};

double std_normal_cdf(double z);
double std_normal_pdf(double z);

/// Phi((f_i - f_j) / sqrt(2)): probability that i beats j.
double preference_probability(double f_i, double f_j);

/// 1 for FirstPreferred, 0 for SecondPreferred, 0.5 for Undecided.
double soft_label(PreferenceLabel label);

/// Gaussian approximation N(y; G f, Q) of the pairwise likelihood around a
/// linearization point. G is stored by rows: row k is +slope[k] at first[k]
/// and -slope[k] at second[k].
struct LikelihoodApprox {
  std::vector<Index> first;
  std::vector<Index> second;
  Vector slope;  // phi(z_k) / sqrt(2)
  Vector zhat;   // (f_i - f_j) / sqrt(2) at the linearization point
  Vector prob;   // Phi(zhat)
  Vector q;      // diagonal of Q
  Vector y;      // soft labels

  Index size() const { return static_cast<Index>(first.size()); }

  /// Dense P x N copy of G (tests and small problems only).
  Matrix dense_g(Index n_items) const;

  /// G^T Q^{-1} G, N x N.
  Matrix precision(Index n_items) const;

  /// G^T Q^{-1} (y - Phi(zhat) + G (fhat - mu)), with fhat the linearization
  /// point recovered from zhat.
  Vector weighted_residual(Index n_items, const Vector& mu) const;
};

constexpr double kMinObservationVariance = 1e-10;

/// Linearizes Phi(z(f)) around `fhat` for each pair.
LikelihoodApprox linearize(const Vector& fhat, std::span<const PreferencePair> pairs);

}  // namespace gppl

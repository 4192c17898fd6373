#pragma once

#include "gppl/inference.hpp"
#include "gppl/likelihood.hpp"
#include "gppl/model.hpp"
#include "gppl/predict.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gppl {

enum class Strategy { Uncertainty, Random };

struct ActiveConfig {
  Index init_labels = 2;
  Index batch = 2;
  Index budget = 400;
  Strategy strategy = Strategy::Uncertainty;
  std::uint64_t seed = 0;
  std::vector<PreferencePair> eval_pairs;  // held out, never queried
  double a0 = 2.0;
  double b0 = 200.0;
  bool use_svi = false;     // full VB otherwise
  SviConfig svi;
  bool warm_start = false;  // full VB only: start from the previous round's mean

  void validate() const;
};

struct CurvePoint {
  Index labels_used = 0;
  double accuracy = 0.0;
};

/// Indices of the `n` entries whose probabilities have the highest entropy,
/// i.e. smallest |p - 0.5|. Ties keep pool order. n larger than the pool
/// returns the whole pool.
std::vector<std::size_t> uncertainty_select(std::span<const double> probabilities, std::size_t n);

/// Same, scoring `pool` with the model's pair classifications.
std::vector<std::size_t> uncertainty_select(const Predictor& model, const Matrix& features,
                                            std::span<const PreferencePair> pool, std::size_t n);

/// Fraction of decided pairs whose direction is predicted correctly. A
/// probability of exactly 0.5 counts as wrong. Undecided pairs are skipped.
double pairwise_accuracy(const Predictor& model, const Matrix& features,
                         std::span<const PreferencePair> pairs);

/// Simulated annotation loop: seed with `init_labels` random pool pairs, then
/// repeatedly refit, score the held-out pairs, and reveal `batch` more oracle
/// labels chosen by the strategy until `budget` labels are used or the pool
/// runs out.
std::vector<CurvePoint> simulate(const Matrix& features, std::span<const PreferencePair> oracle_pool,
                                 const KernelConfig& cfg, const ActiveConfig& active);

}  // namespace gppl

#pragma once

#include "gppl/inference.hpp"
#include "gppl/kernel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gppl {

struct SviConfig {
  Index inducing = 500;      // M
  Index batch_pairs = 200;   // P_n
  double forgetting = 0.9;   // u in rho_t = t^-u
  int max_steps = 200;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless M >= 1, P_n >= 1, 0.5 < u <= 1.
  void validate() const;
};

/// A fitted preference model summarized by its inducing-point posterior.
/// Zero prior mean. Immutable once fitted.
struct ModelState {
  static constexpr int kFormatVersion = 1;

  KernelConfig kernel;
  double a0 = 2.0;
  double b0 = 200.0;
  SviConfig svi;
  Matrix inducing;   // Z, M x D
  Vector fhat_m;
  Matrix cov_m;
  ScalePosterior scale;
  double jitter = 0.0;   // added to the diagonal of K_mm
  Index dim = 0;
  std::uint64_t vocab_hash = 0;
  int steps = 0;

  Index num_inducing() const { return inducing.rows(); }
};

/// FNV-1a over the item identifiers, in order.
std::uint64_t vocabulary_hash(const std::vector<std::string>& ids);

/// Wraps a full-VB fit as a model whose inducing inputs are the training items.
ModelState model_from_full_vb(const Matrix& features, const FullVbResult& fit, const KernelConfig& cfg,
                              double a0, double b0);

}  // namespace gppl

#include "gppl/model.hpp"

#include <stdexcept>

namespace gppl {

void SviConfig::validate() const {
  if (inducing < 1) throw std::invalid_argument("svi: inducing count must be >= 1");
  if (batch_pairs < 1) throw std::invalid_argument("svi: minibatch size must be >= 1");
  if (!(forgetting > 0.5 && forgetting <= 1.0)) {
    throw std::invalid_argument("svi: forgetting rate must lie in (0.5, 1]");
  }
  if (max_steps < 0) throw std::invalid_argument("svi: max_steps must be non-negative");
}

std::uint64_t vocabulary_hash(const std::vector<std::string>& ids) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& id : ids) {
    for (char c : id) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

ModelState model_from_full_vb(const Matrix& features, const FullVbResult& fit, const KernelConfig& cfg,
                              double a0, double b0) {
  if (fit.posterior.mu.size() > 0 && !fit.posterior.mu.isZero(0.0)) {
    throw std::invalid_argument("model_from_full_vb: only zero prior mean is supported");
  }
  ModelState m;
  m.kernel = cfg;
  m.a0 = a0;
  m.b0 = b0;
  m.svi.inducing = features.rows();
  m.inducing = features;
  m.fhat_m = fit.posterior.fhat;
  m.cov_m = fit.posterior.cov;
  m.scale = fit.scale;
  m.jitter = fit.jitter;
  m.dim = features.cols();
  m.steps = fit.iterations;
  return m;
}

}  // namespace gppl

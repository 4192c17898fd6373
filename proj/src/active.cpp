#include "gppl/active.hpp"

#include "gppl/svi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

namespace gppl {

void ActiveConfig::validate() const {
  if (init_labels < 1) throw std::invalid_argument("active: init_labels must be >= 1");
  if (batch < 1) throw std::invalid_argument("active: batch must be >= 1");
  if (budget < init_labels) throw std::invalid_argument("active: budget must be >= init_labels");
}

std::vector<std::size_t> uncertainty_select(std::span<const double> probabilities, std::size_t n) {
  std::vector<std::size_t> order(probabilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::abs(probabilities[l] - 0.5) < std::abs(probabilities[r] - 0.5);
  });
  if (n < order.size()) order.resize(n);
  return order;
}

std::vector<std::size_t> uncertainty_select(const Predictor& model, const Matrix& features,
                                            std::span<const PreferencePair> pool, std::size_t n) {
  const std::vector<double> probs = model.classify(features, pool);
  return uncertainty_select(probs, n);
}

double pairwise_accuracy(const Predictor& model, const Matrix& features,
                         std::span<const PreferencePair> pairs) {
  const std::vector<double> probs = model.classify(features, pairs);
  std::size_t correct = 0;
  std::size_t decided = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (pairs[k].label == PreferenceLabel::Undecided) continue;
    ++decided;
    const bool first = pairs[k].label == PreferenceLabel::FirstPreferred;
    if ((first && probs[k] > 0.5) || (!first && probs[k] < 0.5)) ++correct;
  }
  return decided ? static_cast<double>(correct) / static_cast<double>(decided) : 0.0;
}

std::vector<CurvePoint> simulate(const Matrix& features, std::span<const PreferencePair> oracle_pool,
                                 const KernelConfig& cfg, const ActiveConfig& active) {
  active.validate();
  if (oracle_pool.empty()) throw std::invalid_argument("simulate: empty oracle pool");
  std::mt19937_64 rng(active.seed);

  std::vector<PreferencePair> pool(oracle_pool.begin(), oracle_pool.end());
  std::vector<PreferencePair> labeled;

  auto take = [&](std::vector<std::size_t> picks) {
    std::sort(picks.begin(), picks.end());
    for (std::size_t k : picks) labeled.push_back(pool[k]);
    for (auto it = picks.rbegin(); it != picks.rend(); ++it) {
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(*it));
    }
  };
  auto random_picks = [&](std::size_t n) {
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(n, idx.size()));
    return idx;
  };

  take(random_picks(static_cast<std::size_t>(active.init_labels)));

  std::vector<CurvePoint> curve;
  std::optional<Vector> previous_mean;
  while (true) {
    ModelState model;
    if (active.use_svi) {
      model = fit_svi(features, labeled, cfg, active.a0, active.b0, active.svi);
    } else {
      FullVbOptions opts;
      opts.a0 = active.a0;
      opts.b0 = active.b0;
      if (active.warm_start) opts.init_fhat = previous_mean;
      const FullVbResult fit = fit_full_vb(features, labeled, cfg, opts);
      previous_mean = fit.posterior.fhat;
      model = model_from_full_vb(features, fit, cfg, active.a0, active.b0);
    }
    const Predictor predictor(std::move(model));
    curve.push_back({static_cast<Index>(labeled.size()),
                     pairwise_accuracy(predictor, features, active.eval_pairs)});

    const Index remaining = active.budget - static_cast<Index>(labeled.size());
    if (remaining <= 0 || pool.empty()) break;
    const std::size_t n = static_cast<std::size_t>(std::min(active.batch, remaining));
    if (active.strategy == Strategy::Uncertainty) {
      take(uncertainty_select(predictor, features, pool, n));
    } else {
      take(random_picks(n));
    }
  }
  return curve;
}

}  // namespace gppl

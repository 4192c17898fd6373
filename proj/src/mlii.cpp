#include "gppl/mlii.hpp"

#include "gppl/errors.hpp"
#include "gppl/linalg.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gppl {

BoundState bound_state(const FullVbResult& fit) {
  BoundState st;
  st.k = fit.posterior.k;
  st.fhat = fit.posterior.fhat;
  st.mu = fit.posterior.mu;
  st.approx = fit.approx;
  st.scale = fit.scale;
  return refreeze(st, st.k);
}

BoundState refreeze(const BoundState& state, const Matrix& k) {
  BoundState out = state;
  out.k = k;
  out.cov = update_f(state.approx, k, state.scale.mean(), state.mu).cov;
  return out;
}

BoundTerms lower_bound_terms(const BoundState& st) {
  const auto& ap = st.approx;
  const double shat = st.scale.mean();
  const Index n = st.k.rows();
  BoundTerms t;

  double log_q = 0.0;
  double fit_sq = 0.0;
  for (Index k = 0; k < ap.size(); ++k) {
    log_q += std::log(ap.q[k]);
    const double r = ap.y[k] - ap.prob[k];
    fit_sq += r * r / ap.q[k];
  }
  t.likelihood_fit = -0.5 * (static_cast<double>(ap.size()) * std::log(2.0 * std::numbers::pi) + log_q + fit_sq);

  const JitteredCholesky k_chol = robust_cholesky(st.k);
  const JitteredCholesky c_chol = robust_cholesky(st.cov);
  const Vector centered = st.fhat - st.mu;
  const double log_det_k_scaled = k_chol.log_det() - static_cast<double>(n) * std::log(shat);
  t.f_prior = -0.5 * (log_det_k_scaled - c_chol.log_det() + shat * centered.dot(k_chol.solve(centered)));

  const auto& s = st.scale;
  t.s_prior = -std::lgamma(s.prior_a) + s.prior_a * std::log(s.prior_b) +
              (s.prior_a - s.a) * expected_log_scale(s) + std::lgamma(s.a) + (s.b - s.prior_b) * shat -
              s.a * std::log(s.b);
  return t;
}

double lower_bound(const BoundState& state) { return lower_bound_terms(state).total(); }

double linearized_log_likelihood(const BoundState& state) {
  const auto& ap = state.approx;
  double ll = 0.0;
  for (Index k = 0; k < ap.size(); ++k) {
    const Index i = ap.first[static_cast<std::size_t>(k)];
    const Index j = ap.second[static_cast<std::size_t>(k)];
    const double z = (state.fhat[i] - state.fhat[j]) / std::numbers::sqrt2;
    // log Phi(z) and log(1 - Phi(z)) = log Phi(-z), both via erfc for range.
    const double log_p = std::log(std_normal_cdf(z));
    const double log_not_p = std::log(std_normal_cdf(-z));
    const double y = ap.y[k];
    if (y > 0.0) ll += y * std::max(log_p, -745.0);
    if (y < 1.0) ll += (1.0 - y) * std::max(log_not_p, -745.0);
  }
  return ll;
}

double mlii_objective(const BoundState& state) {
  const BoundTerms t = lower_bound_terms(state);
  return linearized_log_likelihood(state) + t.f_prior + t.s_prior;
}

Vector lengthscale_gradients(const BoundState& st, const Matrix& features, const KernelConfig& cfg) {
  cfg.validate(features.cols());
  const double shat = st.scale.mean();
  const JitteredCholesky k_chol = robust_cholesky(st.k);
  const Matrix k_inv = k_chol.inverse();
  const Vector alpha = k_chol.solve(Vector(st.fhat - st.mu));
  // dL/dl = 1/2 sum_ij [s (K^{-1} C K^{-1} + alpha alpha^T) - K^{-1}]_ij (dK/dl)_ij
  const Matrix weight = shat * (k_inv * st.cov * k_inv + alpha * alpha.transpose()) - k_inv;
  Vector grad(cfg.dim());
  for (Index d = 0; d < cfg.dim(); ++d) {
    grad[d] = 0.5 * weight.cwiseProduct(kernel_gradient_lengthscale(features, d, cfg)).sum();
  }
  return grad;
}

BoundReport bound_report(const BoundState& state, const Matrix& features, const KernelConfig& cfg) {
  BoundReport r;
  r.terms = lower_bound_terms(state);
  r.value = r.terms.total();
  r.gradients = lengthscale_gradients(state, features, cfg);
  return r;
}

namespace {

struct Evaluation {
  double value = -std::numeric_limits<double>::infinity();  // objective
  double bound = 0.0;
  Vector grad;                                              // d/d log l at frozen q
  bool ok = false;
};

}  // namespace

MliiResult optimize_lengthscales(const Matrix& features, std::span<const PreferencePair> pairs,
                                 const KernelConfig& initial, const MliiOptions& opts) {
  initial.validate(features.cols());
  MliiResult res;
  res.reference = median_heuristic(features);
  const Index dim = features.cols();
  const Vector lo = res.reference.array().log() - opts.log_span;
  const Vector hi = res.reference.array().log() + opts.log_span;
  auto clamp = [&](Vector x) { return Vector(x.cwiseMax(lo).cwiseMin(hi)); };

  KernelConfig cfg = initial;
  auto evaluate = [&](const Vector& theta) {
    Evaluation e;
    cfg.lengthscales = theta.array().exp();
    try {
      const BoundState st = bound_state(fit_full_vb(features, pairs, cfg, opts.vb));
      e.value = mlii_objective(st);
      e.bound = lower_bound(st);
      e.grad = lengthscale_gradients(st, features, cfg).cwiseProduct(cfg.lengthscales);
      e.ok = std::isfinite(e.value) && e.grad.allFinite();
    } catch (const SingularModelError&) {
      e.ok = false;
    }
    if (!e.ok) e.value = -std::numeric_limits<double>::infinity();
    return e;
  };
  auto record = [&](int iteration, const Evaluation& e, const Vector& theta) {
    MliiStep step;
    step.iteration = iteration;
    step.objective = e.value;
    step.bound = e.bound;
    step.lengthscales = theta.array().exp();
    step.normalized = step.lengthscales.cwiseQuotient(res.reference);
    res.history.push_back(std::move(step));
  };

  // Ascent on the objective, written as descent on its negative.
  const Vector theta0 = initial.lengthscales.array().log();
  Vector x = theta0;  // the starting point is honored even outside the box
  Evaluation cur = evaluate(x);
  if (!cur.ok) throw SingularModelError("optimize_lengthscales: initial fit failed");
  res.initial_objective = cur.value;
  res.best_objective = cur.value;
  res.kernel = initial;
  record(0, cur, x);

  std::deque<std::pair<Vector, Vector>> memory;  // (s, y) for the negated objective
  constexpr std::size_t kMemory = 5;
  res.status = "reached iteration cap";
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const Vector g = -cur.grad;
    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    Eigen::Array<bool, Eigen::Dynamic, 1> free(dim);
    for (Index d = 0; d < dim; ++d) {
      free[d] = !((x[d] <= lo[d] && g[d] > 0.0) || (x[d] >= hi[d] && g[d] < 0.0));
    }
    Vector pg = free.select(g, 0.0);
    if (pg.cwiseAbs().maxCoeff() < 1e-10) {
      res.status = "converged";
      break;
    }

    // Two-loop recursion.
    Vector q = pg;
    std::vector<double> alphas(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      alphas[k] = s.dot(q) / y.dot(s);
      q -= alphas[k] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.dot(y);
    } else {
      q /= pg.cwiseAbs().maxCoeff();  // unit move in log space for the first step
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[k] - beta) * s;
    }
    Vector dir = free.select(-q, 0.0);
    if (dir.dot(pg) >= 0.0) {
      dir = -pg / pg.cwiseAbs().maxCoeff();
      memory.clear();
    }

    double step = 1.0;
    bool accepted = false;
    Vector best_x;
    Evaluation best_e;
    for (int ls = 0; ls < 12; ++ls, step *= 0.5) {
      const Vector xn = clamp(x + step * dir);
      if ((xn - x).cwiseAbs().maxCoeff() < 1e-12) break;
      Evaluation e = evaluate(xn);
      if (!e.ok) continue;
      if (e.value > best_e.value) {
        best_e = e;
        best_x = xn;
      }
      // Armijo on the negated objective.
      if (-e.value <= -cur.value + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted && !(best_e.ok && best_e.value > cur.value)) {
      res.status = "line search made no progress";
      break;
    }
    const Vector s = best_x - x;
    const Vector y = -best_e.grad - g;
    if (s.dot(y) > 1e-12) {
      memory.emplace_back(s, y);
      if (memory.size() > kMemory) memory.pop_front();
    }
    x = best_x;
    cur = best_e;
    record(iter, cur, x);
    if (cur.value > res.best_objective) {
      res.best_objective = cur.value;
      res.kernel.lengthscales = x.array().exp();
      res.improved = true;
    }
  }
  if (!res.improved) res.status = "warning: no improvement over the initial length-scales (" + res.status + ")";
  return res;
}

}  // namespace gppl

#include "gppl/inference.hpp"

#include "gppl/linalg.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <stdexcept>

namespace gppl {

ScalePosterior ScalePosterior::from_prior(double a0, double b0) {
  if (!(a0 > 0.0) || !(b0 > 0.0)) throw std::invalid_argument("scale prior: a0 and b0 must be positive");
  return ScalePosterior{a0, b0, a0, b0};
}

FUpdate update_f(const LikelihoodApprox& approx, const Matrix& k, double shat, const Vector& mu) {
  if (!(shat > 0.0) || !std::isfinite(shat)) throw std::invalid_argument("update_f: shat must be positive");
  const Index n = k.rows();
  if (k.cols() != n || mu.size() != n) throw std::invalid_argument("update_f: dimension mismatch");

  const JitteredCholesky chol = robust_cholesky(k);
  const Matrix lower = Matrix(chol.llt.matrixL()) / std::sqrt(shat);

  FUpdate out;
  if (approx.size() == 0) {
    out.cov = lower * lower.transpose();
    out.fhat = mu;
    return out;
  }

  const Matrix w = approx.precision(n);
  Matrix b = lower.transpose() * w * lower;
  b.diagonal().array() += 1.0;
  const JitteredCholesky b_chol = robust_cholesky(symmetrize(b));
  // C = L B^{-1} L^T = V^T V with V = R^{-1} L^T, B = R R^T.
  const Matrix v = b_chol.llt.matrixL().solve(lower.transpose());
  out.cov = v.transpose() * v;
  out.fhat = mu + out.cov * approx.weighted_residual(n, mu);
  return out;
}

ScalePosterior update_scale(const Vector& fhat, const Matrix& cov, const Matrix& k, const Vector& mu,
                            const ScalePosterior& prior) {
  const Index n = k.rows();
  if (fhat.size() != n || mu.size() != n || cov.rows() != n || cov.cols() != n) {
    throw std::invalid_argument("update_scale: dimension mismatch");
  }
  ScalePosterior out = prior;
  out.a = prior.prior_a + 0.5 * static_cast<double>(n);
  if (n == 0) {
    out.b = prior.prior_b;
    return out;
  }
  const JitteredCholesky chol = robust_cholesky(k);
  const Vector centered = fhat - mu;
  const double trace = chol.solve(cov).trace();
  const double quad = centered.dot(chol.solve(centered));
  out.b = prior.prior_b + 0.5 * (trace + quad);
  if (!(out.b > 0.0) || !std::isfinite(out.b)) {
    throw std::runtime_error("update_scale: rate is not positive and finite");
  }
  return out;
}

double expected_log_scale(const ScalePosterior& sp) {
  if (!(sp.a > 0.0) || !(sp.b > 0.0)) {
    throw std::invalid_argument("expected_log_scale: shape and rate must be positive");
  }
  return boost::math::digamma(sp.a) - std::log(sp.b);
}

Matrix jittered_kernel(const Matrix& features, const KernelConfig& cfg, double* jitter_out) {
  Matrix k = kernel_matrix(features, features, cfg);
  const double jitter = default_jitter(k);
  k.diagonal().array() += jitter;
  if (jitter_out) *jitter_out = jitter;
  return k;
}

FullVbResult fit_full_vb(const Matrix& features, std::span<const PreferencePair> pairs,
                         const KernelConfig& cfg, const FullVbOptions& opts) {
  const Index n = features.rows();
  if (n < 2) throw std::invalid_argument("fit_full_vb: need at least 2 items");
  cfg.validate(features.cols());

  FullVbResult res;
  res.scale = ScalePosterior::from_prior(opts.a0, opts.b0);
  const ScalePosterior prior = res.scale;
  auto& post = res.posterior;
  post.k = jittered_kernel(features, cfg, &res.jitter);
  post.mu = opts.mu.value_or(Vector::Zero(n));
  if (post.mu.size() != n) throw std::invalid_argument("fit_full_vb: prior mean has wrong length");

  post.fhat = opts.init_fhat.value_or(post.mu);
  res.shat_used = res.scale.mean();
  if (pairs.empty()) {
    res.approx = linearize(post.fhat, pairs);
    auto upd = update_f(res.approx, post.k, res.shat_used, post.mu);
    post.fhat = std::move(upd.fhat);
    post.cov = std::move(upd.cov);
    res.converged = true;
    return res;
  }

  for (int it = 1; it <= opts.max_iter; ++it) {
    res.approx = linearize(post.fhat, pairs);
    res.shat_used = res.scale.mean();
    auto upd = update_f(res.approx, post.k, res.shat_used, post.mu);
    res.scale = update_scale(upd.fhat, upd.cov, post.k, post.mu, prior);
    const double change = (upd.fhat - post.fhat).cwiseAbs().maxCoeff();
    post.fhat = std::move(upd.fhat);
    post.cov = std::move(upd.cov);
    res.iterations = it;
    if (change < opts.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gppl

#include "gppl/predict.hpp"

#include "gppl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace gppl {

Predictor::Predictor(ModelState model) : model_(std::move(model)) {
  const ModelState& m = model_;
  m.kernel.validate(m.dim);
  if (m.num_inducing() == 0) throw std::invalid_argument("predict: model has no inducing points");
  Matrix kmm = kernel_matrix(m.inducing, m.inducing, m.kernel);
  kmm.diagonal().array() += m.jitter;
  JitteredCholesky chol = robust_cholesky(kmm);
  kmm_chol_ = std::move(chol.llt);
  shat_ = m.scale.mean();
  residual_cov_ = kmm / shat_ - m.cov_m;
}

Matrix Predictor::projection(const Matrix& test) const {
  if (test.cols() != model_.dim) {
    throw std::invalid_argument("predict: test features have " + std::to_string(test.cols()) +
                                " columns, model expects " + std::to_string(model_.dim));
  }
  const Matrix k_sm = prior_cross_covariance(test, model_.inducing, model_.kernel, model_.jitter);
  return kmm_chol_.solve(k_sm.transpose()).transpose();
}

Prediction Predictor::predict(const Matrix& test, bool full_cov) const {
  const Matrix a = projection(test);
  const Matrix ad = a * residual_cov_;
  Prediction out;
  out.fmean = a * model_.fhat_m;
  // The Matern product kernel has unit variance at zero distance.
  const double prior_var = (1.0 + model_.jitter) / shat_;
  out.fvar.resize(test.rows());
  for (Index i = 0; i < test.rows(); ++i) {
    out.fvar[i] = std::max(0.0, prior_var - ad.row(i).dot(a.row(i)));
  }
  if (full_cov) {
    Matrix k_ss = kernel_matrix(test, test, model_.kernel);
    k_ss.diagonal().array() += model_.jitter;
    Matrix cov = symmetrize(k_ss / shat_ - ad * a.transpose());
    for (Index i = 0; i < cov.rows(); ++i) cov(i, i) = std::max(0.0, cov(i, i));
    out.cov = std::move(cov);
  }
  return out;
}

std::vector<double> Predictor::classify(const Matrix& features, std::span<const PreferencePair> pairs) const {
  std::unordered_map<Index, Index> local_of;
  std::vector<Index> items;
  auto local = [&](Index g) {
    if (g < 0 || g >= features.rows()) throw std::out_of_range("classify: invalid item index");
    auto [it, inserted] = local_of.try_emplace(g, static_cast<Index>(items.size()));
    if (inserted) items.push_back(g);
    return it->second;
  };
  std::vector<std::pair<Index, Index>> idx;
  idx.reserve(pairs.size());
  for (const auto& p : pairs) idx.emplace_back(local(p.i), local(p.j));

  Matrix x(static_cast<Index>(items.size()), features.cols());
  for (std::size_t r = 0; r < items.size(); ++r) x.row(static_cast<Index>(r)) = features.row(items[r]);
  const Matrix a = projection(x);
  const Matrix ad = a * residual_cov_;
  const Vector mean = a * model_.fhat_m;

  auto cov = [&](Index i, Index j) {
    if (i > j) std::swap(i, j);
    double prior = kernel_value(x.row(i).transpose(), x.row(j).transpose(), model_.kernel);
    if (i == j) prior += model_.jitter;
    return prior / shat_ - ad.row(i).dot(a.row(j));
  };
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : idx) {
    out.push_back(classify_probability(mean[i], mean[j], cov(i, i), cov(j, j), cov(i, j)));
  }
  return out;
}

Prediction predict_f(const ModelState& model, const Matrix& test, bool full_cov) {
  return Predictor(model).predict(test, full_cov);
}

std::vector<RankedItem> rank(const ModelState& model, const ItemSet& items) {
  if (static_cast<Index>(items.ids.size()) != items.size()) {
    throw std::invalid_argument("rank: ids and features disagree in length");
  }
  const Prediction pred = predict_f(model, items.features);
  std::vector<RankedItem> out;
  out.reserve(items.ids.size());
  for (Index i = 0; i < items.size(); ++i) {
    out.push_back({items.ids[static_cast<std::size_t>(i)], pred.fmean[i], std::sqrt(pred.fvar[i])});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedItem& l, const RankedItem& r) {
    if (l.score != r.score) return l.score > r.score;
    return l.id < r.id;
  });
  return out;
}

double classify_probability(double f_i, double f_j, double c_ii, double c_jj, double c_ij) {
  const double spread = std::max(0.0, c_ii + c_jj - 2.0 * c_ij);
  return std_normal_cdf((f_i - f_j) / std::sqrt(2.0 + spread));
}

double classify_pair(const ModelState& model, const Matrix& features, Index i, Index j) {
  const PreferencePair pair{i, j, PreferenceLabel::FirstPreferred};
  return Predictor(model).classify(features, std::span(&pair, 1)).front();
}

double pair_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("pair_entropy: probability outside [0, 1]");
  auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
  return term(p) + term(1.0 - p);
}

}  // namespace gppl

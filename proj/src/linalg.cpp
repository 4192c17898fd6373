#include "gppl/linalg.hpp"

#include "gppl/errors.hpp"

#include <cmath>

namespace gppl {

double log_det(const Eigen::LLT<Matrix>& llt) {
  const auto& l = llt.matrixLLT();
  double sum = 0.0;
  for (Index i = 0; i < l.rows(); ++i) sum += std::log(l(i, i));
  return 2.0 * sum;
}

double JitteredCholesky::log_det() const { return gppl::log_det(llt); }

Matrix JitteredCholesky::inverse() const {
  return llt.solve(Matrix::Identity(llt.rows(), llt.cols()));
}

JitteredCholesky robust_cholesky(const Matrix& a) {
  JitteredCholesky out;
  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) return out;

  const double scale = a.rows() > 0 ? std::abs(a.diagonal().mean()) : 1.0;
  for (double rel = 1e-6; rel <= 1e-2 * (1.0 + 1e-9); rel *= 10.0) {
    Matrix shifted = a;
    shifted.diagonal().array() += rel * scale;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = rel * scale;
      return out;
    }
  }
  throw SingularModelError("Cholesky factorization failed after jitter escalation to 1e-2");
}

}  // namespace gppl

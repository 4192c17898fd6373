#pragma once

#include "gppl/types.hpp"

namespace gppl {

/// Cholesky factor of A + jitter * I.
struct JitteredCholesky {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;

  Matrix solve(const Matrix& rhs) const { return llt.solve(rhs); }
  Vector solve(const Vector& rhs) const { return llt.solve(rhs); }
  double log_det() const;
  Matrix inverse() const;
};

/// Factorizes A, escalating a diagonal jitter from 1e-6 up to 1e-2 (relative
/// to the mean diagonal) by factors of ten. Throws SingularModelError if no
/// level succeeds.
JitteredCholesky robust_cholesky(const Matrix& a);

/// 2 * sum(log(diag(L))) for an already computed factorization.
double log_det(const Eigen::LLT<Matrix>& llt);

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace gppl

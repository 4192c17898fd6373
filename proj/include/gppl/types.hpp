#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gppl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// N items with identifiers and one feature row each.
struct ItemSet {
  std::vector<std::string> ids;
  Matrix features;  // N x D

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
};

}  // namespace gppl

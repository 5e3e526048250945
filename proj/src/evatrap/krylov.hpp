#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace evatrap::detail {

using LinearOperator = std::function<void(const Eigen::VectorXd& in, Eigen::VectorXd& out)>;

struct KrylovOptions {
  int nev = 4;
  int krylov_dim = 40;
  int max_restarts = 300;
  double tolerance = 1e-12;
  std::uint64_t seed = 0x5eed;
};

struct KrylovResult {
  std::vector<double> values;       // descending
  Eigen::MatrixXd vectors;          // unit-norm columns
  std::vector<double> ritz_residuals;
  int restarts = 0;  // Arnoldi update iterations
  bool converged = false;
};

/// Largest-magnitude eigenpairs of an operator with a real spectrum, computed
/// with ARPACK's implicitly restarted Arnoldi (reverse communication).
/// Intended for shift-inverted operators, where the wanted eigenvalues are
/// well separated from the rest. Complex pairs are dropped.
KrylovResult largest_eigenpairs(const LinearOperator& op, Eigen::Index n, const KrylovOptions& options);

}  // namespace evatrap::detail

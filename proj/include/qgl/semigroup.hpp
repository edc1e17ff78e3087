#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "qgl/fem.hpp"

namespace qgl {

struct SemigroupAction {
  Eigen::VectorXd value;    // coefficients of e^{-tH} f
  double error_bound = 0;   // bound on the B-norm of the error
  int krylov_dim = 0;
};

struct SemigroupPair {
  double value = 0;
  double error_bound = 0;
  int krylov_dim = 0;
};

// Lanczos approximation of e^{-tH} f for H = B^{-1} A, in the B inner product.
// The error bound integrates the Lanczos residual against the contraction
// e^{-(t-s) floor} of the exact semigroup, with floor = op.meta.potential_floor.
class HeatPropagator {
 public:
  explicit HeatPropagator(const AssembledOperator& op);

  // tol is relative to ||f||_B; throws InconclusiveError when it cannot be reached.
  SemigroupAction apply(const Eigen::VectorXd& f, double t, double tol = 1e-11, int max_dim = 400) const;
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;  // <u, v>_B

 private:
  const AssembledOperator* op_;
  Eigen::SimplicialLLT<SparseMatrix> mass_;
};

SemigroupPair semigroup_pair(const AssembledOperator& op, const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                             double t, double tol = 1e-11);

}  // namespace qgl

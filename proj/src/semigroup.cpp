#include "qgl/semigroup.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qgl/errors.hpp"

namespace qgl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

HeatPropagator::HeatPropagator(const AssembledOperator& op) : op_(&op) {
  mass_.compute(op.B);
  if (mass_.info() != Eigen::Success) throw InternalError("mass matrix is not positive definite");
}

double HeatPropagator::inner(const VectorXd& u, const VectorXd& v) const { return u.dot(op_->B * v); }

namespace {

// int_0^t exp(-(t-s) floor - s lambda) ds for lambda >= floor.
double damped_integral(double lambda, double floor, double t) {
  const double gap = std::max(0.0, lambda - floor);
  const double lead = std::exp(-t * floor);
  if (gap * t < 1e-12) return lead * t;
  return lead * (-std::expm1(-t * gap)) / gap;
}

}  // namespace

SemigroupAction HeatPropagator::apply(const VectorXd& f, double t, double tol, int max_dim) const {
  if (!(t > 0)) throw PreconditionError("semigroup: t must be > 0");
  const AssembledOperator& op = *op_;
  const int N = op.size();
  const double floor = op.meta.potential_floor;
  max_dim = std::min(max_dim, N);

  SemigroupAction out;
  const VectorXd Bf = op.B * f;
  const double nf = std::sqrt(std::max(0.0, f.dot(Bf)));
  if (nf == 0.0) {
    out.value = VectorXd::Zero(N);
    return out;
  }

  MatrixXd V(N, max_dim), BV(N, max_dim);
  V.col(0) = f / nf;
  BV.col(0) = Bf / nf;
  std::vector<double> alpha, beta;
  Eigen::SelfAdjointEigenSolver<MatrixXd> tri;
  double bound = INFINITY;
  int m = 0;
  double best = INFINITY;
  int stalled = 0;

  auto evaluate = [&](int dim, double b_last) {
    MatrixXd T = MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < dim) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    tri.compute(T);
    // g(s) = e_m^T e^{-sT} e_1 has the fixed sign (-1)^{m-1} for s > 0 (T is a
    // Jacobi matrix with positive off-diagonal), so the integral of |g| is |integral of g|.
    double s = 0.0, mag = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double c = tri.eigenvectors()(dim - 1, i) * tri.eigenvectors()(0, i);
      const double w = damped_integral(tri.eigenvalues()[i], floor, t);
      s += c * w;
      mag += std::abs(c) * w;
    }
    return b_last * (std::abs(s) + 4.0 * DBL_EPSILON * dim * mag);
  };

  for (int j = 0; j < max_dim; ++j) {
    const VectorXd Av = op.A * V.col(j);
    VectorXd w = mass_.solve(Av);
    const double a = V.col(j).dot(Av);
    alpha.push_back(a);
    w -= a * V.col(j);
    if (j > 0) w -= beta[j - 1] * V.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (BV.leftCols(j + 1).transpose() * w);
    const VectorXd Bw = op.B * w;
    const double b = std::sqrt(std::max(0.0, w.dot(Bw)));
    beta.push_back(b);
    m = j + 1;
    const bool invariant = b <= 1e-14 * std::max(1.0, std::abs(a));
    if (invariant || m % 4 == 0 || m == max_dim) {
      bound = invariant ? 0.0 : evaluate(m, b);
      if (invariant) evaluate(m, 0.0);
      if (bound <= tol) break;
      // rounding floor reached
      if (bound < 1e4 * tol && bound > 0.5 * best && ++stalled >= 3) break;
      if (bound <= 0.5 * best) stalled = 0;
      best = std::min(best, bound);
    }
    if (j + 1 < max_dim) {
      V.col(j + 1) = w / b;
      BV.col(j + 1) = Bw / b;
    }
  }
  const double rounding = 8.0 * DBL_EPSILON * std::sqrt(static_cast<double>(m));
  if (!(bound <= tol))
    throw InconclusiveError("semigroup: Krylov error bound " + std::to_string(bound) + " above tolerance at t = " +
                            std::to_string(t));

  const VectorXd e = (-t * tri.eigenvalues().array()).exp().matrix();
  const VectorXd coef = tri.eigenvectors() * e.cwiseProduct(tri.eigenvectors().row(0).transpose());
  out.value = nf * (V.leftCols(m) * coef);
  out.error_bound = nf * (bound + rounding);
  out.krylov_dim = m;
  return out;
}

SemigroupPair semigroup_pair(const AssembledOperator& op, const VectorXd& f, const VectorXd& g, double t, double tol) {
  HeatPropagator heat(op);
  const SemigroupAction act = heat.apply(f, t, tol);
  const double ng = std::sqrt(std::max(0.0, heat.inner(g, g)));
  return {heat.inner(act.value, g), act.error_bound * ng, act.krylov_dim};
}

}  // namespace qgl

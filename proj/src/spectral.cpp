#include "qgl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qgl/errors.hpp"

namespace qgl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double residual_norm(const AssembledOperator& op, const VectorXd& v, double E) {
  const VectorXd r = op.A * v - E * (op.B * v);
  return r.norm() / v.norm();
}

double accepted_residual(const EigenOptions& opt, double E) { return opt.tol * std::max(1.0, std::abs(E)); }

VectorXd start_vector(int N, std::uint64_t seed) {
  VectorXd v(N);
  std::uint64_t s = seed;
  for (int i = 0; i < N; ++i) {
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    v[i] = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  return v;
}

// Shift-and-invert Lanczos for the lowest generalized eigenpairs, with full
// reorthogonalization in the B inner product and locking of converged pairs.
class LowestPairs {
 public:
  LowestPairs(const AssembledOperator& op, const EigenOptions& opt) : op_(op), opt_(opt), N_(op.size()) {
    sigma_ = op.meta.potential_floor - 1.0;
    shifted_ = op.A - sigma_ * op.B;
    llt_.compute(shifted_);
    if (llt_.info() != Eigen::Success) throw SolverError("lowest_eigs: shifted operator is not positive definite", NAN);
    X_.resize(N_, 0);
    BX_.resize(N_, 0);
  }

  int locked() const { return static_cast<int>(values_.size()); }
  double best_residual() const { return best_residual_; }

  // One Krylov round; returns the number of newly locked pairs.
  int round(int need, std::uint64_t seed) {
    const int nl = locked();
    need = std::min(need, N_ - nl);
    if (need <= 0) return 0;
    const int m_max = std::min(N_ - nl, std::max(2 * need + 40, 3 * need));

    MatrixXd Q(N_, m_max + 1), BQ(N_, m_max + 1);
    VectorXd q = restart_.size() == N_ ? restart_ : start_vector(N_, seed);
    restart_.resize(0);
    VectorXd Bq = op_.B * q;
    for (int pass = 0; pass < 2; ++pass) {
      if (nl > 0) q -= X_ * (BX_.transpose() * q);
    }
    Bq = op_.B * q;
    double nq = std::sqrt(q.dot(Bq));
    if (!(nq > 0)) return 0;
    Q.col(0) = q / nq;
    BQ.col(0) = Bq / nq;

    std::vector<double> alpha, beta;
    int m = 0;
    bool converged = false;
    Eigen::SelfAdjointEigenSolver<MatrixXd> tri;
    for (int j = 0; j < m_max; ++j) {
      VectorXd w = llt_.solve(BQ.col(j));
      const double a = BQ.col(j).dot(w);
      alpha.push_back(a);
      w -= a * Q.col(j);
      if (j > 0) w -= beta[j - 1] * Q.col(j - 1);
      for (int pass = 0; pass < 2; ++pass) {
        if (nl > 0) w -= X_ * (BX_.transpose() * w);
        w -= Q.leftCols(j + 1) * (BQ.leftCols(j + 1).transpose() * w);
      }
      VectorXd Bw = op_.B * w;
      const double b = std::sqrt(std::max(0.0, w.dot(Bw)));
      beta.push_back(b);
      m = j + 1;
      const bool exhausted = b <= 1e-13 * std::abs(a) || m == m_max;
      if (!exhausted) {
        Q.col(j + 1) = w / b;
        BQ.col(j + 1) = Bw / b;
      }
      if (exhausted || (m >= need && (m % 5 == 0))) {
        tri.compute(tridiagonal(alpha, beta, m));
        converged = true;
        for (int i = 0; i < need && i < m; ++i) {
          const int col = m - 1 - i;
          const double theta = tri.eigenvalues()[col];
          if (std::abs(b * tri.eigenvectors()(m - 1, col)) > 1e-13 * std::abs(theta)) converged = false;
        }
        if (exhausted || converged) break;
      }
    }

    const int take = std::min(need, m);
    int added = 0;
    VectorXd unconverged = VectorXd::Zero(N_);
    for (int i = 0; i < take; ++i) {
      const int col = m - 1 - i;
      const double theta = tri.eigenvalues()[col];
      if (!(theta > 0)) continue;
      VectorXd x = Q.leftCols(m) * tri.eigenvectors().col(col).head(m);
      const double lambda = sigma_ + 1.0 / theta;
      if (locked() > 0) x -= X_ * (BX_.transpose() * x);
      VectorXd Bx = op_.B * x;
      const double nx = std::sqrt(x.dot(Bx));
      x /= nx;
      Bx /= nx;
      const double res = residual_norm(op_, x, lambda);
      best_residual_ = std::min(best_residual_, res);
      if (res <= accepted_residual(opt_, lambda)) {
        lock(x, Bx, lambda, res);
        ++added;
      } else {
        unconverged += x;
      }
    }
    if (added < take && unconverged.squaredNorm() > 0) restart_ = unconverged;
    return added;
  }

  SpectralResult result(int k) const {
    std::vector<int> order(values_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values_[a] < values_[b]; });
    SpectralResult r;
    k = std::min<int>(k, static_cast<int>(order.size()));
    if (opt_.want_vectors) r.eigenvectors.resize(N_, k);
    for (int i = 0; i < k; ++i) {
      r.eigenvalues.push_back(values_[order[i]]);
      r.residual_norms.push_back(residuals_[order[i]]);
      if (opt_.want_vectors) r.eigenvectors.col(i) = X_.col(order[i]);
    }
    return r;
  }

  std::vector<double> sorted_values() const {
    std::vector<double> v = values_;
    std::sort(v.begin(), v.end());
    return v;
  }

 private:
  static MatrixXd tridiagonal(const std::vector<double>& a, const std::vector<double>& b, int m) {
    MatrixXd T = MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = a[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = b[i];
    }
    return T;
  }

  void lock(const VectorXd& x, const VectorXd& Bx, double lambda, double res) {
    const int c = locked();
    X_.conservativeResize(Eigen::NoChange, c + 1);
    BX_.conservativeResize(Eigen::NoChange, c + 1);
    X_.col(c) = x;
    BX_.col(c) = Bx;
    values_.push_back(lambda);
    residuals_.push_back(res);
  }

  const AssembledOperator& op_;
  EigenOptions opt_;
  int N_;
  double sigma_ = 0.0;
  SparseMatrix shifted_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
  MatrixXd X_, BX_;
  std::vector<double> values_, residuals_;
  VectorXd restart_;
  double best_residual_ = std::numeric_limits<double>::infinity();
};

}  // namespace

SpectralResult dense_eigs(const AssembledOperator& op, bool want_vectors) {
  const MatrixXd A(op.A), B(op.B);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(
      A, B, want_vectors ? Eigen::ComputeEigenvectors | Eigen::Ax_lBx : Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed", NAN);
  SpectralResult r;
  r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  if (want_vectors) {
    r.eigenvectors = es.eigenvectors();
    for (int i = 0; i < r.size(); ++i) r.residual_norms.push_back(residual_norm(op, r.eigenvectors.col(i), r.eigenvalues[i]));
  } else {
    r.residual_norms.assign(r.eigenvalues.size(), 0.0);
  }
  return r;
}

SpectralResult lowest_eigs(const AssembledOperator& op, int k, const EigenOptions& opt) {
  const int N = op.size();
  if (k < 1 || k > N) throw PreconditionError("lowest_eigs: need 1 <= k <= #DOFs");
  if (N <= opt.dense_limit) {
    SpectralResult all = dense_eigs(op, opt.want_vectors);
    all.eigenvalues.resize(k);
    all.residual_norms.resize(k);
    if (opt.want_vectors) all.eigenvectors = all.eigenvectors.leftCols(k).eval();
    return all;
  }

  LowestPairs solver(op, opt);
  int target = k;
  int failures = 0;
  std::uint64_t round = 0;
  for (int verify = 0; verify < 64; ++verify) {
    while (solver.locked() < target) {
      const int need = std::min(target - solver.locked() + 3, N - solver.locked());
      if (solver.round(need, opt.start_seed + 0x9e3779b97f4a7c15ull * ++round) == 0) {
        if (++failures > opt.max_restarts)
          throw SolverError("lowest_eigs: no convergence after restarts", solver.best_residual());
      }
    }
    // Sylvester inertia catches multiplicities a single Krylov sequence can miss.
    const auto vals = solver.sorted_values();
    const double top = vals[k - 1];
    const double x = top + 1e-8 * std::max(1.0, std::abs(top));
    const int have = static_cast<int>(std::lower_bound(vals.begin(), vals.end(), x) - vals.begin());
    const int truth = count_below(op, x);
    if (truth == have) return solver.result(k);
    if (truth < have) throw SolverError("lowest_eigs: spurious eigenvalues detected", solver.best_residual());
    target = solver.locked() + (truth - have);
  }
  throw SolverError("lowest_eigs: completeness check did not settle", solver.best_residual());
}

SpectralResult eigs_below(const AssembledOperator& op, double ceiling, const EigenOptions& opt) {
  const int c = count_below(op, ceiling);
  if (c == 0) return {};
  SpectralResult r = lowest_eigs(op, c, opt);
  return r;
}

int count_below(const AssembledOperator& op, double x) {
  const SparseMatrix S = op.A - x * op.B;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw ResonanceError("count_below: A - xB is singular at x = " + std::to_string(x));
  return static_cast<int>((ldlt.vectorD().array() < 0.0).count());
}

bool spectrum_avoids(const AssembledOperator& op, double E, double r) {
  return count_below(op, E + r) == count_below(op, E - r);
}

double dist_to_spectrum(const AssembledOperator& op, double E, double ceiling, const EigenOptions& opt) {
  EigenOptions o = opt;
  o.want_vectors = false;
  const SpectralResult r = eigs_below(op, ceiling, o);
  double dist = std::numeric_limits<double>::infinity();
  for (double e : r.eigenvalues) dist = std::min(dist, std::abs(e - E));
  if (r.size() == op.size()) return dist;
  if (ceiling - E > dist) return dist;
  throw InconclusiveError("dist_to_spectrum: ceiling " + std::to_string(ceiling) +
                          " too low to certify the distance at E = " + std::to_string(E));
}

std::vector<int> cell_dofs(const DofMap& dofs, const MultiSite& x) {
  const int nd = dofs.n * dofs.d;
  const int M = dofs.M;
  std::vector<int> out;
  for (int i = 0; i < dofs.size(); ++i) {
    bool in = true;
    for (int k = 0; k < nd && in; ++k) in = std::abs(dofs.keys[i][k] - M * x.coord(k)) < M;
    if (in) out.push_back(i);
  }
  return out;
}

int cell_distance(const MultiSite& x, const MultiSite& y) { return std::max(0, sup_dist(x, y) - 2); }

namespace {

MatrixXd dense_block(const SparseMatrix& S, const std::vector<int>& rows, const std::vector<int>& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = S.coeff(rows[i], cols[j]);
  return out;
}

MatrixXd lower_cholesky(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw InternalError("cell mass block is not positive definite");
  return llt.matrixL();
}

}  // namespace

Resolvent::Resolvent(const AssembledOperator& op, double E) : op_(&op), E_(E) {
  shifted_ = op.A - E * op.B;
  ldlt_.compute(shifted_);
  if (ldlt_.info() != Eigen::Success)
    throw ResonanceError("resolvent: A - EB is singular at E = " + std::to_string(E));
}

MatrixXd Resolvent::solve(const MatrixXd& rhs) const {
  MatrixXd X = ldlt_.solve(rhs);
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  MatrixXd R = shifted_ * X - rhs;
  if (R.norm() > 1e-10 * scale) {
    X -= ldlt_.solve(R);
    R = shifted_ * X - rhs;
    if (R.norm() > 1e-10 * scale)
      throw ResonanceError("resolvent: solve residual " + std::to_string(R.norm() / scale) +
                           " exceeds 1e-10 at E = " + std::to_string(E_));
  }
  return X;
}

std::vector<GreenBlock> Resolvent::blocks_from(const MultiSite& source, std::span<const MultiSite> targets) const {
  const std::vector<int> vy = cell_dofs(op_->dofs, source);
  if (vy.empty()) throw PreconditionError("green block: source cell has no DOFs");
  MatrixXd rhs = MatrixXd::Zero(op_->size(), vy.size());
  for (std::size_t j = 0; j < vy.size(); ++j)
    for (SparseMatrix::InnerIterator it(op_->B, vy[j]); it; ++it) rhs(it.row(), j) = it.value();
  const MatrixXd W = solve(rhs);
  const MatrixXd BW = op_->B * W;
  const MatrixXd Ly = lower_cholesky(dense_block(op_->B, vy, vy));

  std::vector<GreenBlock> out;
  out.reserve(targets.size());
  for (const MultiSite& x : targets) {
    const std::vector<int> vx = cell_dofs(op_->dofs, x);
    if (vx.empty()) throw PreconditionError("green block: target cell has no DOFs");
    MatrixXd T(vx.size(), vy.size());
    for (std::size_t i = 0; i < vx.size(); ++i) T.row(i) = BW.row(vx[i]);
    const MatrixXd Lx = lower_cholesky(dense_block(op_->B, vx, vx));
    // Lx^{-1} T Ly^{-T}
    MatrixXd Z = Lx.triangularView<Eigen::Lower>().solve(T);
    Z = Ly.triangularView<Eigen::Lower>().solve(Z.transpose()).transpose();
    Eigen::JacobiSVD<MatrixXd> svd(Z);
    out.push_back({x, source, E_, svd.singularValues()(0)});
  }
  return out;
}

GreenBlock Resolvent::block(const MultiSite& target, const MultiSite& source) const {
  const MultiSite t[1] = {target};
  return blocks_from(source, t).front();
}

GreenBlock green_block_norm(const AssembledOperator& op, double E, const MultiSite& target, const MultiSite& source) {
  return Resolvent(op, E).block(target, source);
}

namespace {

SpectralResult eigs_in(const AssembledOperator& op, const Interval& I, const EigenOptions& opt) {
  if (!(I.lo <= I.hi) || !std::isfinite(I.hi)) throw PreconditionError("spectral interval must be bounded");
  EigenOptions o = opt;
  o.want_vectors = true;
  return eigs_below(op, I.hi + 1e-12 * std::max(1.0, std::abs(I.hi)), o);
}

}  // namespace

VectorXd spectral_projector_apply(const AssembledOperator& op, const Interval& I, const VectorXd& v,
                                  const EigenOptions& opt) {
  const SpectralResult r = eigs_in(op, I, opt);
  VectorXd out = VectorXd::Zero(op.size());
  const VectorXd Bv = op.B * v;
  for (int j = 0; j < r.size(); ++j)
    if (I.contains(r.eigenvalues[j])) out += r.eigenvectors.col(j).dot(Bv) * r.eigenvectors.col(j);
  return out;
}

double dyn_moment(const AssembledOperator& op, const Interval& I, std::span<const MultiSite> K, double s,
                  const std::function<double(double)>& f, const EigenOptions& opt) {
  if (!(s >= 0)) throw PreconditionError("dyn_moment: s must be >= 0");
  const SpectralResult r = eigs_in(op, I, opt);
  std::vector<int> in_k;
  {
    std::vector<char> mark(op.size(), 0);
    for (const MultiSite& x : K)
      for (int i : cell_dofs(op.dofs, x)) mark[i] = 1;
    for (int i = 0; i < op.size(); ++i)
      if (mark[i]) in_k.push_back(i);
  }
  if (in_k.empty()) return 0.0;
  const int nd = op.dofs.n * op.dofs.d;
  VectorXd weight(op.size());
  for (int i = 0; i < op.size(); ++i) {
    double m = 0.0;
    for (int k = 0; k < nd; ++k) m = std::max(m, std::abs(op.dofs.position(i, k)));
    weight[i] = std::pow(m, 0.5 * s);
  }
  if (s == 0.0) weight.setOnes();

  std::vector<int> sel;
  for (int j = 0; j < r.size(); ++j)
    if (I.contains(r.eigenvalues[j])) sel.push_back(j);
  if (sel.empty()) return 0.0;

  // Columns a_j = f(E_j) X^{s/2} v_j and b_j = P_K v_j (B-orthogonal projection onto the K cells).
  const int m = static_cast<int>(sel.size());
  MatrixXd a(op.size(), m), b = MatrixXd::Zero(op.size(), m);
  const MatrixXd Bkk = dense_block(op.B, in_k, in_k);
  Eigen::LLT<MatrixXd> llt(Bkk);
  for (int c = 0; c < m; ++c) {
    const VectorXd& v = r.eigenvectors.col(sel[c]);
    a.col(c) = f(r.eigenvalues[sel[c]]) * weight.cwiseProduct(v);
    const VectorXd Bv = op.B * v;
    VectorXd rhs(in_k.size());
    for (std::size_t i = 0; i < in_k.size(); ++i) rhs[i] = Bv[in_k[i]];
    const VectorXd coef = llt.solve(rhs);
    for (std::size_t i = 0; i < in_k.size(); ++i) b(in_k[i], c) = coef[i];
  }
  const MatrixXd Ga = a.transpose() * (op.B * a);
  const MatrixXd Gb = b.transpose() * (op.B * b);
  return Ga.cwiseProduct(Gb).sum();
}

double restricted_norm(const AssembledOperator& op, const VectorXd& v, std::span<const int> dofs) {
  double s = 0.0;
  for (int i : dofs)
    for (int j : dofs) s += v[i] * op.B.coeff(i, j) * v[j];
  return std::sqrt(std::max(0.0, s));
}

}  // namespace qgl

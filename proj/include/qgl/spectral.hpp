#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "qgl/fem.hpp"

namespace qgl {

struct EigenOptions {
  double tol = 1e-9;        // residual ||A v - E B v|| / ||v||
  int dense_limit = 500;    // dense solver at or below this many DOFs
  int max_restarts = 40;
  std::uint64_t start_seed = 0x51ed270b27a3f1c5ull;
  bool want_vectors = true;
};

struct SpectralResult {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;     // B-orthonormal columns (empty if not requested)
  std::vector<double> residual_norms;

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Full generalized spectrum by a dense solver.
SpectralResult dense_eigs(const AssembledOperator& op, bool want_vectors = true);
SpectralResult lowest_eigs(const AssembledOperator& op, int k, const EigenOptions& opt = {});
// Every eigenpair with E_j < ceiling.
SpectralResult eigs_below(const AssembledOperator& op, double ceiling, const EigenOptions& opt = {});

// Number of eigenvalues strictly below x, from the inertia of A - x B.
int count_below(const AssembledOperator& op, double x);
// True when no eigenvalue lies in (E - r, E + r).
bool spectrum_avoids(const AssembledOperator& op, double E, double r);

// min_j |E_j - E| over E_j below the ceiling; InconclusiveError unless
// ceiling - E exceeds the returned distance or the spectrum is complete.
double dist_to_spectrum(const AssembledOperator& op, double E, double ceiling, const EigenOptions& opt = {});

// DOFs whose node lies in the open unit cell C(x) = {|p - x| < 1}.
std::vector<int> cell_dofs(const DofMap& dofs, const MultiSite& x);
// Sup-norm distance between two cells.
int cell_distance(const MultiSite& x, const MultiSite& y);

struct GreenBlock {
  MultiSite target;
  MultiSite source;
  double energy = 0.0;
  double norm = 0.0;
};

// Factorization of A - E B shared by many cell-block evaluations.
class Resolvent {
 public:
  Resolvent(const AssembledOperator& op, double E);

  double energy() const { return E_; }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  GreenBlock block(const MultiSite& target, const MultiSite& source) const;
  // Blocks from one source cell to each target, sharing one multi-RHS solve.
  std::vector<GreenBlock> blocks_from(const MultiSite& source, std::span<const MultiSite> targets) const;

 private:
  const AssembledOperator* op_;
  double E_;
  SparseMatrix shifted_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

GreenBlock green_block_norm(const AssembledOperator& op, double E, const MultiSite& target,
                            const MultiSite& source);

// Sum over E_j in I of <v, v_j>_B v_j.
Eigen::VectorXd spectral_projector_apply(const AssembledOperator& op, const Interval& I, const Eigen::VectorXd& v,
                                         const EigenOptions& opt = {});

// || X^{s/2} f(H) E(I) chi_K ||_HS^2 with X the sup-norm position weight.
double dyn_moment(const AssembledOperator& op, const Interval& I, std::span<const MultiSite> K, double s,
                  const std::function<double(double)>& f, const EigenOptions& opt = {});

// B-weighted norm of a coefficient vector restricted to a DOF subset.
double restricted_norm(const AssembledOperator& op, const Eigen::VectorXd& v, std::span<const int> dofs);

}  // namespace qgl

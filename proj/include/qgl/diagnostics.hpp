#pragma once

// Per-sample checks of the finite-volume estimates: Combes-Thomas,
// Davies-Gaffney, Weyl, the Cheeger gap, resolvent inequalities, the
// multiscale predicates and empirical decay rates.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgl/semigroup.hpp"
#include "qgl/spectral.hpp"

namespace qgl {

using OperatorFactory = std::function<AssembledOperator(const BoxSpec&)>;

// floor(d^n (S - n q-)^{n/2} / ((4 pi)^{n/2} Gamma(n/2))) + 1.
double weyl_constant(int n, int d, double S, double q_minus);

struct WeylCheck {
  double S = 0;
  int count = 0;         // eigenvalues <= S
  double constant = 0;
  double volume = 0;     // |Lambda|
  double bound = 0;      // constant * volume
  bool pass = false;
};

WeylCheck weyl_check(const AssembledOperator& op, double S, double q_minus);

struct CheegerCheck {
  int l = 0;
  int d = 0;
  double E1 = 0;
  double E2 = 0;
  double threshold = 0;  // n_l^{-2}
  bool pass = false;
};

CheegerCheck cheeger_gap_check(int l, int d, int M = 4);

// sqrt(pi/2) (sqrt(delta)/eta^{3/4} + 3/(8 sqrt(delta) eta^{5/4})) e^{-delta sqrt(eta)}.
double combes_thomas_bound(double delta, double eta);

struct CtPair {
  MultiSite source;
  MultiSite target;
  int delta = 0;
  double measured = 0;
  double bound = 0;
  bool pass = false;
};

struct CtReport {
  double energy = 0;
  double s_omega = 0;
  double eta = 0;
  std::vector<CtPair> pairs;
  int passed = 0;
  bool all_pass() const { return passed == static_cast<int>(pairs.size()); }
};

// Pairs (x, y) with cell distance >= 1; s_omega is the bottom of the spectrum.
CtReport verify_combes_thomas(const AssembledOperator& op, double E, double s_omega,
                              std::span<const MultiSite> sources, std::span<const MultiSite> targets);

// Lattice points of `box` at cell distance >= 1 from x.
std::vector<MultiSite> far_points(const BoxSpec& box, const MultiSite& x, int min_delta = 1, int max_delta = 1 << 30);
// Centre and the offsets {-L/2, 0, L/2} per coordinate (all points when n = 1).
std::vector<MultiSite> probe_sources(const BoxSpec& box);

enum class CheckStatus { pass, fail, inconclusive };
std::string to_string(CheckStatus s);

struct CellularSet {
  std::vector<MultiSite> cells;
};

// Distance between two cellular sets.
int cellular_distance(const CellularSet& a, const CellularSet& b);
// Coefficient vector equal to 1 on the DOFs of the cells.
Eigen::VectorXd cell_indicator(const DofMap& dofs, const CellularSet& s);
bool supported_in(const DofMap& dofs, const Eigen::VectorXd& f, const CellularSet& s);

struct DgEntry {
  double t = 0;
  int delta = 0;
  double value = 0;
  double error = 0;
  double rhs = 0;
  int target = 0;  // index into the target list
  CheckStatus status = CheckStatus::inconclusive;
};

struct DgTarget {
  Eigen::VectorXd g;
  CellularSet B;
};

// One heat solve per t, shared by all targets.
std::vector<DgEntry> verify_davies_gaffney(const HeatPropagator& heat, const AssembledOperator& op, double s_omega,
                                           const Eigen::VectorXd& f, const CellularSet& A,
                                           std::span<const DgTarget> targets, std::span<const double> times);

// |<e^{-tH} f, g>| <= e^{-t s} e^{-delta^2/4t} ||f|| ||g||, with the Krylov
// error bound folded in: pass iff |value| + error <= rhs.
std::vector<DgEntry> verify_davies_gaffney(const HeatPropagator& heat, const AssembledOperator& op, double s_omega,
                                           const Eigen::VectorXd& f, const CellularSet& A, const Eigen::VectorXd& g,
                                           const CellularSet& B, std::span<const double> times);

struct MsaPredicateReport {
  BoxSpec cube;
  double energy = 0;
  double mass = 0;
  std::optional<bool> ns;        // unset when not evaluated
  bool resonant = false;
  double max_norm = 0;
  double threshold = 0;          // e^{-m L}
  std::optional<MultiSite> argmax;
  std::optional<bool> nr;
  std::optional<bool> cnr;
  bool cnr_sampled = false;
  int subcubes_tested = 0;
  std::optional<BoxSpec> offending;
  std::optional<bool> nt;
  std::optional<bool> hnr;
  std::optional<bool> good;
  int singular_count = 0;
  std::string witness;

  nlohmann::json to_json() const;
};

// (E, m)-NS: max over the out-layer of ||G(u, y; E)|| <= e^{-mL}. L >= 7.
MsaPredicateReport classify_NS(const AssembledOperator& op, double E, double m);

// Sub-cubes Lambda_l(v) of the cube with L^{2/3} <= l <= L.
std::uint64_t count_cnr_subcubes(const BoxSpec& cube);
std::vector<BoxSpec> cnr_subcubes(const BoxSpec& cube, std::uint64_t budget, std::uint64_t seed, bool* sampled);

MsaPredicateReport check_NR_CNR(const OperatorFactory& factory, const BoxSpec& cube, double E,
                                std::uint64_t budget = 200, std::uint64_t seed = 0);

struct Goodness {
  bool good = true;
  std::vector<BoxSpec> singular;     // (E, m)-S sub-cubes of side l
  std::vector<BoxSpec> witness;      // J + 1 pairwise separable singular cubes when bad
};

// (E, m, J)-good: at most J pairwise separable (E, m)-S sub-cubes of side l.
Goodness goodness(const OperatorFactory& factory, const BoxSpec& cube, int l, double E, double m, int J, int r0);

struct NtHnrOptions {
  int l = 7;              // previous scale
  double m_prev = 0.1;
  double q_minus = 0.0;
  int r0 = 1;
  std::uint64_t cnr_budget = 200;
  std::uint64_t seed = 0;
};

// NT and HNR of a J-decomposable cube. Shifts E - mu below n' q- - 1/2 are
// accepted without evaluation.
MsaPredicateReport check_NT_HNR(const BoxSpec& cube, ParticleSet J, const OmegaSample& omega,
                                const InteractionSpec& interaction, const Mesh& mesh, double E,
                                const NtHnrOptions& opt);

struct Gri2Audit {
  double lhs = 0;
  double rhs_factor = 0;  // |B_l^out|^2 max_w ||G_l(u,w)|| max_z ||G_L(z,y)||
  double empirical_C = 0;
  int out_count = 0;
};

// op_small on Lambda_l, op_large on Lambda_L with Lambda_l inside Lambda_{L-7}
// and u in Lambda_{l-7}; y in the out-layer of Lambda_L.
Gri2Audit verify_gri2(const AssembledOperator& op_large, const AssembledOperator& op_small, double E,
                      const MultiSite& u, const MultiSite& y);

struct Gri3Audit {
  int delta1 = 0;
  double S = 0;
  double M1 = 0;
  double lhs = 0;
  double max_factor_norm = 0;
  double second_term = 0;  // |Lambda^{(n')}| e^{-delta_1 S}
  double rhs = 0;
  int shifts_used = 0;
};

// First inequality of the decomposed resolvent bound; J is the first factor.
Gri3Audit verify_gri3(const BoxSpec& cube, ParticleSet J, const OmegaSample& omega, const InteractionSpec& interaction,
                      const Mesh& mesh, double E, const MultiSite& x, const MultiSite& y, double S, double q_minus);

struct DecayFit {
  double mass = 0;
  double r2 = 0;
  int points = 0;
  double energy = 0;
  MultiSite peak;
};

// Least squares of log-norm against distance; mass is minus the slope.
DecayFit fit_decay(std::span<const double> distance, std::span<const double> log_norm);

// Fit of the cell norms of one vector, excluding the peak cell and cells
// below floor_rel times the peak norm.
DecayFit vector_mass(const AssembledOperator& op, const Eigen::VectorXd& v, std::span<const MultiSite> cells,
                     double floor_rel = 1e-11);

// One fit per eigenpair in I; PreconditionError when I holds no eigenvalue.
std::vector<DecayFit> eigenfunction_mass(const AssembledOperator& op, const Interval& I,
                                         std::span<const MultiSite> cells, const EigenOptions& opt = {});

}  // namespace qgl

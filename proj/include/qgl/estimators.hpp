#pragma once

// Monte Carlo estimators over the disorder. Every trial draws a fresh omega
// from mix_seed(seed, i); results do not depend on the worker count.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "qgl/fem.hpp"
#include "qgl/montecarlo.hpp"
#include "qgl/msa_schedule.hpp"
#include "qgl/spectral.hpp"

namespace qgl {

struct McOptions {
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct TrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double value = 0.0;  // estimator-specific observable
};

struct McResult {
  McEstimate estimate;
  std::vector<TrialRecord> records;
  double reference = 0.0;  // paper-side quantity the estimate is compared with
  double ratio = 0.0;      // p_hat / reference

  nlohmann::json to_json() const;
};

struct ModelSpec {
  PotentialLaw law;
  InteractionSpec interaction;
  Mesh mesh;
};

// P{dist(sigma(H_Lambda), E) < eps}; reference |Lambda| max_i |Pi_i Lambda| s(mu, 2 eps).
McResult mc_wegner_one(const BoxSpec& box, const ModelSpec& model, double E, double eps, const McOptions& opt);

// P{dist(sigma_I(H_a), sigma_I(H_b)) < eps} for pre-separable a, b.
McResult mc_wegner_two(const BoxSpec& a, const BoxSpec& b, const ModelSpec& model, const Interval& I, double eps,
                       const McOptions& opt);

struct LifshitzCell {
  int l = 0;
  long long n_l = 0;
  double threshold = 0.0;
  McResult result;
};

struct LifshitzResult {
  std::vector<LifshitzCell> cells;
  std::optional<double> gamma_hat;  // slope of -log p_hat against n_l over cells with successes
  double r2 = 0.0;
  bool increasing = false;          // see lifshitz_increasing
};

// n_l = d (2l) (2l - 1)^{d-1}.
long long lifshitz_n(int l, int d);

// P{E_1(H_{Lambda_l}) <= n q- + n b n_l^{-2}} per l, boxes centred at `center`.
LifshitzResult mc_lifshitz(const MultiSite& center, std::span<const int> ls, double b, const ModelSpec& model,
                           const McOptions& opt);

// -log p strictly increasing along the cells; a zero-success cell uses its
// rule-of-three bound and must lie below the last nonzero point estimate.
bool lifshitz_increasing(std::span<const LifshitzCell> cells);

struct IlsOptions {
  double beta = 0.5;
  int ns_grid = 0;  // > 0: also scan I_n for (E, m)-S cubes on this many energies
};

struct IlsResult {
  McResult gap;                    // P{s_omega - n q- <= L0^{beta-1}}
  std::optional<McResult> ns_scan; // grid-approximate
  double mass = 0.0;               // L0^{(beta-1)/2} / 3
  double eps0 = 0.0;               // L0^{beta-1} / 2
  Interval I;
  double target = 0.0;             // L0^{-2p}, reported only
};

IlsResult mc_ils(const BoxSpec& cube, const ModelSpec& model, double p, const IlsOptions& opt, const McOptions& mc);

struct DsOptions {
  int grid_max = 4096;  // cap on the number of energies; exceeding it clears grid_exact
};

struct DsResult {
  McResult result;
  BoxSpec first;
  BoxSpec second;
  int n = 1;
  int k = 0;
  int grid_points = 0;
  double grid_spacing = 0.0;
  bool grid_approximate = true;
  bool grid_exact = true;  // spacing <= e^{-L^beta}/4 was achieved
  double mass = 0.0;
  double target = 0.0;     // L_k^{-2 p_n (1+theta)^k}
  double log10_margin = 0.0;
};

// Smallest shift of the first particle of `a` along the first axis giving a
// separable pair.
BoxSpec separable_partner(const BoxSpec& a, int r0);

// Probability that two separable cubes of side L_k are both (E, m_{L_k})-S for
// some E on a grid over I_n.
DsResult mc_ds(int n, int k, const ScaleSchedule& schedule, const ModelSpec& model, const McOptions& mc,
               const DsOptions& opt = {});

}  // namespace qgl

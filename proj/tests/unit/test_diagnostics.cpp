#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "qgl/diagnostics.hpp"
#include "qgl/errors.hpp"

using namespace qgl;

namespace {

BoxSpec chain_box(int L) { return BoxSpec::cube(MultiSite::of(1, {0}), L); }

BoxSpec pair_box(int L) { return BoxSpec::cube(MultiSite::of(1, {0, 0}), L); }

AssembledOperator instance(const BoxSpec& box, std::uint64_t seed, double q_minus = 0.0, double q_plus = 1.0,
                           int M = 4) {
  const auto edges = box_edges(box);
  return assemble(box, sample_omega(PotentialLaw::uniform(q_minus, q_plus), edges, seed), InteractionSpec{1.0, 1},
                  Mesh{M});
}

// e^{-tH} f from the full generalized eigendecomposition.
Eigen::VectorXd dense_heat(const AssembledOperator& op, const Eigen::VectorXd& f, double t) {
  const SpectralResult r = dense_eigs(op, true);
  const Eigen::VectorXd c = r.eigenvectors.transpose() * (op.B * f);
  Eigen::VectorXd w(c.size());
  for (int j = 0; j < c.size(); ++j) w[j] = std::exp(-t * r.eigenvalues[j]) * c[j];
  return r.eigenvectors * w;
}

double b_norm(const AssembledOperator& op, const Eigen::VectorXd& v) { return std::sqrt(v.dot(op.B * v)); }

double ct_formula(double delta, double eta) {
  const double pre = std::sqrt(std::numbers::pi / 2);
  return pre * (std::sqrt(delta) / std::pow(eta, 0.75) + 3.0 / (8.0 * std::sqrt(delta) * std::pow(eta, 1.25))) *
         std::exp(-delta * std::sqrt(eta));
}

}  // namespace

TEST_CASE("heat semigroup: small time and ground state") {
  const AssembledOperator op = instance(chain_box(4), 3);
  const HeatPropagator heat(op);
  const Eigen::VectorXd f = cell_indicator(op.dofs, CellularSet{{MultiSite::of(1, {-1})}});
  const Eigen::VectorXd g = cell_indicator(op.dofs, CellularSet{{MultiSite::of(1, {0})}});
  const SemigroupPair p = semigroup_pair(op, f, g, 1e-9);
  CHECK(p.value == doctest::Approx(heat.inner(f, g)).epsilon(1e-6));

  const SpectralResult r = lowest_eigs(op, 1);
  const Eigen::VectorXd phi = r.eigenvectors.col(0);
  for (double t : {0.5, 2.0, 8.0}) {
    const SemigroupPair gs = semigroup_pair(op, phi, phi, t);
    CHECK(gs.value == doctest::Approx(std::exp(-t * r.eigenvalues[0])).epsilon(1e-9));
  }
}

TEST_CASE("heat semigroup error bound dominates the true error") {
  for (int n : {1, 2}) {
    const BoxSpec box = n == 1 ? chain_box(5) : pair_box(2);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const AssembledOperator op = instance(box, seed, 0.0, 2.0, 3);
      const HeatPropagator heat(op);
      Eigen::VectorXd f = Eigen::VectorXd::Zero(op.size());
      for (int i = 0; i < op.size(); ++i) f[i] = std::sin(0.37 * i + static_cast<double>(seed));
      for (double t : {0.1, 1.0, 4.0}) {
        for (int max_dim : {6, 12, 400}) {
          SemigroupAction a;
          try {
            a = heat.apply(f, t, 1e-30, max_dim);
          } catch (const InconclusiveError&) {
            continue;
          }
          const double err = b_norm(op, a.value - dense_heat(op, f, t));
          CHECK(err <= a.error_bound + 1e-12 * b_norm(op, f));
        }
        const SemigroupAction full = heat.apply(f, t);
        CHECK(full.error_bound <= 1e-11 * b_norm(op, f));
      }
    }
  }
}

TEST_CASE("Combes-Thomas bound formula") {
  CHECK(combes_thomas_bound(10, 0.25) == doctest::Approx(0.0812).epsilon(1e-3));
  for (double delta : {1.0, 3.0, 10.0})
    for (double eta : {0.1, 0.25, 1.0, 4.0}) CHECK(combes_thomas_bound(delta, eta) == doctest::Approx(ct_formula(delta, eta)));
  double prev = INFINITY;
  for (double eta : {0.25, 1.0, 4.0, 16.0, 64.0}) {
    const double b = combes_thomas_bound(6, eta);
    CHECK(b < prev);
    prev = b;
  }
  CHECK(prev < 1e-15);
}

TEST_CASE("Combes-Thomas holds on small instances") {
  const BoxSpec box = chain_box(8);
  const AssembledOperator op = instance(box, 11);
  const double s = lowest_eigs(op, 1).eigenvalues[0];
  const std::vector<MultiSite> src = probe_sources(box);
  std::vector<double> measured;
  for (double eta : {0.25, 1.0, 4.0}) {
    const std::vector<MultiSite> tgt = lattice_points(box);
    const CtReport rep = verify_combes_thomas(op, s - eta, s, src, tgt);
    CHECK(!rep.pairs.empty());
    CHECK(rep.all_pass());
    double worst = 0;
    for (const CtPair& p : rep.pairs)
      if (p.delta == 4) worst = std::max(worst, p.measured);
    measured.push_back(worst);
  }
  CHECK(measured[1] < measured[0]);
  CHECK(measured[2] < measured[1]);
}

TEST_CASE("Davies-Gaffney on a chain") {
  const AssembledOperator op = instance(chain_box(6), 2);
  const double s = lowest_eigs(op, 1).eigenvalues[0];
  const HeatPropagator heat(op);
  const CellularSet A{{MultiSite::of(1, {-2})}}, B{{MultiSite::of(1, {2})}};
  const Eigen::VectorXd f = cell_indicator(op.dofs, A), g = cell_indicator(op.dofs, B);
  const std::vector<double> times{0.25, 1.0, 4.0, 30.0};
  const auto entries = verify_davies_gaffney(heat, op, s, f, A, g, B, times);
  REQUIRE(entries.size() == times.size());
  const double nf = std::sqrt(heat.inner(f, f)), ng = std::sqrt(heat.inner(g, g));
  CHECK(entries[1].delta == 2);
  CHECK(entries[1].rhs == doctest::Approx(std::exp(-s) * std::exp(-1.0) * nf * ng));
  for (const DgEntry& e : entries) CHECK(e.status == CheckStatus::pass);
  CHECK(entries.back().rhs < 1e-3);

  const CellularSet near{{MultiSite::of(1, {-1})}};
  CHECK_THROWS_AS(verify_davies_gaffney(heat, op, s, f, A, cell_indicator(op.dofs, near), near, times),
                  PreconditionError);
}

TEST_CASE("Weyl constant and count") {
  CHECK(weyl_constant(2, 1, 4 * std::numbers::pi, 0.0) == 2.0);
  CHECK(weyl_constant(1, 1, 4 * std::numbers::pi, 0.0) == 1.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const AssembledOperator op = instance(pair_box(3), seed);
    const WeylCheck w = weyl_check(op, 4 * std::numbers::pi, 0.0);
    CHECK(w.volume == 36.0);
    CHECK(w.bound == 72.0);
    CHECK(w.count == count_below(op, std::nextafter(4 * std::numbers::pi, INFINITY)));
    CHECK(w.pass);
  }
}

TEST_CASE("Cheeger gap of the free Laplacian") {
  const CheegerCheck c1 = cheeger_gap_check(5, 1);
  CHECK(c1.threshold == doctest::Approx(1.0 / 100));
  CHECK(c1.E2 >= std::pow(std::numbers::pi / 10, 2) - 1e-12);
  CHECK(c1.pass);
  const CheegerCheck c2 = cheeger_gap_check(2, 2);
  CHECK(c2.threshold == doctest::Approx(1.0 / 576));
  CHECK(c2.pass);
  CHECK(std::abs(c1.E1) < 1e-10);
  CHECK(std::abs(c2.E1) < 1e-10);
}

TEST_CASE("NS classification") {
  const BoxSpec box = chain_box(8);
  const AssembledOperator op = instance(box, 4);
  const double E1 = lowest_eigs(op, 1).eigenvalues[0];
  const MsaPredicateReport deep = classify_NS(op, -20.0, 0.5);
  CHECK(*deep.ns);
  CHECK(deep.max_norm <= 1.0 / (E1 + 20.0));

  const MsaPredicateReport res = classify_NS(op, E1, 0.1);
  CHECK(res.resonant);
  CHECK_FALSE(*res.ns);

  const double E = E1 - 0.3;
  const MsaPredicateReport zero = classify_NS(op, E, 0.0);
  CHECK(zero.threshold == 1.0);
  CHECK(*zero.ns == (zero.max_norm <= 1.0));
  CHECK(zero.max_norm <= 1.0 / 0.3 + 1e-9);

  CHECK_THROWS_AS(classify_NS(instance(chain_box(6), 1), 0.0, 0.1), PreconditionError);
}

TEST_CASE("NR and CNR") {
  const BoxSpec box = chain_box(7);
  const auto edges = box_edges(box);
  const OmegaSample om = sample_omega(PotentialLaw::uniform(0, 1), edges, 6);
  const OperatorFactory factory = [&](const BoxSpec& b) { return assemble(b, om, InteractionSpec{}, Mesh{4}); };
  const MsaPredicateReport low = check_NR_CNR(factory, box, -2.0, 1000);
  CHECK(*low.nr);
  CHECK(*low.cnr);
  CHECK_FALSE(low.cnr_sampled);
  CHECK(low.subcubes_tested == static_cast<int>(count_cnr_subcubes(box)));

  bool sampled = false;
  const auto subs = cnr_subcubes(box, 1000, 0, &sampled);
  const BoxSpec inner = *std::find_if(subs.begin(), subs.end(), [&](const BoxSpec& s) { return !(s == box); });
  const double E = lowest_eigs(factory(inner), 1).eigenvalues[0];
  const MsaPredicateReport hit = check_NR_CNR(factory, box, E, 1000);
  CHECK_FALSE(*hit.cnr);
  REQUIRE(hit.offending.has_value());

  for (double e : {0.1, 0.4, 0.9, 1.7}) {
    const MsaPredicateReport r = check_NR_CNR(factory, box, e, 1000);
    if (*r.cnr) CHECK(*r.nr);
  }
}

TEST_CASE("NT and HNR of a decomposable cube far below the spectrum") {
  const BoxSpec cube = BoxSpec::cube(MultiSite::of(1, {0, 60}), 7);
  const auto edges = box_edges(cube);
  const OmegaSample om = sample_omega(PotentialLaw::uniform(0, 1), edges, 2);
  NtHnrOptions opt;
  opt.l = 7;
  const MsaPredicateReport low = check_NT_HNR(cube, 0b1, om, InteractionSpec{1.0, 1}, Mesh{2}, -5.0, opt);
  CHECK(*low.nt);
  CHECK(*low.hnr);
  CHECK(low.subcubes_tested == 0);
}

TEST_CASE("GRI.3 second term") {
  const BoxSpec cube = BoxSpec::cube(MultiSite::of(1, {0, 40}), 8);
  const auto edges = box_edges(cube);
  const OmegaSample om = sample_omega(PotentialLaw::uniform(0, 1), edges, 3);
  const double S = 1.5;
  const Gri3Audit a = verify_gri3(cube, 0b1, om, InteractionSpec{1.0, 1}, Mesh{2}, -1.0, MultiSite::of(1, {0, 36}),
                                  MultiSite::of(1, {0, 44}), S, 0.0);
  CHECK(a.delta1 == 8);
  CHECK(a.second_term == doctest::Approx(16.0 * std::exp(-8 * S)));
  CHECK(a.lhs <= a.rhs);
}

TEST_CASE("decay fit") {
  std::vector<double> dist, logn;
  for (int k = 1; k <= 10; ++k) {
    dist.push_back(k);
    logn.push_back(-1.0 * k + 0.3);
  }
  const DecayFit f = fit_decay(dist, logn);
  CHECK(f.mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));

  const BoxSpec box = chain_box(12);
  const AssembledOperator op = instance(box, 1, 0.0, 1.0, 2);
  Eigen::VectorXd v(op.size());
  for (int i = 0; i < op.size(); ++i) v[i] = std::exp(-std::abs(op.dofs.position(i, 0)));
  const DecayFit vm = vector_mass(op, v, lattice_points(box));
  CHECK(vm.mass == doctest::Approx(1.0).epsilon(0.01));

  const AssembledOperator free = assemble(box, constant_omega(box_edges(box), 0.0), {}, Mesh{2});
  const auto fits = eigenfunction_mass(free, Interval{-0.5, 1e-6}, lattice_points(box));
  REQUIRE(fits.size() == 1);
  CHECK(std::abs(fits[0].mass) < 0.05);
}

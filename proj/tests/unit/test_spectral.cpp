#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "qgl/errors.hpp"
#include "qgl/spectral.hpp"

using namespace qgl;

namespace {

struct Instance {
  BoxSpec box;
  OmegaSample omega;
  AssembledOperator op;
};

Instance random_instance(int n, int L, std::uint64_t seed, int M = 4, double u0 = 1.0) {
  MultiSite c;
  c.n = n;
  c.d = 1;
  for (int j = 0; j < n; ++j) c.p[j].dim = 1;
  Instance in;
  in.box = BoxSpec::cube(c, L);
  const auto edges = box_edges(in.box);
  in.omega = sample_omega(PotentialLaw::uniform(0, 1), edges, seed);
  in.op = assemble(in.box, in.omega, InteractionSpec{u0, 1}, Mesh{M});
  return in;
}

AssembledOperator free_chain(int L, int M) {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0}), L);
  return assemble(box, constant_omega(box_edges(box), 0.0), InteractionSpec{}, Mesh{M});
}

}  // namespace

TEST_CASE("free chain ground state is the constant") {
  const AssembledOperator op = free_chain(5, 4);
  const SpectralResult r = lowest_eigs(op, 3);
  CHECK(std::abs(r.eigenvalues[0]) <= 1e-10);
  const double h2 = 1.0 / 16;
  CHECK(r.eigenvalues[1] == doctest::Approx(std::pow(std::numbers::pi / 10, 2)).epsilon(h2));
  Eigen::VectorXd v = r.eigenvectors.col(0);
  CHECK((v.array() - v(0)).abs().maxCoeff() < 1e-8);
}

TEST_CASE("Lanczos agrees with the dense solver") {
  EigenOptions lanczos;
  lanczos.dense_limit = 0;
  for (std::uint64_t seed : {3ull, 4ull}) {
    const Instance in = random_instance(2, 3, seed, 3);
    const auto dense = dense_eigs(in.op, false).eigenvalues;
    const SpectralResult r = lowest_eigs(in.op, 8, lanczos);
    REQUIRE(r.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(r.eigenvalues[i] == doctest::Approx(dense[i]).epsilon(1e-8));
    for (double res : r.residual_norms) CHECK(res <= lanczos.tol);
  }
}

TEST_CASE("count_below matches the dense spectrum") {
  const Instance in = random_instance(1, 6, 9);
  const auto ev = dense_eigs(in.op, false).eigenvalues;
  for (double x : {-1.0, 0.05, 0.3, 1.0, 4.0, 40.0}) {
    const int want = static_cast<int>(std::count_if(ev.begin(), ev.end(), [&](double e) { return e < x; }));
    CHECK(count_below(in.op, x) == want);
  }
  const auto below = eigs_below(in.op, 4.0).eigenvalues;
  CHECK(static_cast<int>(below.size()) == count_below(in.op, 4.0));
}

TEST_CASE("eigenvalues increase with the potential") {
  const Instance in = random_instance(1, 4, 17);
  OmegaSample bigger = in.omega;
  for (const auto& [e, v] : in.omega.sorted()) bigger.set(e, v + 0.1 * (e.base[0] % 3 == 0));
  const auto a = dense_eigs(in.op, false).eigenvalues;
  const auto b = dense_eigs(assemble(in.box, bigger, InteractionSpec{1.0, 1}, Mesh{4}), false).eigenvalues;
  for (std::size_t j = 0; j < a.size(); ++j) CHECK(b[j] >= a[j] - 1e-12);
}

TEST_CASE("distance to the spectrum") {
  const Instance in = random_instance(1, 4, 2);
  const double E1 = lowest_eigs(in.op, 1).eigenvalues[0];
  CHECK(dist_to_spectrum(in.op, E1, 10.0) <= 1e-9);
  CHECK(dist_to_spectrum(in.op, -1.0, 10.0) >= 1.0);
  CHECK(spectrum_avoids(in.op, -1.0, 0.9));
  CHECK_FALSE(spectrum_avoids(in.op, E1, 1e-6));
}

TEST_CASE("Green blocks: resolvent bound, symmetry and decay") {
  const Instance in = random_instance(1, 8, 5);
  const double E1 = lowest_eigs(in.op, 1).eigenvalues[0];
  const double E = E1 - 0.5;
  const Resolvent R(in.op, E);
  const MultiSite x = MultiSite::of(1, {-6});
  std::vector<MultiSite> targets;
  for (int y = -4; y <= 6; ++y) targets.push_back(MultiSite::of(1, {y}));
  const auto blocks = R.blocks_from(x, targets);
  for (const GreenBlock& g : blocks) CHECK(g.norm <= 1.0 / 0.5 + 1e-9);
  for (std::size_t i = 1; i < blocks.size(); ++i) CHECK(blocks[i].norm < blocks[i - 1].norm);
  const MultiSite y = MultiSite::of(1, {3});
  CHECK(R.block(x, y).norm == doctest::Approx(R.block(y, x).norm).epsilon(1e-9));
  CHECK(green_block_norm(in.op, E, x, y).norm == doctest::Approx(R.block(x, y).norm).epsilon(1e-12));
}

TEST_CASE("cells") {
  CHECK(cell_distance(MultiSite::of(1, {0}), MultiSite::of(1, {5})) == 3);
  CHECK(cell_distance(MultiSite::of(1, {0, 0}), MultiSite::of(1, {1, 1})) == 0);
  const AssembledOperator op = free_chain(3, 4);
  // open unit cell around 0: nodes strictly inside (-1, 1)
  CHECK(cell_dofs(op.dofs, MultiSite::of(1, {0})).size() == 7);
}

TEST_CASE("spectral projector") {
  const Instance in = random_instance(1, 3, 6);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(in.op.size(), -1.0, 2.0);
  const auto ev = dense_eigs(in.op, false).eigenvalues;
  const Interval all{ev.front() - 1, ev.back() + 1};
  CHECK((spectral_projector_apply(in.op, all, v) - v).norm() <= 1e-8 * v.norm());
  CHECK(spectral_projector_apply(in.op, Interval{-5, ev.front() - 0.1}, v).norm() == 0.0);
  const Interval mid{0.0, 2.0};
  const Eigen::VectorXd p = spectral_projector_apply(in.op, mid, v);
  CHECK((spectral_projector_apply(in.op, mid, p) - p).norm() <= 1e-8 * std::max(1.0, p.norm()));
}

TEST_CASE("dynamical moment") {
  const Instance in = random_instance(1, 3, 6);
  const std::vector<MultiSite> K{MultiSite::of(1, {0})};
  const Interval I{0.0, 2.0};
  CHECK(dyn_moment(in.op, I, K, 1.0, [](double) { return 0.0; }) == 0.0);
  // s = 0, f = 1 and I covering the spectrum: trace of the projection onto the K cells
  const auto ev = dense_eigs(in.op, false).eigenvalues;
  const Interval all{ev.front() - 1, ev.back() + 1};
  const double dim = static_cast<double>(cell_dofs(in.op.dofs, K[0]).size());
  CHECK(dyn_moment(in.op, all, K, 0.0, [](double) { return 1.0; }) == doctest::Approx(dim).epsilon(1e-8));
  CHECK(dyn_moment(in.op, I, K, 0.0, [](double) { return 1.0; }) <= dim + 1e-8);
}

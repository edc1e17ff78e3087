#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "qgl/errors.hpp"
#include "qgl/fem.hpp"
#include "qgl/spectral.hpp"

using namespace qgl;

namespace {

AssembledOperator chain(int L, int M, double c = 0.0) {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0}), L);
  const auto edges = box_edges(box);
  return assemble(box, constant_omega(edges, c), InteractionSpec{}, Mesh{M});
}

double max_abs_diff(const SparseMatrix& a, const SparseMatrix& b) {
  return Eigen::MatrixXd(a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("free chain converges to the Neumann interval spectrum at order h^2") {
  const double pi = std::numbers::pi;
  std::vector<double> err;
  for (int M : {2, 4, 8}) {
    const SpectralResult r = dense_eigs(chain(5, M), false);
    double e = 0;
    for (int k = 1; k <= 3; ++k) e = std::max(e, std::abs(r.eigenvalues[k] - std::pow(k * pi / 10, 2)));
    CHECK(std::abs(r.eigenvalues[0]) < 1e-10);
    err.push_back(e);
  }
  CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.15));
  CHECK(std::log2(err[1] / err[2]) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("constant potential shifts A by c B") {
  const AssembledOperator a0 = chain(3, 4, 0.0);
  const AssembledOperator ac = chain(3, 4, 0.75);
  CHECK(max_abs_diff(ac.A, a0.A + 0.75 * a0.B) < 1e-13);
  CHECK(max_abs_diff(ac.B, a0.B) == 0.0);
  CHECK(ac.meta.potential_floor == 0.75);
}

TEST_CASE("spectrum lies above n q-") {
  for (int n : {1, 2}) {
    MultiSite c;
    c.n = n;
    c.d = 1;
    for (int j = 0; j < n; ++j) c.p[j].dim = 1;
    const BoxSpec box = BoxSpec::cube(c, 2);
    const auto edges = box_edges(box);
    const PotentialLaw law = PotentialLaw::uniform(0.4, 1.4);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const AssembledOperator op = assemble(box, sample_omega(law, edges, seed), InteractionSpec{1.0, 1}, Mesh{4});
      CHECK(op.meta.potential_floor >= n * 0.4);
      CHECK(dense_eigs(op, false).eigenvalues.front() >= n * 0.4 - 1e-9);
    }
  }
}

TEST_CASE("matrices are symmetric and B is positive definite") {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0, 0}), 1);
  const auto edges = box_edges(box);
  const AssembledOperator op =
      assemble(box, sample_omega(PotentialLaw::uniform(0, 1), edges, 4), InteractionSpec{2.0, 1}, Mesh{3});
  CHECK(max_abs_diff(op.A, SparseMatrix(op.A.transpose())) < 1e-14);
  CHECK(max_abs_diff(op.B, SparseMatrix(op.B.transpose())) < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(op.B)};
  CHECK(es.eigenvalues().minCoeff() > 0);
  // the mass of the constant function is the total measure of the complex
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(op.size());
  CHECK(one.dot(op.B * one) == doctest::Approx(count_cubes(2, 1, std::vector<int>{1, 1})));
}

TEST_CASE("glued eigenvalues dominate the decoupled ones") {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0}), 3);
  const auto edges = box_edges(box);
  const OmegaSample om = sample_omega(PotentialLaw::uniform(0, 1), edges, 8);
  const auto glued = dense_eigs(assemble(box, om, InteractionSpec{}, Mesh{4}), false).eigenvalues;
  const auto dec = dense_eigs(assemble_decoupled(box, om, InteractionSpec{}, Mesh{4}), false).eigenvalues;
  for (std::size_t j = 0; j < glued.size(); ++j) CHECK(glued[j] >= dec[j] - 1e-10);
}

TEST_CASE("decomposed cube: spectrum is the sum of factor spectra") {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0, 20}), 2);
  const auto edges = box_edges(box);
  const OmegaSample om = sample_omega(PotentialLaw::uniform(0, 1), edges, 21);
  const InteractionSpec inter{3.0, 1};
  const Mesh mesh{3};
  const AssembledOperator full = assemble(box, om, inter, mesh);
  const FactorPair f = assemble_decomposed(box, 0b1, om, inter, mesh);

  const auto [A, B] = kronecker_compose(f, full.dofs);
  CHECK(max_abs_diff(B, full.B) < 1e-14);
  CHECK(max_abs_diff(A, full.A) < 1e-12);

  const auto lam = dense_eigs(f.first, false).eigenvalues;
  const auto mu = dense_eigs(f.second, false).eigenvalues;
  std::vector<double> sums;
  for (double a : lam)
    for (double b : mu) sums.push_back(a + b);
  std::sort(sums.begin(), sums.end());
  const auto got = dense_eigs(full, false).eigenvalues;
  REQUIRE(got.size() == sums.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - sums[i]) <= 1e-9 * std::max(1.0, sums[i]));
}

TEST_CASE("zero-potential factors give double Neumann sums") {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0, 30}), 2);
  const auto edges = box_edges(box);
  const FactorPair f = assemble_decomposed(box, 0b1, constant_omega(edges, 0.0), InteractionSpec{}, Mesh{8});
  const auto got = dense_eigs(assemble(box, constant_omega(edges, 0.0), InteractionSpec{}, Mesh{8}), false).eigenvalues;
  // closed form on (-2,2) x (28,32): (pi/4)^2 (a^2 + b^2)
  std::vector<double> want;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) want.push_back(std::pow(std::numbers::pi / 4, 2) * (a * a + b * b));
  std::sort(want.begin(), want.end());
  for (int i = 0; i < 6; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(0.01).scale(1.0));
  CHECK(f.first.size() * f.second.size() == static_cast<int>(got.size()));
}

TEST_CASE("non-decomposable split is rejected") {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0, 1}), 2);
  const auto edges = box_edges(box);
  CHECK_THROWS_AS(assemble_decomposed(box, 0b1, constant_omega(edges, 0.0), InteractionSpec{1.0, 1}, Mesh{2}),
                  PreconditionError);
}

TEST_CASE("triplet output") {
  const AssembledOperator op = chain(1, 2);
  std::stringstream ss;
  write_triplets(ss, op.B);
  int rows = 0, cols = 0, nnz = 0;
  ss >> rows >> cols >> nnz;
  CHECK(rows == op.size());
  CHECK(cols == op.size());
  CHECK(nnz == op.B.nonZeros());
}

TEST_CASE("mesh validation") {
  CHECK_THROWS_AS(Mesh{1}.validate(), PreconditionError);
}

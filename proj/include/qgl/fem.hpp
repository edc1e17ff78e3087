#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

#include <Eigen/SparseCore>

#include "qgl/lattice.hpp"
#include "qgl/random_model.hpp"

namespace qgl {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Mesh {
  int M = 4;  // subdivisions per unit edge

  double h() const { return 1.0 / M; }
  void validate() const;
};

struct OperatorMeta {
  std::uint64_t omega_seed = 0;
  InteractionSpec interaction;
  int M = 4;
  bool glued = true;
  double potential_floor = 0.0;  // min over cubes of W; lower bound of the spectrum
};

// Galerkin discretization of the finite-volume form: A = stiffness + potential,
// B = consistent mass, both over the DOFs of `dofs`.
struct AssembledOperator {
  SparseMatrix A;
  SparseMatrix B;
  DofMap dofs;
  BoxSpec box;
  OperatorMeta meta;

  int size() const { return static_cast<int>(A.rows()); }
  int n() const { return box.n(); }
};

AssembledOperator assemble(const BoxSpec& box, const OmegaSample& omega, const InteractionSpec& interaction,
                           const Mesh& mesh);

// Same complex with every cube decoupled from its neighbours (faces cut).
AssembledOperator assemble_decoupled(const BoxSpec& box, const OmegaSample& omega,
                                     const InteractionSpec& interaction, const Mesh& mesh);

struct FactorPair {
  ParticleSet J = 0;
  AssembledOperator first;   // particles in J
  AssembledOperator second;  // particles in the complement
};

// Factors of a J-decomposable cube; throws PreconditionError otherwise.
FactorPair assemble_decomposed(const BoxSpec& box, ParticleSet J, const OmegaSample& omega,
                               const InteractionSpec& interaction, const Mesh& mesh);

// A' (x) B'' + B' (x) A'' and B' (x) B'' in the DOF ordering of `full`.
std::pair<SparseMatrix, SparseMatrix> kronecker_compose(const FactorPair& f, const DofMap& full);

// Coordinate format: header line "rows cols nnz", then "i j value" (0-based).
void write_triplets(std::ostream& os, const SparseMatrix& m);

}  // namespace qgl

#include "qgl/fem.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include "qgl/errors.hpp"

namespace qgl {

void Mesh::validate() const {
  if (M < 2) throw PreconditionError("mesh too coarse: M must be >= 2");
}

namespace {

using Triplet = Eigen::Triplet<double>;

// Element matrices of the multilinear element on an n-cube of side h.
struct ElementTables {
  int n = 1;
  int corners = 2;
  std::vector<double> stiff;  // corners x corners
  std::vector<double> mass;
  // Gauss points: 2^n, per point the basis values of all corners and the weight.
  std::vector<std::array<double, kMaxParticles>> gauss_offset;  // local coordinate within the element
  std::vector<double> gauss_weight;
  std::vector<double> gauss_basis;  // points x corners
};

ElementTables make_tables(int n, double h) {
  ElementTables t;
  t.n = n;
  t.corners = 1 << n;
  const int c = t.corners;
  const double m1[2][2] = {{h / 3, h / 6}, {h / 6, h / 3}};
  const double s1[2][2] = {{1 / h, -1 / h}, {-1 / h, 1 / h}};
  t.stiff.assign(c * c, 0.0);
  t.mass.assign(c * c, 0.0);
  for (int a = 0; a < c; ++a)
    for (int b = a; b < c; ++b) {
      double mass = 1.0, stiff = 0.0;
      for (int k = 0; k < n; ++k) {
        const int ak = (a >> (n - 1 - k)) & 1, bk = (b >> (n - 1 - k)) & 1;
        double term = s1[ak][bk];
        for (int l = 0; l < n; ++l) {
          if (l == k) continue;
          const int al = (a >> (n - 1 - l)) & 1, bl = (b >> (n - 1 - l)) & 1;
          term *= m1[al][bl];
        }
        stiff += term;
        mass *= m1[ak][bk];
      }
      t.stiff[a * c + b] = t.stiff[b * c + a] = stiff;
      t.mass[a * c + b] = t.mass[b * c + a] = mass;
    }
  const double g[2] = {0.5 * h * (1 - 1 / std::sqrt(3.0)), 0.5 * h * (1 + 1 / std::sqrt(3.0))};
  for (int q = 0; q < c; ++q) {
    std::array<double, kMaxParticles> off{};
    double w = 1.0;
    for (int k = 0; k < n; ++k) {
      off[k] = g[(q >> (n - 1 - k)) & 1];
      w *= 0.5 * h;
    }
    t.gauss_offset.push_back(off);
    t.gauss_weight.push_back(w);
    for (int a = 0; a < c; ++a) {
      double phi = 1.0;
      for (int k = 0; k < n; ++k) {
        const double xi = off[k] / h;
        phi *= ((a >> (n - 1 - k)) & 1) ? xi : 1 - xi;
      }
      t.gauss_basis.push_back(phi);
    }
  }
  return t;
}

AssembledOperator assemble_on(const BoxSpec& box, DofMap dofs, const OmegaSample& omega,
                              const InteractionSpec& interaction, const Mesh& mesh, bool glued) {
  mesh.validate();
  interaction.validate();
  const int n = box.n(), d = box.d(), M = mesh.M;
  const double h = mesh.h();
  const ElementTables tab = make_tables(n, h);
  const int c = tab.corners;
  const bool with_u = interaction.u0 > 0.0 && n >= 2;

  // Local index offsets of element corners within the cube's (M+1)^n grid.
  std::vector<int> stride(n);
  {
    int s = 1;
    for (int k = n - 1; k >= 0; --k) {
      stride[k] = s;
      s *= M + 1;
    }
  }
  std::vector<int> corner_offset(c, 0);
  for (int a = 0; a < c; ++a)
    for (int k = 0; k < n; ++k)
      if ((a >> (n - 1 - k)) & 1) corner_offset[a] += stride[k];

  int elems_per_cube = 1;
  for (int k = 0; k < n; ++k) elems_per_cube *= M;

  std::vector<Triplet> ta, tb;
  ta.reserve(dofs.cubes.size() * elems_per_cube * c * c);
  tb.reserve(dofs.cubes.size() * elems_per_cube * c * c);

  double floor = std::numeric_limits<double>::infinity();
  std::vector<double> ue(c * c);
  std::vector<int> sub(n);
  std::vector<double> x(n * d);

  for (std::size_t ci = 0; ci < dofs.cubes.size(); ++ci) {
    const CubeId& cube = dofs.cubes[ci];
    const double W = eval_W(cube, omega);
    floor = std::min(floor, W);
    const auto l2g = dofs.local_to_global(ci);
    for (int e = 0; e < elems_per_cube; ++e) {
      int rem = e, base_local = 0;
      for (int k = n - 1; k >= 0; --k) {
        sub[k] = rem % M;
        rem /= M;
        base_local += sub[k] * stride[k];
      }
      if (with_u) {
        std::fill(ue.begin(), ue.end(), 0.0);
        for (int q = 0; q < c; ++q) {
          for (int j = 0; j < n; ++j) {
            const EdgeId& edge = cube.edges[j];
            for (int a = 0; a < d; ++a)
              x[j * d + a] = edge.base[a] + (a == edge.dir - 1 ? sub[j] * h + tab.gauss_offset[q][j] : 0.0);
          }
          const double u = eval_U(n, d, x, interaction);
          if (u == 0.0) continue;
          const double wu = tab.gauss_weight[q] * u;
          const double* phi = &tab.gauss_basis[q * c];
          for (int a = 0; a < c; ++a)
            for (int b = a; b < c; ++b) ue[a * c + b] += wu * phi[a] * phi[b];
        }
      }
      for (int a = 0; a < c; ++a) {
        const int ga = l2g[base_local + corner_offset[a]];
        for (int b = 0; b < c; ++b) {
          const int gb = l2g[base_local + corner_offset[b]];
          const int lo = std::min(a, b), hi = std::max(a, b);
          double va = tab.stiff[a * c + b] + W * tab.mass[a * c + b];
          if (with_u) va += ue[lo * c + hi];
          ta.emplace_back(ga, gb, va);
          tb.emplace_back(ga, gb, tab.mass[a * c + b]);
        }
      }
    }
  }

  AssembledOperator op;
  const int N = dofs.size();
  op.A.resize(N, N);
  op.B.resize(N, N);
  op.A.setFromTriplets(ta.begin(), ta.end());
  op.B.setFromTriplets(tb.begin(), tb.end());
  op.A.makeCompressed();
  op.B.makeCompressed();
  op.dofs = std::move(dofs);
  op.box = box;
  op.meta.omega_seed = omega.seed();
  op.meta.interaction = interaction;
  op.meta.M = M;
  op.meta.glued = glued;
  op.meta.potential_floor = floor;
  return op;
}

}  // namespace

AssembledOperator assemble(const BoxSpec& box, const OmegaSample& omega, const InteractionSpec& interaction,
                           const Mesh& mesh) {
  mesh.validate();
  return assemble_on(box, glue_nodes(box, mesh.M), omega, interaction, mesh, true);
}

AssembledOperator assemble_decoupled(const BoxSpec& box, const OmegaSample& omega,
                                     const InteractionSpec& interaction, const Mesh& mesh) {
  mesh.validate();
  return assemble_on(box, decoupled_nodes(box, mesh.M), omega, interaction, mesh, false);
}

FactorPair assemble_decomposed(const BoxSpec& box, ParticleSet J, const OmegaSample& omega,
                               const InteractionSpec& interaction, const Mesh& mesh) {
  if (!box.is_cube() || !is_decomposable(box.center, box.side(), interaction.r0, J))
    throw PreconditionError("assemble_decomposed: box " + to_string(box) + " is not " + set_to_string(J) +
                            "-decomposable");
  FactorPair f;
  f.J = J;
  f.first = assemble(box.restrict_to(J), omega, interaction, mesh);
  f.second = assemble(box.restrict_to(full_set(box.n()) & ~J), omega, interaction, mesh);
  return f;
}

std::pair<SparseMatrix, SparseMatrix> kronecker_compose(const FactorPair& f, const DofMap& full) {
  const DofMap& d1 = f.first.dofs;
  const DofMap& d2 = f.second.dofs;
  const int d = full.d;
  const int n1 = d1.n, n2 = d2.n;
  const int N1 = d1.size(), N2 = d2.size();
  if (static_cast<long long>(N1) * N2 != full.size())
    throw PreconditionError("kronecker_compose: factor DOF counts do not match the full map");
  const auto in_first = members(f.J);
  const auto in_second = members(full_set(full.n) & ~f.J);

  std::vector<int> index(static_cast<std::size_t>(N1) * N2, -1);
  for (int i = 0; i < full.size(); ++i) {
    ScaledPoint s1{}, s2{};
    for (int k = 0; k < n1; ++k)
      for (int a = 0; a < d; ++a) s1[k * d + a] = full.keys[i][in_first[k] * d + a];
    for (int k = 0; k < n2; ++k)
      for (int a = 0; a < d; ++a) s2[k * d + a] = full.keys[i][in_second[k] * d + a];
    const int i1 = d1.find(s1), i2 = d2.find(s2);
    if (i1 < 0 || i2 < 0) throw PreconditionError("kronecker_compose: full DOF missing from a factor");
    index[static_cast<std::size_t>(i1) * N2 + i2] = i;
  }

  auto kron = [&](const SparseMatrix& X, const SparseMatrix& Y, std::vector<Eigen::Triplet<double>>& out) {
    for (int c1 = 0; c1 < X.outerSize(); ++c1)
      for (SparseMatrix::InnerIterator ix(X, c1); ix; ++ix)
        for (int c2 = 0; c2 < Y.outerSize(); ++c2)
          for (SparseMatrix::InnerIterator iy(Y, c2); iy; ++iy) {
            const int r = index[static_cast<std::size_t>(ix.row()) * N2 + iy.row()];
            const int c = index[static_cast<std::size_t>(ix.col()) * N2 + iy.col()];
            out.emplace_back(r, c, ix.value() * iy.value());
          }
  };
  std::vector<Eigen::Triplet<double>> ta, tb;
  kron(f.first.A, f.second.B, ta);
  kron(f.first.B, f.second.A, ta);
  kron(f.first.B, f.second.B, tb);
  SparseMatrix A(full.size(), full.size()), B(full.size(), full.size());
  A.setFromTriplets(ta.begin(), ta.end());
  B.setFromTriplets(tb.begin(), tb.end());
  return {std::move(A), std::move(B)};
}

void write_triplets(std::ostream& os, const SparseMatrix& m) {
  os << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n" << std::setprecision(17);
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace qgl

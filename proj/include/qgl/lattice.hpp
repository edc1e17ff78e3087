#pragma once

// Combinatorics of the n-particle cube complex over the Z^d lattice graph.
//
// All distances are sup-norm. Boxes are open: Lambda_L(u) = {x : |x - u| < L}.
// An edge belongs to a box when the open edge meets the box, so vertices on
// the box boundary are part of the finite graph.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qgl {

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxParticles = 3;
inline constexpr int kMaxCoords = kMaxDim * kMaxParticles;

// Point of Z^d.
struct Site {
  int dim = 1;
  std::array<int, kMaxDim> x{};

  static Site of(std::initializer_list<int> coords);
  int operator[](int a) const { return x[a]; }
  int& operator[](int a) { return x[a]; }
  friend auto operator<=>(const Site&, const Site&) = default;
};

int sup_dist(const Site& a, const Site& b);
std::string to_string(const Site& s);

// Point of Z^{nd}: one site per particle.
struct MultiSite {
  int n = 1;
  int d = 1;
  std::array<Site, kMaxParticles> p{};

  // Flat coordinates, particle-major: (x_1, ..., x_n) with x_j in Z^d.
  static MultiSite of(int d, std::initializer_list<int> flat);
  static MultiSite from_sites(std::span<const Site> sites);
  const Site& operator[](int j) const { return p[j]; }
  Site& operator[](int j) { return p[j]; }
  int coord(int k) const { return p[k / d][k % d]; }
  friend auto operator<=>(const MultiSite&, const MultiSite&) = default;
};

int sup_dist(const MultiSite& a, const MultiSite& b);
std::string to_string(const MultiSite& s);

// Subset of particle indices {0, ..., n-1} as a bitmask.
using ParticleSet = std::uint32_t;

inline ParticleSet full_set(int n) { return (ParticleSet{1} << n) - 1; }
inline bool contains(ParticleSet J, int j) { return (J >> j) & 1u; }
int set_size(ParticleSet J);
std::vector<int> members(ParticleSet J);
std::string set_to_string(ParticleSet J);  // 1-based, e.g. "{1,3}"

// Edge from base to base + h_dir, dir in [1, d].
struct EdgeId {
  Site base;
  int dir = 1;
  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

struct EdgeIdHash {
  std::size_t operator()(const EdgeId& e) const noexcept;
};

// n-cube (e_1, ..., e_n).
struct CubeId {
  int n = 1;
  std::array<EdgeId, kMaxParticles> edges{};
  friend auto operator<=>(const CubeId&, const CubeId&) = default;
};

// Open 1-particle box Lambda_L(center) in R^d.
struct Box1 {
  Site center;
  int L = 1;

  bool contains(const Site& x) const;
  bool intersects(const Box1& other) const;
  bool contains_edge(const EdgeId& e) const;
  friend auto operator<=>(const Box1&, const Box1&) = default;
};

// Open n-rectangle: product of the 1-particle boxes Lambda_{L_j}(u_j).
struct BoxSpec {
  MultiSite center;
  std::array<int, kMaxParticles> sides{};

  static BoxSpec cube(const MultiSite& center, int L);
  int n() const { return center.n; }
  int d() const { return center.d; }
  bool is_cube() const;
  int side() const;  // requires is_cube()
  Box1 factor(int j) const { return {center[j], sides[j]}; }
  BoxSpec restrict_to(ParticleSet J) const;
  bool contains(const MultiSite& x) const;
  bool contains_box(const BoxSpec& inner) const;
  double volume() const;  // |Lambda| = prod (2 L_j)^d
  void validate() const;
  friend auto operator<=>(const BoxSpec&, const BoxSpec&) = default;
};

std::string to_string(const BoxSpec& b);

std::uint64_t count_edges(int d, int L);
std::uint64_t count_cubes(int n, int d, std::span<const int> sides);

std::vector<EdgeId> enumerate_edges(const Box1& box);
std::vector<CubeId> enumerate_cubes(const BoxSpec& box);
// Number of cubes by walking every tuple of the first n-1 factor edges and
// adding the size of the last factor's edge list per tuple.
std::uint64_t enumerate_cube_count(const BoxSpec& box);

// B(box) = box intersected with Z^{nd}, lexicographic.
std::vector<MultiSite> lattice_points(const BoxSpec& box);
// Out-layer of a cube: lattice points x with L - 6 <= |x - u| <= L - 1.
std::vector<MultiSite> out_layer(const BoxSpec& cube);
// Edges of all factors, deduplicated and sorted.
std::vector<EdgeId> box_edges(const BoxSpec& box);

// One coordinate of a node: a lattice vertex or an interior grid point of an
// edge (t in 1..M-1).
struct GraphPoint {
  enum class Kind { vertex, edge_point };
  Kind kind = Kind::vertex;
  Site vertex;
  EdgeId edge;
  int t = 0;
  friend auto operator<=>(const GraphPoint&, const GraphPoint&) = default;
};

struct NodeKey {
  int n = 1;
  std::array<GraphPoint, kMaxParticles> coords{};
  friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

// Position of a node scaled by M; integral, and a faithful encoding of the
// NodeKey because the graph is embedded in R^d.
using ScaledPoint = std::array<int, kMaxCoords>;

ScaledPoint canonical(const NodeKey& key, int d, int M);
NodeKey node_key_from(const ScaledPoint& s, int n, int d, int M);

struct DofMap {
  int n = 1;
  int d = 1;
  int M = 2;
  std::vector<CubeId> cubes;
  std::vector<ScaledPoint> keys;  // sorted; index = DOF number
  std::vector<int> cube_nodes;    // cubes.size() * nodes_per_cube()

  int size() const { return static_cast<int>(keys.size()); }
  int nodes_per_cube() const;
  std::span<const int> local_to_global(std::size_t cube) const;
  // Position in R^{nd} of a DOF, flat particle-major.
  double position(int dof, int k) const { return static_cast<double>(keys[dof][k]) / M; }
  NodeKey node_key(int dof) const;
  int find(const ScaledPoint& key) const;  // -1 if absent
};

// Local node of a cube: multi-index (i_1, ..., i_n) in [0, M]^n, particle 1
// most significant.
ScaledPoint local_node_position(const CubeId& cube, std::span<const int> idx, int d, int M);

DofMap glue_nodes(const BoxSpec& box, int M);
// Same cubes, but every cube keeps private copies of its nodes.
DofMap decoupled_nodes(const BoxSpec& box, int M);

// Union of the 1-particle projections Pi_J(box).
struct BoxUnion {
  std::vector<Box1> boxes;  // distinct, sorted

  bool empty() const { return boxes.empty(); }
  bool contains(const Site& x) const;
  bool intersects(const BoxUnion& other) const;
  // d = 1 only: connected components as open intervals (lo, hi).
  std::vector<std::pair<int, int>> merged_intervals() const;
};

BoxUnion projections(const BoxSpec& box, ParticleSet J);

int diagonal_distance(const MultiSite& u);
// min over i in J, j not in J of |u_i - u_j|.
int partition_distance(const MultiSite& u, ParticleSet J);

struct Interactivity {
  bool partially_interactive = false;
  int diagonal_distance = 0;
  ParticleSet witness = 0;  // decomposing J when PI; contains particle 0
};

Interactivity classify_interactive(const MultiSite& center, int L, int r0);
bool is_decomposable(const MultiSite& center, int L, int r0, ParticleSet J);

std::vector<MultiSite> related_points(const MultiSite& x);
// y lies outside every Lambda_R(x') for x' in `related` (the related points of some x).
bool outside_related(std::span<const MultiSite> related, const MultiSite& y, int R);

// r_{n,L} = 4(n-1)(2L + r0) + 2L.
int separation_radius(int n, int L, int r0);

// Pi_J(a) is disjoint from Pi_{J^c}(a) union Pi(b).
bool pre_separable_from(const BoxSpec& a, const BoxSpec& b, ParticleSet J);

struct Separability {
  bool pre_separable = false;
  ParticleSet witness = 0;
  bool witness_on_second = false;  // witness J refers to b pre-separable from a
  bool separable = false;
  bool completely_separated = false;
  int distance = 0;
  int radius = 0;
};

Separability separability(const BoxSpec& a, const BoxSpec& b, int r0);

struct EnclosingCube {
  MultiSite center;
  int side = 0;
  int count = 0;  // number of input cubes merged into this one
  std::vector<int> members;
};

struct SeparabilityAudit {
  std::uint64_t pairs = 0;
  std::uint64_t pre_premise = 0;   // y outside the Lambda_{2nL}(x^(j))
  std::uint64_t pre_ok = 0;
  std::uint64_t sep_premise = 0;   // y outside the Lambda_{r_{n,L}}(x^(j))
  std::uint64_t sep_ok = 0;
  std::uint64_t far_premise = 0;   // |y| >= 2 r_{n,L} and |x| < r_{n,L}
  std::uint64_t far_ok = 0;
  std::uint64_t fi_separable = 0;  // separable pairs of FI cubes
  std::uint64_t fi_complete = 0;   // ... that are completely separated
  bool pass() const {
    return pre_ok == pre_premise && sep_ok == sep_premise && far_ok == far_premise && fi_complete == fi_separable;
  }
  nlohmann::json to_json() const;
};

// All pairs of cubes of side L with centres x, y in [-R, R]^{nd}.
SeparabilityAudit audit_separability(int n, int d, int L, int r0, int R);
// Pairs with |x| < r_{n,L} and 2 r_{n,L} <= |y| <= 2 r_{n,L} + width.
SeparabilityAudit audit_far_separability(int n, int d, int L, int r0, int width);

// Merge k cubes of side L into disjoint cubes of sides n_j (L + 7).
std::vector<EnclosingCube> cluster_cubes(std::span<const MultiSite> centers, int L);

bool is_R_connected(std::span<const Site> points, int R);

nlohmann::json describe_complex(const BoxSpec& box, int M);

}  // namespace qgl

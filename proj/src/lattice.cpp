#include "qgl/lattice.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "qgl/errors.hpp"

namespace qgl {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("lattice count exceeds 64-bit range");
  return r;
}

int floor_div2(long long v) { return static_cast<int>(v >= 0 ? v / 2 : -((-v + 1) / 2)); }

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw PreconditionError("lattice dimension must be in [1, 3]");
}

// Calls f(idx) for every multi-index in the box [lo_a, hi_a], last axis fastest.
template <class F>
void for_each_index(std::span<const int> lo, std::span<const int> hi, F&& f) {
  const std::size_t k = lo.size();
  for (std::size_t a = 0; a < k; ++a)
    if (lo[a] > hi[a]) return;
  std::vector<int> idx(lo.begin(), lo.end());
  while (true) {
    f(std::span<const int>(idx));
    std::size_t a = k;
    while (a > 0) {
      --a;
      if (idx[a] < hi[a]) {
        ++idx[a];
        break;
      }
      idx[a] = lo[a];
      if (a == 0) return;
    }
    if (k == 0) return;
  }
}

}  // namespace

Site Site::of(std::initializer_list<int> coords) {
  Site s;
  s.dim = static_cast<int>(coords.size());
  check_dim(s.dim);
  std::copy(coords.begin(), coords.end(), s.x.begin());
  return s;
}

int sup_dist(const Site& a, const Site& b) {
  int m = 0;
  for (int i = 0; i < a.dim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string to_string(const Site& s) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < s.dim; ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

MultiSite MultiSite::of(int d, std::initializer_list<int> flat) {
  check_dim(d);
  const int total = static_cast<int>(flat.size());
  if (total == 0 || total % d != 0 || total / d > kMaxParticles)
    throw PreconditionError("MultiSite::of: coordinate count must be n*d with 1 <= n <= 3");
  MultiSite u;
  u.d = d;
  u.n = total / d;
  int k = 0;
  for (int v : flat) {
    u.p[k / d].dim = d;
    u.p[k / d][k % d] = v;
    ++k;
  }
  return u;
}

MultiSite MultiSite::from_sites(std::span<const Site> sites) {
  if (sites.empty() || sites.size() > kMaxParticles)
    throw PreconditionError("MultiSite::from_sites: need 1..3 sites");
  MultiSite u;
  u.n = static_cast<int>(sites.size());
  u.d = sites[0].dim;
  for (int j = 0; j < u.n; ++j) u.p[j] = sites[j];
  return u;
}

int sup_dist(const MultiSite& a, const MultiSite& b) {
  int m = 0;
  for (int j = 0; j < a.n; ++j) m = std::max(m, sup_dist(a[j], b[j]));
  return m;
}

std::string to_string(const MultiSite& s) {
  std::ostringstream os;
  os << '[';
  for (int j = 0; j < s.n; ++j) os << (j ? " " : "") << to_string(s[j]);
  os << ']';
  return os.str();
}

int set_size(ParticleSet J) { return std::popcount(J); }

std::vector<int> members(ParticleSet J) {
  std::vector<int> out;
  for (int j = 0; j < 32; ++j)
    if (contains(J, j)) out.push_back(j);
  return out;
}

std::string set_to_string(ParticleSet J) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (int j : members(J)) {
    os << (first ? "" : ",") << j + 1;
    first = false;
  }
  os << '}';
  return os.str();
}

std::size_t EdgeIdHash::operator()(const EdgeId& e) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(e.dir);
  for (int a = 0; a < e.base.dim; ++a) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.base[a])) + 0x9e3779b97f4a7c15ull +
         (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

bool Box1::contains(const Site& x) const { return sup_dist(x, center) < L; }

bool Box1::intersects(const Box1& other) const { return sup_dist(center, other.center) < L + other.L; }

bool Box1::contains_edge(const EdgeId& e) const {
  const int axis = e.dir - 1;
  for (int a = 0; a < center.dim; ++a) {
    const int off = e.base[a] - center[a];
    if (a == axis) {
      if (off < -L || off > L - 1) return false;
    } else if (std::abs(off) > L - 1) {
      return false;
    }
  }
  return true;
}

BoxSpec BoxSpec::cube(const MultiSite& center, int L) {
  BoxSpec b;
  b.center = center;
  for (int j = 0; j < center.n; ++j) b.sides[j] = L;
  return b;
}

bool BoxSpec::is_cube() const {
  for (int j = 1; j < n(); ++j)
    if (sides[j] != sides[0]) return false;
  return true;
}

int BoxSpec::side() const {
  if (!is_cube()) throw PreconditionError("box is not a cube");
  return sides[0];
}

BoxSpec BoxSpec::restrict_to(ParticleSet J) const {
  BoxSpec out;
  out.center.d = d();
  out.center.n = 0;
  for (int j = 0; j < n(); ++j) {
    if (!qgl::contains(J, j)) continue;
    out.center.p[out.center.n] = center[j];
    out.sides[out.center.n] = sides[j];
    ++out.center.n;
  }
  if (out.center.n == 0) throw PreconditionError("restrict_to: empty particle set");
  return out;
}

bool BoxSpec::contains(const MultiSite& x) const {
  for (int j = 0; j < n(); ++j)
    if (!factor(j).contains(x[j])) return false;
  return true;
}

bool BoxSpec::contains_box(const BoxSpec& inner) const {
  for (int j = 0; j < n(); ++j)
    if (sup_dist(inner.center[j], center[j]) + inner.sides[j] > sides[j]) return false;
  return true;
}

double BoxSpec::volume() const {
  double v = 1.0;
  for (int j = 0; j < n(); ++j)
    for (int a = 0; a < d(); ++a) v *= 2.0 * sides[j];
  return v;
}

void BoxSpec::validate() const {
  if (n() < 1 || n() > kMaxParticles) throw PreconditionError("box: particle count must be in [1, 3]");
  check_dim(d());
  for (int j = 0; j < n(); ++j) {
    if (sides[j] < 1) throw PreconditionError("box: half-sides must be >= 1");
    if (center[j].dim != d()) throw PreconditionError("box: site dimension mismatch");
  }
}

std::string to_string(const BoxSpec& b) {
  std::ostringstream os;
  os << "Lambda" << (b.is_cube() ? "" : "_rect") << '(' << to_string(b.center) << "; L=";
  for (int j = 0; j < b.n(); ++j) os << (j ? "," : "") << b.sides[j];
  os << ')';
  return os.str();
}

std::uint64_t count_edges(int d, int L) {
  if (d < 1 || L < 1) throw PreconditionError("count_edges: need d >= 1 and L >= 1");
  std::uint64_t r = checked_mul(static_cast<std::uint64_t>(d), 2ull * static_cast<std::uint64_t>(L));
  for (int i = 1; i < d; ++i) r = checked_mul(r, 2ull * static_cast<std::uint64_t>(L) - 1);
  return r;
}

std::uint64_t count_cubes(int n, int d, std::span<const int> sides) {
  if (n < 1 || static_cast<int>(sides.size()) != n)
    throw PreconditionError("count_cubes: need n >= 1 half-sides");
  std::uint64_t r = 1;
  for (int L : sides) r = checked_mul(r, count_edges(d, L));
  return r;
}

std::vector<EdgeId> enumerate_edges(const Box1& box) {
  const int d = box.center.dim;
  check_dim(d);
  std::vector<EdgeId> out;
  std::vector<int> lo(d), hi(d);
  for (int dir = 1; dir <= d; ++dir) {
    for (int a = 0; a < d; ++a) {
      lo[a] = box.center[a] - box.L + (a == dir - 1 ? 0 : 1);
      hi[a] = box.center[a] + box.L - 1;
    }
    for_each_index(lo, hi, [&](std::span<const int> idx) {
      EdgeId e;
      e.base.dim = d;
      std::copy(idx.begin(), idx.end(), e.base.x.begin());
      e.dir = dir;
      out.push_back(e);
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CubeId> enumerate_cubes(const BoxSpec& box) {
  box.validate();
  const int n = box.n();
  std::vector<std::vector<EdgeId>> factors(n);
  for (int j = 0; j < n; ++j) factors[j] = enumerate_edges(box.factor(j));
  std::vector<int> lo(n, 0), hi(n);
  for (int j = 0; j < n; ++j) hi[j] = static_cast<int>(factors[j].size()) - 1;
  std::vector<CubeId> out;
  out.reserve(count_cubes(n, box.d(), std::span<const int>(box.sides.data(), n)));
  for_each_index(lo, hi, [&](std::span<const int> idx) {
    CubeId c;
    c.n = n;
    for (int j = 0; j < n; ++j) c.edges[j] = factors[j][idx[j]];
    out.push_back(c);
  });
  return out;
}

std::uint64_t enumerate_cube_count(const BoxSpec& box) {
  box.validate();
  const int n = box.n();
  std::vector<std::vector<EdgeId>> factors(n);
  for (int j = 0; j < n; ++j) factors[j] = enumerate_edges(box.factor(j));
  for (const auto& f : factors)
    if (f.empty()) return 0;
  const std::uint64_t last = factors[n - 1].size();
  std::vector<int> lo(n - 1, 0), hi(n - 1);
  for (int j = 0; j + 1 < n; ++j) hi[j] = static_cast<int>(factors[j].size()) - 1;
  std::uint64_t total = 0;
  if (n == 1) return last;
  for_each_index(lo, hi, [&](std::span<const int>) { total += last; });
  return total;
}

std::vector<EdgeId> box_edges(const BoxSpec& box) {
  std::vector<EdgeId> out;
  for (int j = 0; j < box.n(); ++j) {
    auto e = enumerate_edges(box.factor(j));
    out.insert(out.end(), e.begin(), e.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MultiSite> lattice_points(const BoxSpec& box) {
  box.validate();
  const int n = box.n(), d = box.d(), nd = n * d;
  std::vector<int> lo(nd), hi(nd);
  for (int k = 0; k < nd; ++k) {
    lo[k] = box.center.coord(k) - box.sides[k / d] + 1;
    hi[k] = box.center.coord(k) + box.sides[k / d] - 1;
  }
  std::vector<MultiSite> out;
  for_each_index(lo, hi, [&](std::span<const int> idx) {
    MultiSite x = box.center;
    for (int k = 0; k < nd; ++k) x.p[k / d][k % d] = idx[k];
    out.push_back(x);
  });
  return out;
}

std::vector<MultiSite> out_layer(const BoxSpec& cube) {
  const int L = cube.side();
  if (L < 7) throw PreconditionError("out_layer: requires L >= 7");
  std::vector<MultiSite> out;
  for (const MultiSite& x : lattice_points(cube))
    if (sup_dist(x, cube.center) >= L - 6) out.push_back(x);
  return out;
}

ScaledPoint canonical(const NodeKey& key, int d, int M) {
  ScaledPoint s{};
  for (int j = 0; j < key.n; ++j) {
    const GraphPoint& g = key.coords[j];
    for (int a = 0; a < d; ++a) {
      if (g.kind == GraphPoint::Kind::vertex) {
        s[j * d + a] = M * g.vertex[a];
      } else {
        s[j * d + a] = M * g.edge.base[a] + (a == g.edge.dir - 1 ? g.t : 0);
      }
    }
  }
  return s;
}

NodeKey node_key_from(const ScaledPoint& s, int n, int d, int M) {
  NodeKey key;
  key.n = n;
  for (int j = 0; j < n; ++j) {
    GraphPoint g;
    Site base;
    base.dim = d;
    int off_axis = -1;
    int t = 0;
    for (int a = 0; a < d; ++a) {
      const int v = s[j * d + a];
      const int q = v >= 0 ? v / M : -((-v + M - 1) / M);
      base[a] = q;
      if (v - q * M != 0) {
        if (off_axis >= 0) throw PreconditionError("scaled point is not on the lattice graph");
        off_axis = a;
        t = v - q * M;
      }
    }
    if (off_axis < 0) {
      g.kind = GraphPoint::Kind::vertex;
      g.vertex = base;
    } else {
      g.kind = GraphPoint::Kind::edge_point;
      g.edge = EdgeId{base, off_axis + 1};
      g.t = t;
    }
    key.coords[j] = g;
  }
  return key;
}

int DofMap::nodes_per_cube() const {
  int k = 1;
  for (int j = 0; j < n; ++j) k *= M + 1;
  return k;
}

std::span<const int> DofMap::local_to_global(std::size_t cube) const {
  const std::size_t k = static_cast<std::size_t>(nodes_per_cube());
  return std::span<const int>(cube_nodes.data() + cube * k, k);
}

NodeKey DofMap::node_key(int dof) const { return node_key_from(keys.at(dof), n, d, M); }

int DofMap::find(const ScaledPoint& key) const {
  auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it == keys.end() || *it != key) return -1;
  return static_cast<int>(it - keys.begin());
}

ScaledPoint local_node_position(const CubeId& cube, std::span<const int> idx, int d, int M) {
  ScaledPoint s{};
  for (int j = 0; j < cube.n; ++j) {
    const EdgeId& e = cube.edges[j];
    for (int a = 0; a < d; ++a) s[j * d + a] = M * e.base[a] + (a == e.dir - 1 ? idx[j] : 0);
  }
  return s;
}

namespace {

template <class F>
void for_each_local_node(int n, int M, F&& f) {
  std::vector<int> lo(n, 0), hi(n, M);
  int local = 0;
  for_each_index(lo, hi, [&](std::span<const int> idx) { f(local++, idx); });
}

}  // namespace

DofMap glue_nodes(const BoxSpec& box, int M) {
  if (M < 2) throw PreconditionError("mesh too coarse: M must be >= 2");
  DofMap map;
  map.n = box.n();
  map.d = box.d();
  map.M = M;
  map.cubes = enumerate_cubes(box);
  const int per = map.nodes_per_cube();
  std::vector<ScaledPoint> all;
  all.reserve(map.cubes.size() * per);
  for (const CubeId& c : map.cubes)
    for_each_local_node(map.n, M, [&](int, std::span<const int> idx) {
      all.push_back(local_node_position(c, idx, map.d, M));
    });
  map.keys = all;
  std::sort(map.keys.begin(), map.keys.end());
  map.keys.erase(std::unique(map.keys.begin(), map.keys.end()), map.keys.end());
  map.cube_nodes.resize(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) map.cube_nodes[i] = map.find(all[i]);
  return map;
}

DofMap decoupled_nodes(const BoxSpec& box, int M) {
  if (M < 2) throw PreconditionError("mesh too coarse: M must be >= 2");
  DofMap map;
  map.n = box.n();
  map.d = box.d();
  map.M = M;
  map.cubes = enumerate_cubes(box);
  for (const CubeId& c : map.cubes)
    for_each_local_node(map.n, M, [&](int, std::span<const int> idx) {
      map.keys.push_back(local_node_position(c, idx, map.d, M));
    });
  map.cube_nodes.resize(map.keys.size());
  std::iota(map.cube_nodes.begin(), map.cube_nodes.end(), 0);
  return map;
}

bool BoxUnion::contains(const Site& x) const {
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box1& b) { return b.contains(x); });
}

bool BoxUnion::intersects(const BoxUnion& other) const {
  for (const Box1& a : boxes)
    for (const Box1& b : other.boxes)
      if (a.intersects(b)) return true;
  return false;
}

std::vector<std::pair<int, int>> BoxUnion::merged_intervals() const {
  std::vector<std::pair<int, int>> iv;
  for (const Box1& b : boxes) {
    if (b.center.dim != 1) throw PreconditionError("merged_intervals requires d = 1");
    iv.emplace_back(b.center[0] - b.L, b.center[0] + b.L);
  }
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<int, int>> out;
  for (const auto& [lo, hi] : iv) {
    if (!out.empty() && lo < out.back().second) {
      out.back().second = std::max(out.back().second, hi);
    } else {
      out.emplace_back(lo, hi);
    }
  }
  return out;
}

BoxUnion projections(const BoxSpec& box, ParticleSet J) {
  if (J & ~full_set(box.n())) throw PreconditionError("projections: particle index out of range");
  BoxUnion u;
  for (int j : members(J)) u.boxes.push_back(box.factor(j));
  std::sort(u.boxes.begin(), u.boxes.end());
  u.boxes.erase(std::unique(u.boxes.begin(), u.boxes.end()), u.boxes.end());
  return u;
}

int diagonal_distance(const MultiSite& u) {
  int best = 0;
  for (int a = 0; a < u.d; ++a) {
    int lo = INT_MAX, hi = INT_MIN;
    for (int j = 0; j < u.n; ++j) {
      lo = std::min(lo, u[j][a]);
      hi = std::max(hi, u[j][a]);
    }
    int axis_best = INT_MAX;
    for (int x = lo; x <= hi; ++x) {
      int m = 0;
      for (int j = 0; j < u.n; ++j) m = std::max(m, std::abs(u[j][a] - x));
      axis_best = std::min(axis_best, m);
    }
    best = std::max(best, axis_best);
  }
  return best;
}

int partition_distance(const MultiSite& u, ParticleSet J) {
  int best = INT_MAX;
  for (int i = 0; i < u.n; ++i) {
    if (!contains(J, i)) continue;
    for (int j = 0; j < u.n; ++j)
      if (!contains(J, j)) best = std::min(best, sup_dist(u[i], u[j]));
  }
  return best;
}

bool is_decomposable(const MultiSite& center, int L, int r0, ParticleSet J) {
  const ParticleSet full = full_set(center.n);
  if (J == 0 || (J & full) == full) return false;
  return partition_distance(center, J) >= 2 * L + r0;
}

Interactivity classify_interactive(const MultiSite& center, int L, int r0) {
  Interactivity out;
  if (center.n == 1) return out;
  out.diagonal_distance = diagonal_distance(center);
  out.partially_interactive = out.diagonal_distance >= (center.n - 1) * (2 * L + r0);
  if (!out.partially_interactive) return out;
  for (ParticleSet J = 1; J < full_set(center.n); J += 2) {
    if (is_decomposable(center, L, r0, J)) {
      out.witness = J;
      return out;
    }
  }
  throw InternalError("partially interactive cube without a decomposing partition at " + to_string(center));
}

std::vector<MultiSite> related_points(const MultiSite& x) {
  std::vector<Site> coords(x.p.begin(), x.p.begin() + x.n);
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  const int k = static_cast<int>(coords.size());
  std::vector<int> lo(x.n, 0), hi(x.n, k - 1);
  std::vector<MultiSite> out;
  for_each_index(lo, hi, [&](std::span<const int> idx) {
    MultiSite y = x;
    for (int j = 0; j < x.n; ++j) y.p[j] = coords[idx[j]];
    out.push_back(y);
  });
  return out;
}

bool outside_related(std::span<const MultiSite> related, const MultiSite& y, int R) {
  for (const MultiSite& x : related)
    if (sup_dist(x, y) < R) return false;
  return true;
}

int separation_radius(int n, int L, int r0) { return 4 * (n - 1) * (2 * L + r0) + 2 * L; }

bool pre_separable_from(const BoxSpec& a, const BoxSpec& b, ParticleSet J) {
  for (int i = 0; i < a.n(); ++i) {
    if (!contains(J, i)) continue;
    const Box1 ai = a.factor(i);
    for (int k = 0; k < a.n(); ++k)
      if (!contains(J, k) && ai.intersects(a.factor(k))) return false;
    for (int k = 0; k < b.n(); ++k)
      if (ai.intersects(b.factor(k))) return false;
  }
  return true;
}

Separability separability(const BoxSpec& a, const BoxSpec& b, int r0) {
  if (a.n() != b.n() || a.d() != b.d()) throw PreconditionError("separability: boxes of different shape");
  Separability s;
  const ParticleSet full = full_set(a.n());
  for (ParticleSet J = 1; J <= full && !s.pre_separable; ++J) {
    if (pre_separable_from(a, b, J)) {
      s.pre_separable = true;
      s.witness = J;
    } else if (pre_separable_from(b, a, J)) {
      s.pre_separable = true;
      s.witness = J;
      s.witness_on_second = true;
    }
  }
  s.distance = sup_dist(a.center, b.center);
  if (!(a.is_cube() && b.is_cube() && a.side() == b.side())) return s;
  s.radius = separation_radius(a.n(), a.side(), r0);
  s.separable = s.pre_separable && s.distance >= s.radius;
  bool disjoint = true;
  for (int i = 0; i < a.n() && disjoint; ++i)
    for (int k = 0; k < b.n() && disjoint; ++k)
      if (a.factor(i).intersects(b.factor(k))) disjoint = false;
  s.completely_separated = disjoint && s.distance >= s.radius;
  return s;
}

namespace {

std::vector<MultiSite> centre_grid(int n, int d, int lo, int hi) {
  MultiSite c;
  c.n = n;
  c.d = d;
  for (int j = 0; j < n; ++j) c.p[j].dim = d;
  std::vector<MultiSite> out;
  const int width = hi - lo + 1;
  const int coords = n * d;
  std::uint64_t total = 1;
  for (int k = 0; k < coords; ++k) total *= width;
  for (std::uint64_t r = 0; r < total; ++r) {
    MultiSite x = c;
    std::uint64_t q = r;
    for (int k = coords - 1; k >= 0; --k) {
      x.p[k / d][k % d] = lo + static_cast<int>(q % width);
      q /= width;
    }
    out.push_back(x);
  }
  return out;
}

int sup_norm(const MultiSite& x) {
  int m = 0;
  for (int k = 0; k < x.n * x.d; ++k) m = std::max(m, std::abs(x.coord(k)));
  return m;
}

void audit_pair(SeparabilityAudit& a, std::span<const MultiSite> related, const MultiSite& x, bool x_fi,
                const MultiSite& y, int L, int r0, int r) {
  const BoxSpec bx = BoxSpec::cube(x, L), by = BoxSpec::cube(y, L);
  const Separability s = separability(by, bx, r0);
  ++a.pairs;
  if (outside_related(related, y, 2 * x.n * L)) {
    ++a.pre_premise;
    a.pre_ok += s.pre_separable;
  }
  if (outside_related(related, y, r)) {
    ++a.sep_premise;
    a.sep_ok += s.separable;
  }
  if (sup_norm(y) >= 2 * r && sup_norm(x) < r) {
    ++a.far_premise;
    a.far_ok += s.separable;
  }
  if (s.separable && x_fi && !classify_interactive(y, L, r0).partially_interactive) {
    ++a.fi_separable;
    a.fi_complete += s.completely_separated;
  }
}

}  // namespace

nlohmann::json SeparabilityAudit::to_json() const {
  return {{"pairs", pairs},           {"pre_premise", pre_premise}, {"pre_ok", pre_ok},
          {"sep_premise", sep_premise}, {"sep_ok", sep_ok},           {"far_premise", far_premise},
          {"far_ok", far_ok},         {"fi_separable", fi_separable}, {"fi_complete", fi_complete},
          {"pass", pass()}};
}

SeparabilityAudit audit_separability(int n, int d, int L, int r0, int R) {
  if (n < 1 || n > kMaxParticles || d < 1 || d > kMaxDim || L < 1 || r0 < 0 || R < 0)
    throw PreconditionError("audit_separability: parameters out of range");
  const std::vector<MultiSite> grid = centre_grid(n, d, -R, R);
  const int r = separation_radius(n, L, r0);
  SeparabilityAudit a;
  for (const MultiSite& x : grid) {
    const std::vector<MultiSite> rel = related_points(x);
    const bool x_fi = !classify_interactive(x, L, r0).partially_interactive;
    for (const MultiSite& y : grid) audit_pair(a, rel, x, x_fi, y, L, r0, r);
  }
  return a;
}

SeparabilityAudit audit_far_separability(int n, int d, int L, int r0, int width) {
  if (n < 1 || n > kMaxParticles || d < 1 || d > kMaxDim || L < 1 || r0 < 0 || width < 0)
    throw PreconditionError("audit_far_separability: parameters out of range");
  const int r = separation_radius(n, L, r0);
  std::vector<MultiSite> ys;
  for (const MultiSite& y : centre_grid(n, d, -2 * r - width, 2 * r + width))
    if (sup_norm(y) >= 2 * r) ys.push_back(y);
  SeparabilityAudit a;
  for (const MultiSite& x : centre_grid(n, d, -r + 1, r - 1)) {
    const std::vector<MultiSite> rel = related_points(x);
    const bool x_fi = !classify_interactive(x, L, r0).partially_interactive;
    for (const MultiSite& y : ys) audit_pair(a, rel, x, x_fi, y, L, r0, r);
  }
  return a;
}

std::vector<EnclosingCube> cluster_cubes(std::span<const MultiSite> centers, int L) {
  constexpr int kPad = 7;
  const int k = static_cast<int>(centers.size());
  if (k < 1) throw PreconditionError("cluster_cubes: need at least one cube");
  if (L < 1) throw PreconditionError("cluster_cubes: L must be >= 1");
  const int n = centers[0].n, d = centers[0].d;

  std::vector<EnclosingCube> cur;
  for (int r = 0; r < k; ++r) cur.push_back({centers[r], L + kPad, 1, {r}});

  auto first_member = [&](const EnclosingCube& c) {
    MultiSite m = centers[c.members[0]];
    for (int r : c.members) m = std::min(m, centers[r]);
    return m;
  };

  for (int iter = 0;; ++iter) {
    if (iter > k) throw InternalError("cluster_cubes: merge procedure did not terminate");
    const int q = static_cast<int>(cur.size());
    std::vector<int> parent(q);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> root = [&](int i) { return parent[i] == i ? i : parent[i] = root(parent[i]); };
    bool merged = false;
    for (int i = 0; i < q; ++i)
      for (int j = i + 1; j < q; ++j)
        if (sup_dist(cur[i].center, cur[j].center) < cur[i].side + cur[j].side) {
          parent[root(i)] = root(j);
          merged = true;
        }
    if (!merged) break;

    std::vector<std::vector<int>> groups(q);
    for (int i = 0; i < q; ++i) groups[root(i)].push_back(i);
    std::vector<EnclosingCube> next;
    for (const auto& g : groups) {
      if (g.empty()) continue;
      if (g.size() == 1) {
        next.push_back(cur[g[0]]);
        continue;
      }
      EnclosingCube e;
      for (int i : g) {
        e.count += cur[i].count;
        e.members.insert(e.members.end(), cur[i].members.begin(), cur[i].members.end());
      }
      std::sort(e.members.begin(), e.members.end());
      e.side = e.count * (L + kPad);
      e.center.n = n;
      e.center.d = d;
      for (int j = 0; j < n; ++j) {
        e.center.p[j].dim = d;
        for (int a = 0; a < d; ++a) {
          long long lo = LLONG_MAX, hi = LLONG_MIN;
          for (int i : g) {
            lo = std::min<long long>(lo, cur[i].center[j][a] - cur[i].side);
            hi = std::max<long long>(hi, cur[i].center[j][a] + cur[i].side);
          }
          e.center.p[j][a] = floor_div2(lo + hi);
        }
      }
      for (int i : g)
        if (sup_dist(cur[i].center, e.center) + cur[i].side > e.side)
          throw InternalError("cluster_cubes: enclosing cube does not contain its component");
      next.push_back(std::move(e));
    }
    cur = std::move(next);
  }

  std::sort(cur.begin(), cur.end(),
            [&](const EnclosingCube& x, const EnclosingCube& y) { return first_member(x) < first_member(y); });

  int total = 0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const EnclosingCube& c = cur[i];
    if (c.side != c.count * (L + kPad)) throw InternalError("cluster_cubes: side arithmetic violated");
    total += c.side;
    for (std::size_t j = i + 1; j < cur.size(); ++j)
      if (sup_dist(c.center, cur[j].center) < c.side + cur[j].side)
        throw InternalError("cluster_cubes: output cubes intersect");
    for (int r : c.members)
      if (sup_dist(centers[r], c.center) + L > c.side - kPad)
        throw InternalError("cluster_cubes: input cube not covered");
  }
  if (total != k * (L + kPad)) throw InternalError("cluster_cubes: total side arithmetic violated");
  return cur;
}

bool is_R_connected(std::span<const Site> points, int R) {
  const int k = static_cast<int>(points.size());
  if (k == 0) throw PreconditionError("is_R_connected: empty point set");
  std::vector<char> seen(k, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < k; ++j)
      if (!seen[j] && sup_dist(points[i], points[j]) < 2 * R) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
  }
  const bool connected = reached == k;
  if (connected && k >= 2) {
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        if (sup_dist(points[i], points[j]) >= (k - 1) * 2 * R)
          throw InternalError("R-connected set violates the diameter bound");
  }
  return connected;
}

nlohmann::json describe_complex(const BoxSpec& box, int M) {
  box.validate();
  const int n = box.n(), d = box.d();
  const auto cubes = enumerate_cubes(box);
  std::set<std::vector<int>> faces;
  for (const CubeId& c : cubes) {
    for (int i = 0; i < n; ++i) {
      for (int end = 0; end <= 1; ++end) {
        std::vector<int> f;
        for (int j = 0; j < n; ++j) {
          const EdgeId& e = c.edges[j];
          if (j == i) {
            f.push_back(0);
            for (int a = 0; a < d; ++a) f.push_back(e.base[a] + (end && a == e.dir - 1 ? 1 : 0));
          } else {
            f.push_back(e.dir);
            for (int a = 0; a < d; ++a) f.push_back(e.base[a]);
          }
        }
        faces.insert(std::move(f));
      }
    }
  }
  nlohmann::json j;
  j["n"] = n;
  j["d"] = d;
  j["center"] = to_string(box.center);
  j["sides"] = std::vector<int>(box.sides.begin(), box.sides.begin() + n);
  j["edges_per_factor"] = nlohmann::json::array();
  for (int p = 0; p < n; ++p) j["edges_per_factor"].push_back(count_edges(d, box.sides[p]));
  j["cubes"] = cubes.size();
  j["faces"] = faces.size();
  j["mesh_M"] = M;
  j["dofs_glued"] = glue_nodes(box, M).size();
  j["dofs_decoupled"] = cubes.size() * static_cast<std::size_t>(std::pow(M + 1, n));
  if (cubes.size() <= 64) {
    auto& list = j["cube_list"] = nlohmann::json::array();
    for (const CubeId& c : cubes) {
      auto& entry = list.emplace_back(nlohmann::json::array());
      for (int p = 0; p < n; ++p) entry.push_back(to_string(c.edges[p].base) + "/" + std::to_string(c.edges[p].dir));
    }
  }
  return j;
}

}  // namespace qgl

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "qgl/errors.hpp"
#include "qgl/lattice.hpp"

using namespace qgl;

namespace {

// Open unit segment [b, b + e_dir] meets the open sup-norm box.
bool segment_meets_box(const Site& b, int dir, const Site& u, int L) {
  for (int a = 0; a < b.dim; ++a) {
    if (a == dir - 1) {
      if (!(b[a] < u[a] + L && b[a] + 1 > u[a] - L)) return false;
    } else if (std::abs(b[a] - u[a]) >= L) {
      return false;
    }
  }
  return true;
}

std::vector<EdgeId> brute_edges(const Box1& box) {
  std::vector<EdgeId> out;
  const int d = box.center.dim;
  const int R = box.L + 2;
  std::vector<int> lo(d), idx(d);
  for (int a = 0; a < d; ++a) lo[a] = box.center[a] - R;
  const int w = 2 * R + 1;
  int total = 1;
  for (int a = 0; a < d; ++a) total *= w;
  for (int r = 0; r < total; ++r) {
    Site b;
    b.dim = d;
    int q = r;
    for (int a = 0; a < d; ++a) {
      b[a] = lo[a] + q % w;
      q /= w;
    }
    for (int dir = 1; dir <= d; ++dir)
      if (segment_meets_box(b, dir, box.center, box.L)) out.push_back({b, dir});
  }
  std::sort(out.begin(), out.end());
  return out;
}

Site site(int d, int v) {
  Site s;
  s.dim = d;
  for (int a = 0; a < d; ++a) s[a] = v;
  return s;
}

int brute_diagonal_distance(int a, int b) {
  int best = 1 << 30;
  for (int x = std::min(a, b) - 5; x <= std::max(a, b) + 5; ++x) best = std::min(best, std::max(std::abs(a - x), std::abs(b - x)));
  return best;
}

}  // namespace

TEST_CASE("count_edges matches the closed form") {
  CHECK(count_edges(1, 5) == 10);
  CHECK(count_edges(2, 1) == 4);
  CHECK(count_edges(3, 2) == 108);
}

TEST_CASE("enumerate_edges agrees with the geometric segment test") {
  for (int d = 1; d <= 3; ++d)
    for (int L = 1; L <= 4; ++L) {
      const Box1 box{site(d, 1), L};
      auto got = enumerate_edges(box);
      std::sort(got.begin(), got.end());
      const auto want = brute_edges(box);
      CHECK(got == want);
      CHECK(got.size() == count_edges(d, L));
    }
}

TEST_CASE("enumerate_edges of the unit box") {
  const auto e = enumerate_edges(Box1{Site::of({0}), 1});
  REQUIRE(e.size() == 2);
  std::set<std::pair<int, int>> got;
  for (const EdgeId& x : e) got.insert({x.base[0], x.dir});
  CHECK(got == std::set<std::pair<int, int>>{{-1, 1}, {0, 1}});
}

TEST_CASE("count_cubes") {
  const std::vector<int> s23{2, 3};
  CHECK(count_cubes(2, 1, s23) == 24);
  const std::vector<int> s1{1};
  CHECK(count_cubes(1, 1, s1) == 2);
  const std::vector<int> s11{1, 1};
  CHECK(count_cubes(2, 2, s11) == 16);
  CHECK(enumerate_cubes(BoxSpec::cube(MultiSite::of(2, {0, 0, 0, 0}), 1)).size() == 16);
}

TEST_CASE("cubes of the unit square box are the four unit squares") {
  const auto cubes = enumerate_cubes(BoxSpec::cube(MultiSite::of(1, {0, 0}), 1));
  REQUIRE(cubes.size() == 4);
  std::set<std::pair<int, int>> corners;
  for (const CubeId& c : cubes) corners.insert({c.edges[0].base[0], c.edges[1].base[0]});
  CHECK(corners == std::set<std::pair<int, int>>{{-1, -1}, {-1, 0}, {0, -1}, {0, 0}});
}

TEST_CASE("cube enumeration agrees with count_cubes on random boxes") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const int d = 1 + static_cast<int>(rng() % (n == 3 ? 2 : 3));
    BoxSpec b;
    b.center.n = n;
    b.center.d = d;
    for (int j = 0; j < n; ++j) {
      b.center.p[j].dim = d;
      for (int a = 0; a < d; ++a) b.center.p[j][a] = static_cast<int>(rng() % 11) - 5;
      b.sides[j] = 1 + static_cast<int>(rng() % 3);
    }
    const std::vector<int> sides(b.sides.begin(), b.sides.begin() + n);
    const std::uint64_t want = count_cubes(n, d, sides);
    CHECK(enumerate_cube_count(b) == want);
    if (want <= 20000) CHECK(enumerate_cubes(b).size() == want);
  }
}

TEST_CASE("glued node counts") {
  const DofMap chain = glue_nodes(BoxSpec::cube(MultiSite::of(1, {0}), 2), 2);
  CHECK(chain.size() == 9);
  CHECK(glue_nodes(BoxSpec::cube(MultiSite::of(1, {0, 0}), 1), 2).size() == 25);
  CHECK(decoupled_nodes(BoxSpec::cube(MultiSite::of(1, {0}), 2), 2).size() == 12);
}

TEST_CASE("a degree-4 vertex is shared by four edge grids") {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(2, {0, 0}), 2);
  const DofMap dofs = glue_nodes(box, 3);
  ScaledPoint origin{};
  const int idx = dofs.find(origin);
  REQUIRE(idx >= 0);
  int sharing = 0;
  for (std::size_t c = 0; c < dofs.cubes.size(); ++c) {
    const auto nodes = dofs.local_to_global(c);
    sharing += std::count(nodes.begin(), nodes.end(), idx);
  }
  CHECK(sharing == 4);
}

TEST_CASE("canonical keys round trip") {
  const DofMap dofs = glue_nodes(BoxSpec::cube(MultiSite::of(2, {0, 0, 1, 1}), 1), 2);
  for (int i = 0; i < dofs.size(); ++i) CHECK(canonical(dofs.node_key(i), 2, 2) == dofs.keys[i]);
}

TEST_CASE("projections") {
  const BoxSpec box = BoxSpec::cube(MultiSite::of(1, {0, 10}), 2);
  CHECK(projections(box, 0).empty());
  const BoxUnion one = projections(box, 0b1);
  REQUIRE(one.boxes.size() == 1);
  CHECK(one.boxes[0] == Box1{Site::of({0}), 2});

  const BoxSpec three = BoxSpec::cube(MultiSite::of(1, {0, 3, 20}), 2);
  const auto merged = projections(three, full_set(3)).merged_intervals();
  // interval-union oracle: (-2,2) and (1,5) overlap, (18,22) stands alone
  CHECK(merged == std::vector<std::pair<int, int>>{{-2, 5}, {18, 22}});
}

TEST_CASE("diagonal distance and interactivity") {
  for (int a = -6; a <= 6; ++a)
    for (int b = -6; b <= 6; ++b) CHECK(diagonal_distance(MultiSite::of(1, {a, b})) == brute_diagonal_distance(a, b));
  const Interactivity far = classify_interactive(MultiSite::of(1, {0, 100}), 10, 1);
  CHECK(far.diagonal_distance == brute_diagonal_distance(0, 100));
  CHECK(far.partially_interactive);
  CHECK(far.witness == 0b1);
  CHECK_FALSE(classify_interactive(MultiSite::of(1, {0, 5}), 10, 1).partially_interactive);
  CHECK_FALSE(classify_interactive(MultiSite::of(1, {4, 4}), 1, 1).partially_interactive);
}

TEST_CASE("related points") {
  auto rel = related_points(MultiSite::of(1, {1, 5}));
  std::sort(rel.begin(), rel.end());
  std::vector<MultiSite> want{MultiSite::of(1, {1, 1}), MultiSite::of(1, {1, 5}), MultiSite::of(1, {5, 1}),
                              MultiSite::of(1, {5, 5})};
  std::sort(want.begin(), want.end());
  CHECK(rel == want);
  CHECK(related_points(MultiSite::of(1, {3, 3})).size() == 1);
  CHECK(related_points(MultiSite::of(1, {1, 2, 3})).size() == 27);
}

TEST_CASE("separation radius and separability") {
  CHECK(separation_radius(3, 5, 2) == 106);
  const BoxSpec a = BoxSpec::cube(MultiSite::of(1, {0, 0}), 2);
  CHECK_FALSE(separability(a, a, 1).pre_separable);
  const BoxSpec b = BoxSpec::cube(MultiSite::of(1, {100, 200}), 2);
  const Separability s = separability(a, b, 1);
  CHECK(s.pre_separable);
  CHECK(s.separable);
  CHECK(s.completely_separated);
}

TEST_CASE("separability audit on the exhaustive d=1 n=2 L=2 grid") {
  const SeparabilityAudit a = audit_separability(2, 1, 2, 1, 30);
  CHECK(a.pairs == 61ull * 61 * 61 * 61);
  CHECK(a.pre_premise > 0);
  CHECK(a.fi_separable > 0);
  CHECK(a.pass());
}

TEST_CASE("cluster_cubes") {
  const int L = 5;
  const std::vector<MultiSite> one{MultiSite::of(1, {3})};
  const auto c1 = cluster_cubes(one, L);
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].side == L + 7);
  CHECK(c1[0].center == one[0]);

  const std::vector<MultiSite> two{MultiSite::of(1, {0}), MultiSite::of(1, {100})};
  const auto c2 = cluster_cubes(two, L);
  REQUIRE(c2.size() == 2);
  CHECK(c2[0].side == L + 7);
  CHECK(sup_dist(c2[0].center, c2[1].center) >= 2 * (L + 7));

  const std::vector<MultiSite> chain{MultiSite::of(1, {0}), MultiSite::of(1, {L}), MultiSite::of(1, {2 * L})};
  const auto c3 = cluster_cubes(chain, L);
  REQUIRE(c3.size() == 1);
  CHECK(c3[0].side == 3 * (L + 7));
  CHECK(c3[0].members == std::vector<int>{0, 1, 2});
}

TEST_CASE("R-connectedness") {
  const std::vector<Site> single{Site::of({4})};
  CHECK(is_R_connected(single, 1));
  const std::vector<Site> gap{Site::of({0}), Site::of({3})};
  CHECK_FALSE(is_R_connected(gap, 1));
  const std::vector<Site> run{Site::of({0}), Site::of({1}), Site::of({2})};
  CHECK(is_R_connected(run, 1));
  CHECK(sup_dist(run.front(), run.back()) < 2 * 2 * 1);
}

TEST_CASE("invalid boxes are rejected") {
  BoxSpec b = BoxSpec::cube(MultiSite::of(1, {0}), 1);
  b.sides[0] = 0;
  CHECK_THROWS_AS(b.validate(), PreconditionError);
}

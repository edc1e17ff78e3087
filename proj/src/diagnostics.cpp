#include "qgl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "qgl/errors.hpp"
#include "qgl/random_model.hpp"

namespace qgl {

using Eigen::VectorXd;

double weyl_constant(int n, int d, double S, double q_minus) {
  const double x = S - n * q_minus;
  if (!(x > 0)) return 1.0;
  const double num = std::pow(static_cast<double>(d), n) * std::pow(x, 0.5 * n);
  const double den = std::pow(4.0 * std::numbers::pi, 0.5 * n) * std::tgamma(0.5 * n);
  return std::floor(num / den) + 1.0;
}

WeylCheck weyl_check(const AssembledOperator& op, double S, double q_minus) {
  WeylCheck w;
  w.S = S;
  w.count = count_below(op, S + 1e-12 * std::max(1.0, std::abs(S)));
  w.constant = weyl_constant(op.n(), op.box.d(), S, q_minus);
  w.volume = op.box.volume();
  w.bound = w.constant * w.volume;
  w.pass = w.count <= w.bound;
  return w;
}

CheegerCheck cheeger_gap_check(int l, int d, int M) {
  if (l < 1 || d < 1 || d > kMaxDim) throw PreconditionError("cheeger_gap_check: need l >= 1 and 1 <= d <= 3");
  MultiSite c;
  c.n = 1;
  c.d = d;
  c.p[0].dim = d;
  const BoxSpec box = BoxSpec::cube(c, l);
  const auto edges = box_edges(box);
  const AssembledOperator op = assemble(box, constant_omega(edges, 0.0), {}, Mesh{M});
  EigenOptions opt;
  opt.want_vectors = false;
  const SpectralResult r = lowest_eigs(op, 2, opt);
  CheegerCheck out;
  out.l = l;
  out.d = d;
  out.E1 = r.eigenvalues[0];
  out.E2 = r.eigenvalues[1];
  const double nl = static_cast<double>(count_edges(d, l));
  out.threshold = 1.0 / (nl * nl);
  out.pass = out.E2 >= out.threshold;
  return out;
}

double combes_thomas_bound(double delta, double eta) {
  if (!(delta > 0) || !(eta > 0)) throw PreconditionError("combes_thomas_bound: need delta > 0 and eta > 0");
  const double sd = std::sqrt(delta);
  return std::sqrt(std::numbers::pi / 2) * (sd / std::pow(eta, 0.75) + 3.0 / (8.0 * sd * std::pow(eta, 1.25))) *
         std::exp(-delta * std::sqrt(eta));
}

std::vector<MultiSite> far_points(const BoxSpec& box, const MultiSite& x, int min_delta, int max_delta) {
  std::vector<MultiSite> out;
  for (const MultiSite& y : lattice_points(box)) {
    const int dl = cell_distance(x, y);
    if (dl >= min_delta && dl <= max_delta) out.push_back(y);
  }
  return out;
}

std::vector<MultiSite> probe_sources(const BoxSpec& box) {
  if (box.n() == 1) return lattice_points(box);
  const int d = box.d(), nd = box.n() * d;
  std::vector<MultiSite> out;
  int total = 1;
  for (int k = 0; k < nd; ++k) total *= 3;
  for (int code = 0; code < total; ++code) {
    MultiSite x = box.center;
    int c = code;
    for (int k = 0; k < nd; ++k) {
      const int half = box.sides[k / d] / 2;
      x.p[k / d][k % d] += (c % 3 - 1) * half;
      c /= 3;
    }
    out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CtReport verify_combes_thomas(const AssembledOperator& op, double E, double s_omega,
                              std::span<const MultiSite> sources, std::span<const MultiSite> targets) {
  CtReport rep;
  rep.energy = E;
  rep.s_omega = s_omega;
  rep.eta = s_omega - E;
  if (!(rep.eta > 0)) throw PreconditionError("combes_thomas: requires E below the spectrum");
  const Resolvent res(op, E);
  for (const MultiSite& y : sources) {
    std::vector<MultiSite> xs;
    for (const MultiSite& x : targets)
      if (cell_distance(x, y) >= 1) xs.push_back(x);
    if (xs.empty()) continue;
    for (const GreenBlock& g : res.blocks_from(y, xs)) {
      CtPair p;
      p.source = y;
      p.target = g.target;
      p.delta = cell_distance(g.target, y);
      p.measured = g.norm;
      p.bound = combes_thomas_bound(p.delta, rep.eta);
      p.pass = p.measured <= p.bound;
      rep.passed += p.pass;
      rep.pairs.push_back(p);
    }
  }
  return rep;
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::fail:
      return "fail";
    case CheckStatus::inconclusive:
      return "inconclusive";
  }
  return "?";
}

int cellular_distance(const CellularSet& a, const CellularSet& b) {
  if (a.cells.empty() || b.cells.empty()) throw PreconditionError("cellular set is empty");
  int best = std::numeric_limits<int>::max();
  for (const MultiSite& x : a.cells)
    for (const MultiSite& y : b.cells) best = std::min(best, cell_distance(x, y));
  return best;
}

namespace {

std::vector<char> cell_mask(const DofMap& dofs, const CellularSet& s) {
  std::vector<char> mask(dofs.size(), 0);
  for (const MultiSite& x : s.cells)
    for (int i : cell_dofs(dofs, x)) mask[i] = 1;
  return mask;
}

}  // namespace

VectorXd cell_indicator(const DofMap& dofs, const CellularSet& s) {
  const std::vector<char> mask = cell_mask(dofs, s);
  VectorXd v = VectorXd::Zero(dofs.size());
  for (int i = 0; i < dofs.size(); ++i)
    if (mask[i]) v[i] = 1.0;
  return v;
}

bool supported_in(const DofMap& dofs, const VectorXd& f, const CellularSet& s) {
  const std::vector<char> mask = cell_mask(dofs, s);
  for (int i = 0; i < dofs.size(); ++i)
    if (!mask[i] && f[i] != 0.0) return false;
  return true;
}

std::vector<DgEntry> verify_davies_gaffney(const HeatPropagator& heat, const AssembledOperator& op, double s_omega,
                                           const VectorXd& f, const CellularSet& A, std::span<const DgTarget> targets,
                                           std::span<const double> times) {
  if (!supported_in(op.dofs, f, A)) throw PreconditionError("davies_gaffney: f must be supported in its cellular set");
  std::vector<int> delta;
  std::vector<double> ng;
  for (const DgTarget& tg : targets) {
    delta.push_back(cellular_distance(A, tg.B));
    if (delta.back() < 1) throw PreconditionError("davies_gaffney: supports must be at distance >= 1");
    if (!supported_in(op.dofs, tg.g, tg.B))
      throw PreconditionError("davies_gaffney: g must be supported in its cellular set");
    ng.push_back(std::sqrt(std::max(0.0, heat.inner(tg.g, tg.g))));
  }
  const double nf = std::sqrt(std::max(0.0, heat.inner(f, f)));
  std::vector<DgEntry> out;
  for (double t : times) {
    std::optional<SemigroupAction> act;
    VectorXd Bu;
    try {
      act = heat.apply(f, t);
      Bu = op.B * act->value;
    } catch (const InconclusiveError&) {
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
      DgEntry e;
      e.t = t;
      e.delta = delta[k];
      e.target = static_cast<int>(k);
      e.rhs = std::exp(-t * s_omega - delta[k] * delta[k] / (4.0 * t)) * nf * ng[k];
      if (!act) {
        e.error = INFINITY;
      } else {
        e.value = Bu.dot(targets[k].g);
        e.error = act->error_bound * ng[k];
        if (std::abs(e.value) + e.error <= e.rhs)
          e.status = CheckStatus::pass;
        else if (std::abs(e.value) - e.error > e.rhs)
          e.status = CheckStatus::fail;
      }
      out.push_back(e);
    }
  }
  return out;
}

std::vector<DgEntry> verify_davies_gaffney(const HeatPropagator& heat, const AssembledOperator& op, double s_omega,
                                           const VectorXd& f, const CellularSet& A, const VectorXd& g,
                                           const CellularSet& B, std::span<const double> times) {
  const DgTarget tg{g, B};
  return verify_davies_gaffney(heat, op, s_omega, f, A, std::span<const DgTarget>(&tg, 1), times);
}

nlohmann::json MsaPredicateReport::to_json() const {
  nlohmann::json j;
  j["cube"] = to_string(cube);
  j["energy"] = energy;
  j["mass"] = mass;
  auto opt = [&](const char* key, const std::optional<bool>& v) {
    if (v) j[key] = *v;
  };
  opt("ns", ns);
  j["resonant"] = resonant;
  if (ns) {
    j["max_norm"] = max_norm;
    j["threshold"] = threshold;
  }
  if (argmax) j["argmax"] = to_string(*argmax);
  opt("nr", nr);
  opt("cnr", cnr);
  if (cnr) {
    j["cnr_sampled"] = cnr_sampled;
    j["subcubes_tested"] = subcubes_tested;
  }
  if (offending) j["offending"] = to_string(*offending);
  opt("nt", nt);
  opt("hnr", hnr);
  opt("good", good);
  if (good) j["singular_count"] = singular_count;
  if (!witness.empty()) j["witness"] = witness;
  return j;
}

MsaPredicateReport classify_NS(const AssembledOperator& op, double E, double m) {
  const BoxSpec& cube = op.box;
  if (!cube.is_cube() || cube.side() < 7) throw PreconditionError("classify_NS: requires a cube with L >= 7");
  MsaPredicateReport rep;
  rep.cube = cube;
  rep.energy = E;
  rep.mass = m;
  const int L = cube.side();
  rep.threshold = std::exp(-m * L);
  const double r = 1e-10 * std::max(1.0, std::abs(E));
  try {
    if (count_below(op, E - r) != count_below(op, E + r)) rep.resonant = true;
  } catch (const ResonanceError&) {
    rep.resonant = true;
  }
  if (!rep.resonant) {
    try {
      const Resolvent res(op, E);
      const std::vector<MultiSite> layer = out_layer(cube);
      for (const GreenBlock& g : res.blocks_from(cube.center, layer)) {
        if (g.norm > rep.max_norm || !rep.argmax) {
          rep.max_norm = g.norm;
          rep.argmax = g.target;
        }
      }
    } catch (const ResonanceError&) {
      rep.resonant = true;
    }
  }
  if (rep.resonant) {
    rep.ns = false;
    rep.max_norm = INFINITY;
    rep.witness = "eigenvalue within " + std::to_string(r) + " of E";
    return rep;
  }
  rep.ns = rep.max_norm <= rep.threshold;
  return rep;
}

namespace {

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

int min_cnr_side(int L) {
  int l = 1;
  while (static_cast<long long>(l) * l * l < static_cast<long long>(L) * L) ++l;
  return l;
}

BoxSpec unrank_subcube(const BoxSpec& cube, std::uint64_t rank) {
  const int L = cube.side();
  const int nd = cube.n() * cube.d(), d = cube.d();
  for (int l = min_cnr_side(L); l <= L; ++l) {
    const std::uint64_t w = 2 * static_cast<std::uint64_t>(L - l) + 1;
    const std::uint64_t block = ipow(w, nd);
    if (rank < block) {
      MultiSite v = cube.center;
      for (int k = nd - 1; k >= 0; --k) {
        v.p[k / d][k % d] += static_cast<int>(rank % w) - (L - l);
        rank /= w;
      }
      return BoxSpec::cube(v, l);
    }
    rank -= block;
  }
  throw InternalError("unrank_subcube: rank out of range");
}

}  // namespace

std::uint64_t count_cnr_subcubes(const BoxSpec& cube) {
  const int L = cube.side();
  const int nd = cube.n() * cube.d();
  std::uint64_t total = 0;
  for (int l = min_cnr_side(L); l <= L; ++l) total += ipow(2 * static_cast<std::uint64_t>(L - l) + 1, nd);
  return total;
}

std::vector<BoxSpec> cnr_subcubes(const BoxSpec& cube, std::uint64_t budget, std::uint64_t seed, bool* sampled) {
  if (!cube.is_cube()) throw PreconditionError("cnr_subcubes: requires a cube");
  const std::uint64_t total = count_cnr_subcubes(cube);
  std::vector<std::uint64_t> ranks;
  if (total <= budget) {
    for (std::uint64_t r = 0; r < total; ++r) ranks.push_back(r);
    if (sampled) *sampled = false;
  } else {
    if (budget == 0) throw PreconditionError("cnr_subcubes: budget must be >= 1");
    std::set<std::uint64_t> pick{total - 1};  // the cube itself
    std::uint64_t counter = 0;
    while (pick.size() < budget) pick.insert(splitmix64(mix_seed(seed, counter++)) % total);
    ranks.assign(pick.begin(), pick.end());
    if (sampled) *sampled = true;
  }
  std::vector<BoxSpec> out;
  out.reserve(ranks.size());
  for (std::uint64_t r : ranks) out.push_back(unrank_subcube(cube, r));
  return out;
}

MsaPredicateReport check_NR_CNR(const OperatorFactory& factory, const BoxSpec& cube, double E, std::uint64_t budget,
                                std::uint64_t seed) {
  MsaPredicateReport rep;
  rep.cube = cube;
  rep.energy = E;
  auto is_nr = [&](const AssembledOperator& op, int l) {
    try {
      return spectrum_avoids(op, E, std::exp(-std::sqrt(static_cast<double>(l))));
    } catch (const ResonanceError&) {
      return false;
    }
  };
  const AssembledOperator full = factory(cube);
  rep.nr = is_nr(full, cube.side());
  bool sampled = false;
  const std::vector<BoxSpec> subs = cnr_subcubes(cube, budget, seed, &sampled);
  rep.cnr_sampled = sampled;
  rep.cnr = true;
  for (const BoxSpec& s : subs) {
    ++rep.subcubes_tested;
    const bool ok = s == cube ? *rep.nr : is_nr(factory(s), s.side());
    if (!ok) {
      rep.cnr = false;
      rep.offending = s;
      rep.witness = "sub-cube " + to_string(s) + " is not E-NR";
      break;
    }
  }
  return rep;
}

namespace {

bool find_clique(const std::vector<std::vector<char>>& adj, int want, std::vector<int>& cur, int start) {
  if (static_cast<int>(cur.size()) == want) return true;
  const int k = static_cast<int>(adj.size());
  for (int i = start; i < k; ++i) {
    bool ok = true;
    for (int j : cur) ok = ok && adj[i][j];
    if (!ok) continue;
    cur.push_back(i);
    if (find_clique(adj, want, cur, i + 1)) return true;
    cur.pop_back();
  }
  return false;
}

MultiSite project(const MultiSite& x, ParticleSet J) {
  std::vector<Site> sites;
  for (int j = 0; j < x.n; ++j)
    if (contains(J, j)) sites.push_back(x[j]);
  return MultiSite::from_sites(sites);
}

}  // namespace

Goodness goodness(const OperatorFactory& factory, const BoxSpec& cube, int l, double E, double m, int J, int r0) {
  if (!cube.is_cube()) throw PreconditionError("goodness: requires a cube");
  const int L = cube.side();
  if (l < 7 || l > L) throw PreconditionError("goodness: requires 7 <= l <= L");
  Goodness out;
  const BoxSpec inner = BoxSpec::cube(cube.center, L - l + 1);
  for (const MultiSite& v : lattice_points(inner)) {
    const BoxSpec s = BoxSpec::cube(v, l);
    const MsaPredicateReport r = classify_NS(factory(s), E, m);
    if (!*r.ns) out.singular.push_back(s);
  }
  const int k = static_cast<int>(out.singular.size());
  std::vector<std::vector<char>> adj(k, std::vector<char>(k, 0));
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      adj[i][j] = adj[j][i] = separability(out.singular[i], out.singular[j], r0).separable;
  std::vector<int> cur;
  if (find_clique(adj, J + 1, cur, 0)) {
    out.good = false;
    for (int i : cur) out.witness.push_back(out.singular[i]);
  }
  return out;
}

MsaPredicateReport check_NT_HNR(const BoxSpec& cube, ParticleSet J, const OmegaSample& omega,
                                const InteractionSpec& interaction, const Mesh& mesh, double E,
                                const NtHnrOptions& opt) {
  if (!cube.is_cube()) throw PreconditionError("check_NT_HNR: requires a cube");
  const FactorPair fp = assemble_decomposed(cube, J, omega, interaction, mesh);
  const OperatorFactory factory = [&](const BoxSpec& b) { return assemble(b, omega, interaction, mesh); };
  MsaPredicateReport rep;
  rep.cube = cube;
  rep.energy = E;
  rep.mass = opt.m_prev;
  rep.nt = true;
  rep.hnr = true;
  int evaluated = 0;

  // side 0: first factor at shifts by the second factor's spectrum; side 1: the reverse
  for (int side = 0; side < 2; ++side) {
    const AssembledOperator& self = side == 0 ? fp.first : fp.second;
    const AssembledOperator& other = side == 0 ? fp.second : fp.first;
    const int n_self = self.n();
    const double cutoff = E - (n_self * opt.q_minus - 0.5);
    EigenOptions eo;
    eo.want_vectors = false;
    const SpectralResult shifts = eigs_below(other, cutoff, eo);
    for (double mu : shifts.eigenvalues) {
      const double Es = E - mu;
      ++evaluated;
      const MsaPredicateReport cnr = check_NR_CNR(factory, self.box, Es, opt.cnr_budget, opt.seed);
      rep.cnr_sampled = rep.cnr_sampled || cnr.cnr_sampled;
      if (!*cnr.cnr && *rep.hnr) {
        rep.hnr = false;
        rep.offending = cnr.offending;
        rep.witness = "factor " + to_string(self.box) + " not CNR at shift " + std::to_string(mu);
      }
      const Goodness g = goodness(factory, self.box, opt.l, Es, opt.m_prev, 1, opt.r0);
      rep.singular_count += static_cast<int>(g.singular.size());
      if (!g.good && *rep.nt) {
        rep.nt = false;
        if (rep.witness.empty())
          rep.witness = "factor " + to_string(self.box) + " bad at shift " + std::to_string(mu);
      }
    }
  }
  rep.good = rep.nt;
  rep.subcubes_tested = evaluated;
  return rep;
}

Gri2Audit verify_gri2(const AssembledOperator& op_large, const AssembledOperator& op_small, double E,
                      const MultiSite& u, const MultiSite& y) {
  const BoxSpec& big = op_large.box;
  const BoxSpec& small = op_small.box;
  if (!big.is_cube() || !small.is_cube()) throw PreconditionError("gri: cubes required");
  const int L = big.side(), l = small.side();
  if (l < 7) throw PreconditionError("gri: requires l >= 7");
  if (sup_dist(small.center, big.center) + l > L - 7) throw PreconditionError("gri: Lambda_l must lie in Lambda_{L-7}");
  if (sup_dist(u, small.center) >= l - 7) throw PreconditionError("gri: u must lie in Lambda_{l-7}");
  const int dy = sup_dist(y, big.center);
  if (dy < L - 6 || dy > L - 1) throw PreconditionError("gri: y must lie in the out-layer of Lambda_L");

  Gri2Audit a;
  const Resolvent RL(op_large, E), Rl(op_small, E);
  a.lhs = RL.block(u, y).norm;
  const std::vector<MultiSite> layer = out_layer(small);
  a.out_count = static_cast<int>(layer.size());
  double left = 0, right = 0;
  for (const GreenBlock& g : Rl.blocks_from(u, layer)) left = std::max(left, g.norm);
  for (const GreenBlock& g : RL.blocks_from(y, layer)) right = std::max(right, g.norm);
  a.rhs_factor = static_cast<double>(a.out_count) * a.out_count * left * right;
  a.empirical_C = a.rhs_factor > 0 ? a.lhs / a.rhs_factor : INFINITY;
  return a;
}

Gri3Audit verify_gri3(const BoxSpec& cube, ParticleSet J, const OmegaSample& omega, const InteractionSpec& interaction,
                      const Mesh& mesh, double E, const MultiSite& x, const MultiSite& y, double S, double q_minus) {
  if (!cube.contains(x) || !cube.contains(y)) throw PreconditionError("gri3: x and y must lie in the cube");
  const ParticleSet Jc = full_set(cube.n()) & ~J;
  Gri3Audit a;
  a.S = S;
  const MultiSite xc = project(x, Jc), yc = project(y, Jc);
  a.delta1 = sup_dist(xc, yc);
  if (a.delta1 <= 2) throw PreconditionError("gri3: requires |x_Jc - y_Jc| > 2");

  const AssembledOperator full = assemble(cube, omega, interaction, mesh);
  a.lhs = green_block_norm(full, E, x, y).norm;
  const FactorPair fp = assemble_decomposed(cube, J, omega, interaction, mesh);
  const int n1 = fp.first.n(), d = cube.d(), n = cube.n();
  const double vol1 = fp.first.box.volume();
  double c = 1.0;
  {
    const double x0 = (4 * S) * (4 * S) + E - n * q_minus;
    if (x0 > 0)
      c = std::floor(std::pow(static_cast<double>(d), n1) * std::pow(x0, 0.5 * n1) /
                     (std::pow(4 * std::numbers::pi, 0.5 * n1) * std::tgamma(0.5 * n1))) +
          1.0;
  }
  a.M1 = c * vol1;
  const int count = static_cast<int>(std::min<double>(a.M1, fp.first.size()));
  EigenOptions eo;
  eo.want_vectors = false;
  const SpectralResult lam = count == fp.first.size() ? dense_eigs(fp.first, false) : lowest_eigs(fp.first, count, eo);
  for (int i = 0; i < count && i < lam.size(); ++i) {
    a.max_factor_norm = std::max(a.max_factor_norm, green_block_norm(fp.second, E - lam.eigenvalues[i], xc, yc).norm);
    ++a.shifts_used;
  }
  a.second_term = vol1 * std::exp(-a.delta1 * S);
  a.rhs = a.M1 * a.max_factor_norm + a.second_term;
  return a;
}

DecayFit fit_decay(std::span<const double> distance, std::span<const double> log_norm) {
  const std::size_t k = distance.size();
  if (k != log_norm.size() || k < 2) throw PreconditionError("fit_decay: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += distance[i];
    my += log_norm[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = distance[i] - mx, dy = log_norm[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0) throw PreconditionError("fit_decay: distances are all equal");
  DecayFit f;
  const double slope = sxy / sxx;
  f.mass = -slope;
  const double ss_res = std::max(0.0, syy - slope * sxy);
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  f.points = static_cast<int>(k);
  return f;
}

DecayFit vector_mass(const AssembledOperator& op, const VectorXd& v, std::span<const MultiSite> cells,
                     double floor_rel) {
  if (cells.empty()) throw PreconditionError("vector_mass: no cells");
  std::vector<double> norms;
  norms.reserve(cells.size());
  for (const MultiSite& x : cells) {
    const std::vector<int> dofs = cell_dofs(op.dofs, x);
    norms.push_back(restricted_norm(op, v, dofs));
  }
  const std::size_t ipk = std::max_element(norms.begin(), norms.end()) - norms.begin();
  const double floor = floor_rel * norms[ipk];
  std::vector<double> dist, logn;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i == ipk || !(norms[i] > floor)) continue;
    dist.push_back(sup_dist(cells[i], cells[ipk]));
    logn.push_back(std::log(norms[i]));
  }
  DecayFit f = fit_decay(dist, logn);
  f.peak = cells[ipk];
  return f;
}

std::vector<DecayFit> eigenfunction_mass(const AssembledOperator& op, const Interval& I,
                                         std::span<const MultiSite> cells, const EigenOptions& opt) {
  EigenOptions o = opt;
  o.want_vectors = true;
  const SpectralResult r = eigs_below(op, I.hi + 1e-12 * std::max(1.0, std::abs(I.hi)), o);
  std::vector<DecayFit> out;
  for (int j = 0; j < r.size(); ++j) {
    if (!I.contains(r.eigenvalues[j])) continue;
    DecayFit f = vector_mass(op, r.eigenvectors.col(j), cells);
    f.energy = r.eigenvalues[j];
    out.push_back(f);
  }
  if (out.empty()) throw PreconditionError("eigenfunction_mass: no eigenvalue in the interval");
  return out;
}

}  // namespace qgl

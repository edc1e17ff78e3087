#include "qgl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qgl/diagnostics.hpp"
#include "qgl/errors.hpp"

namespace qgl {

namespace {

struct Outcome {
  bool success = false;
  double value = 0.0;
};

template <class Trial>
McResult run_trials(const McOptions& opt, Trial&& trial) {
  if (opt.trials == 0) throw PreconditionError("trials must be >= 1");
  McResult r;
  r.records.resize(opt.trials);
  parallel_for(opt.trials, opt.threads, [&](std::size_t i) {
    const std::uint64_t s = mix_seed(opt.seed, i);
    const Outcome o = trial(s);
    r.records[i] = {i, s, o.success, o.value};
  });
  std::uint64_t hits = 0;
  for (const auto& rec : r.records) hits += rec.success ? 1 : 0;
  r.estimate = McEstimate::from_counts(hits, opt.trials, opt.seed);
  return r;
}

void set_reference(McResult& r, double reference) {
  r.reference = reference;
  r.ratio = reference > 0 ? r.estimate.p_hat / reference : std::numeric_limits<double>::infinity();
}

double max_projection_volume(const BoxSpec& box) {
  double v = 0;
  for (int i = 0; i < box.n(); ++i) v = std::max(v, std::pow(2.0 * box.sides[i], box.d()));
  return v;
}

AssembledOperator build(const BoxSpec& box, const ModelSpec& model, std::uint64_t seed) {
  const OmegaSample omega = sample_omega(model.law, box_edges(box), seed);
  return assemble(box, omega, model.interaction, model.mesh);
}

std::vector<double> spectrum_in(const AssembledOperator& op, const Interval& I) {
  std::vector<double> out;
  for (double e : eigs_below(op, I.hi * (1 + 1e-12) + 1e-12, {.want_vectors = false}).eigenvalues)
    if (I.contains(e)) out.push_back(e);
  return out;
}

std::vector<double> linear_grid(const Interval& I, int points) {
  std::vector<double> g(points);
  for (int j = 0; j < points; ++j) g[j] = I.lo + (I.hi - I.lo) * j / (points - 1);
  return g;
}

bool singular_somewhere(const AssembledOperator& op, std::span<const double> grid, double m, std::vector<char>* mask) {
  bool any = false;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (mask && !(*mask)[j]) continue;
    const bool s = !classify_NS(op, grid[j], m).ns.value_or(false);
    if (mask) (*mask)[j] = s;
    any = any || s;
  }
  return any;
}

}  // namespace

nlohmann::json McResult::to_json() const {
  nlohmann::json j = estimate.to_json();
  j["reference"] = reference;
  j["ratio"] = ratio;
  return j;
}

McResult mc_wegner_one(const BoxSpec& box, const ModelSpec& model, double E, double eps, const McOptions& opt) {
  if (!(eps > 0)) throw PreconditionError("wegner: eps must be > 0");
  box.validate();
  McResult r = run_trials(opt, [&](std::uint64_t s) {
    const AssembledOperator op = build(box, model, s);
    const int inside = count_below(op, E + eps) - count_below(op, E - eps);
    return Outcome{inside > 0, static_cast<double>(inside)};
  });
  set_reference(r, box.volume() * max_projection_volume(box) * concentration(model.law, 2 * eps));
  return r;
}

McResult mc_wegner_two(const BoxSpec& a, const BoxSpec& b, const ModelSpec& model, const Interval& I, double eps,
                       const McOptions& opt) {
  if (!(eps > 0)) throw PreconditionError("wegner: eps must be > 0");
  if (!separability(a, b, model.interaction.r0).pre_separable)
    throw PreconditionError("wegner_two: boxes are not pre-separable");
  McResult r = run_trials(opt, [&](std::uint64_t s) {
    const std::vector<double> ea = spectrum_in(build(a, model, s), I);
    const std::vector<double> eb = spectrum_in(build(b, model, s), I);
    double dist = std::numeric_limits<double>::infinity();
    for (double x : ea)
      for (double y : eb) dist = std::min(dist, std::abs(x - y));
    return Outcome{dist < eps, dist};
  });
  const double pi0 = std::max(max_projection_volume(a), max_projection_volume(b));
  set_reference(r, a.volume() * b.volume() * pi0 * concentration(model.law, 2 * eps));
  return r;
}

long long lifshitz_n(int l, int d) {
  if (l < 1 || d < 1) throw PreconditionError("lifshitz: l and d must be >= 1");
  long long v = d * 2LL * l;
  for (int i = 1; i < d; ++i) v *= 2LL * l - 1;
  return v;
}

LifshitzResult mc_lifshitz(const MultiSite& center, std::span<const int> ls, double b, const ModelSpec& model,
                           const McOptions& opt) {
  if (!(b >= 0)) throw PreconditionError("lifshitz: b must be >= 0");
  const int n = center.n;
  LifshitzResult out;
  for (int l : ls) {
    LifshitzCell c;
    c.l = l;
    c.n_l = lifshitz_n(l, center.d);
    c.threshold = n * model.law.q_minus + n * b / static_cast<double>(c.n_l * c.n_l);
    const BoxSpec box = BoxSpec::cube(center, l);
    c.result = run_trials(opt, [&](std::uint64_t s) {
      const int below = count_below(build(box, model, s), c.threshold);
      return Outcome{below > 0, static_cast<double>(below)};
    });
    set_reference(c.result, 1.0);
    out.cells.push_back(std::move(c));
  }
  std::vector<double> x, y;
  for (const auto& c : out.cells)
    if (c.result.estimate.successes > 0) {
      x.push_back(static_cast<double>(c.n_l));
      y.push_back(std::log(c.result.estimate.p_hat));
    }
  if (x.size() >= 2) {
    const DecayFit f = fit_decay(x, y);
    out.gamma_hat = f.mass;
    out.r2 = f.r2;
  }
  out.increasing = lifshitz_increasing(out.cells);
  return out;
}

bool lifshitz_increasing(std::span<const LifshitzCell> cells) {
  double last_point = -1;  // last nonzero point estimate
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& c : cells) {
    const McEstimate& e = c.result.estimate;
    if (e.successes > 0) {
      if (!(e.p_hat < prev)) return false;
      prev = last_point = e.p_hat;
    } else if (last_point >= 0 && !(e.rule_of_three < last_point)) {
      return false;
    }
  }
  return true;
}

IlsResult mc_ils(const BoxSpec& cube, const ModelSpec& model, double p, const IlsOptions& opt, const McOptions& mc) {
  if (!cube.is_cube()) throw PreconditionError("ils: box must be a cube");
  if (!(opt.beta > 0 && opt.beta < 1)) throw PreconditionError("ils: beta must lie in (0, 1)");
  const double L0 = cube.side();
  const int n = cube.n();
  const double q = model.law.q_minus;
  IlsResult out;
  out.eps0 = std::pow(L0, opt.beta - 1) / 2;
  out.mass = std::pow(L0, (opt.beta - 1) / 2) / 3;
  out.I = {n * q - 0.5, n * q + out.eps0};
  out.target = std::pow(L0, -2 * p);
  out.gap = run_trials(mc, [&](std::uint64_t s) {
    const int below = count_below(build(cube, model, s), n * q + 2 * out.eps0);
    return Outcome{below > 0, static_cast<double>(below)};
  });
  set_reference(out.gap, out.target);
  if (opt.ns_grid > 0) {
    const std::vector<double> grid = linear_grid(out.I, std::max(2, opt.ns_grid));
    out.ns_scan = run_trials(mc, [&](std::uint64_t s) {
      const bool sing = singular_somewhere(build(cube, model, s), grid, out.mass, nullptr);
      return Outcome{sing, sing ? 1.0 : 0.0};
    });
    set_reference(*out.ns_scan, out.target);
  }
  return out;
}

BoxSpec separable_partner(const BoxSpec& a, int r0) {
  if (!a.is_cube()) throw PreconditionError("separable_partner: box must be a cube");
  for (int t = 1; t <= 64 * (a.side() + r0) * a.n(); ++t) {
    BoxSpec b = a;
    b.center[0][0] += t;
    if (separability(a, b, r0).separable) return b;
  }
  throw InternalError("separable_partner: no separable shift found");
}

DsResult mc_ds(int n, int k, const ScaleSchedule& schedule, const ModelSpec& model, const McOptions& mc,
               const DsOptions& opt) {
  if (n < 1 || n > schedule.N) throw PreconditionError("ds: n must lie in [1, N]");
  if (k < 0 || k > schedule.K()) throw PreconditionError("ds: k outside the schedule");
  if (!model.law.is_holder()) throw PreconditionError("ds: the disorder law must be Hoelder continuous");
  if (schedule.L[k] > 4096) throw PreconditionError("ds: L_k too large for direct evaluation");
  const int L = static_cast<int>(schedule.L[k]);
  DsResult out;
  out.n = n;
  out.k = k;
  out.mass = static_cast<double>(schedule.m[k]);
  MultiSite c;
  c.n = n;
  c.d = schedule.d;
  for (int j = 0; j < n; ++j) c.p[j].dim = schedule.d;
  out.first = BoxSpec::cube(c, L);
  out.second = separable_partner(out.first, schedule.r0);

  const Interval& I = schedule.I[n - 1];
  const double spacing = std::exp(-std::pow(static_cast<double>(L), schedule.beta)) / 4;
  const double needed = std::ceil((I.hi - I.lo) / spacing) + 1;
  out.grid_exact = needed <= opt.grid_max;
  const std::vector<double> grid = linear_grid(I, static_cast<int>(std::max(2.0, std::min<double>(needed, opt.grid_max))));
  out.grid_points = static_cast<int>(grid.size());
  out.grid_spacing = (I.hi - I.lo) / (grid.size() - 1);

  const double expo = 2 * static_cast<double>(schedule.p[n - 1]) * std::pow(1 + static_cast<double>(schedule.theta), k);
  out.target = std::pow(static_cast<double>(L), -expo);

  out.result = run_trials(mc, [&](std::uint64_t s) {
    std::vector<char> mask(grid.size(), 1);
    if (!singular_somewhere(build(out.first, model, s), grid, out.mass, &mask)) return Outcome{false, 0.0};
    const bool both = singular_somewhere(build(out.second, model, s), grid, out.mass, &mask);
    return Outcome{both, static_cast<double>(std::count(mask.begin(), mask.end(), 1))};
  });
  set_reference(out.result, out.target);
  out.log10_margin = std::log10(out.target) - std::log10(std::max(out.result.estimate.upper_or_point(), 1e-300));
  return out;
}

}  // namespace qgl

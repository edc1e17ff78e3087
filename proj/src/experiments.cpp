#include "qgl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "qgl/diagnostics.hpp"
#include "qgl/errors.hpp"
#include "qgl/estimators.hpp"
#include "qgl/msa_schedule.hpp"
#include "qgl/output.hpp"

namespace qgl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

MultiSite origin(int n, int d) {
  MultiSite c;
  c.n = n;
  c.d = d;
  for (int j = 0; j < n; ++j) c.p[j].dim = d;
  return c;
}

struct Ctx {
  std::string name;
  const ExperimentConfig& cfg;
  json p;
  std::string hash;
  CheckOutcome out;

  Ctx(std::string n, const ExperimentConfig& c)
      : name(std::move(n)), cfg(c), p(c.check(name)), hash(param_hash(c.fingerprint(name))) {
    out.name = name;
  }

  fs::path file(const std::string& suffix) {
    fs::path f = cfg.out_dir / (name + "-" + hash + suffix);
    out.files.push_back(f);
    return f;
  }
  int n() const { return p.value("n", cfg.N); }
  int L() const { return p.value("L", cfg.L); }
  std::uint64_t trials() const { return p.value("trials", cfg.trials); }
  McOptions mc() const { return {trials(), cfg.seed, cfg.threads}; }
  ModelSpec model() const { return {cfg.law, cfg.interaction, cfg.mesh}; }
  BoxSpec cube() const { return BoxSpec::cube(origin(n(), cfg.d), L()); }
  AssembledOperator op(const BoxSpec& box, std::uint64_t seed) const {
    return assemble(box, sample_omega(cfg.law, box_edges(box), seed), cfg.interaction, cfg.mesh);
  }
  void finish() {
    out.summary["check"] = name;
    out.summary["hash"] = hash;
    out.summary["params"] = p;
    out.summary["assertable"] = out.assertable;
    if (out.assertable) out.summary["pass"] = out.passed;
    write_json(file(".json"), out.summary);
  }
};

double bottom(const AssembledOperator& op) {
  EigenOptions eo;
  eo.want_vectors = false;
  return lowest_eigs(op, 1, eo).eigenvalues.at(0);
}

void check_geometry(Ctx& c) {
  c.out.assertable = true;
  const std::string mode = c.p["check"];
  std::ostringstream text;
  if (mode == "counts") {
    CsvWriter csv(c.file(".csv"), "geometry_counts",
                  {"d", "n", "L", "count_edges", "enumerated_edges", "count_cubes", "enumerated_cubes", "match"});
    int cases = 0, ok = 0;
    for (int d = 1; d <= c.p["max_d"].get<int>(); ++d)
      for (int n = 1; n <= c.p["max_n"].get<int>(); ++n)
        for (int L = 1; L <= c.p["max_L"].get<int>(); ++L) {
          const BoxSpec box = BoxSpec::cube(origin(n, d), L);
          const std::uint64_t ce = count_edges(d, L);
          const std::uint64_t ee = enumerate_edges(box.factor(0)).size();
          const std::uint64_t cc = count_cubes(n, d, std::span<const int>(box.sides.data(), n));
          const std::uint64_t ec = enumerate_cube_count(box);
          const bool match = ce == ee && cc == ec;
          csv.row(d, n, L, ce, ee, cc, ec, match);
          ++cases;
          ok += match;
        }
    c.out.passed = ok == cases;
    c.out.summary = {{"cases", cases}, {"matching", ok}};
    text << (c.out.passed ? "pass" : "FAIL") << ": " << ok << "/" << cases << " boxes match enumeration\n";
  } else if (mode == "separability") {
    const int n = c.p["n"], d = c.p["d"], side = c.p["side"];
    const int r0 = c.cfg.interaction.r0;
    const SeparabilityAudit near = audit_separability(n, d, side, r0, c.p["radius"]);
    const SeparabilityAudit far = audit_far_separability(n, d, side, r0, c.p["far_width"]);
    CsvWriter csv(c.file(".csv"), "geometry_separability",
                  {"grid", "pairs", "pre_premise", "pre_ok", "sep_premise", "sep_ok", "far_premise", "far_ok",
                   "fi_separable", "fi_complete", "pass"});
    for (const auto& [g, a] : {std::pair{"near", near}, std::pair{"far", far}})
      csv.row(std::string(g), a.pairs, a.pre_premise, a.pre_ok, a.sep_premise, a.sep_ok, a.far_premise, a.far_ok,
              a.fi_separable, a.fi_complete, a.pass());
    c.out.passed = near.pass() && far.pass();
    c.out.summary = {{"near", near.to_json()}, {"far", far.to_json()}};
    text << (c.out.passed ? "pass" : "FAIL") << ": d" << d << "n" << n << "L" << side << " pairs " << near.pairs
         << " (|centres| <= " << c.p["radius"].get<int>() << "), " << far.pairs << " far pairs\n"
         << "  pre-separable premise " << near.pre_ok << "/" << near.pre_premise << ", separable premise "
         << near.sep_ok << "/" << near.sep_premise << ", far premise " << far.far_ok << "/" << far.far_premise
         << ", separable FI completely separated " << near.fi_complete + far.fi_complete << "/"
         << near.fi_separable + far.fi_separable << "\n";
  } else {
    throw ConfigError("diagnostics.geometry.check", "expected 'counts' or 'separability'");
  }
  c.out.text = text.str();
}

Quad resolve_p1(const json& v, int N, int d) {
  if (v.is_string()) return Quad(min_feasible_p1(N, d));
  return Quad(v.get<double>());
}

ScaleSchedule schedule_from(const json& p, const ExperimentConfig& cfg, bool strict) {
  ScheduleOptions so;
  so.q_minus = cfg.law.q_minus;
  so.r0 = cfg.interaction.r0;
  so.strict = strict;
  const long long L0 = p["L0"].get<long long>();
  const int K = p["K"];
  if (K < 0 || K > 64) throw ConfigError("K", "must be in [0, 64]");
  return build_schedule(cfg.N, cfg.d, resolve_p1(p["p1"], cfg.N, cfg.d), BigInt(L0), K, so);
}

void check_schedule(Ctx& c) {
  const bool strict = c.p["strict"];
  c.out.assertable = strict;
  ScaleSchedule s;
  try {
    s = schedule_from(c.p, c.cfg, strict);
  } catch (const FeasibilityError& e) {
    c.out.passed = false;
    c.out.summary = {{"feasible", false}, {"constraint", e.constraint()}, {"detail", e.what()}};
    c.out.text = std::string("infeasible: ") + e.what() + "\n";
    return;
  }
  CsvWriter csv(c.file(".csv"), "schedule", {"k", "L", "m", "r"});
  std::ostringstream text;
  text << "N=" << s.N << " d=" << s.d << " p1=" << static_cast<double>(s.p1)
       << " theta=" << static_cast<double>(s.theta) << "\n";
  text << "k,L_k,m_{L_k},r_{N,L_k}\n";
  for (int k = 0; k <= s.K(); ++k) {
    std::ostringstream m;
    m.precision(20);
    m << s.m[k];
    csv.row(k, s.L[k].str(), m.str(), s.r[k].str());
    text << k << "," << s.L[k].str() << "," << m.str() << "," << s.r[k].str() << "\n";
  }
  for (std::size_t n = 0; n < s.p.size(); ++n) text << "p_" << n + 1 << " = " << static_cast<double>(s.p[n]) << "\n";
  for (const auto& f : s.flags) text << "flag " << f.constraint << " at " << f.index << ": " << f.detail << "\n";
  text << "L0 > l* not verifiable (l* is not explicit)\n";
  c.out.summary = s.to_json();
  try {
    const LimitMass lm = limit_mass(s);
    std::ostringstream m;
    m.precision(20);
    m << lm.m;
    c.out.summary["limit_mass"] = {{"m", m.str()},         {"terms", lm.terms},
                                   {"largeness", lm.largeness}, {"half_bound", lm.half_bound},
                                   {"positive", lm.positive}};
  } catch (const Error& e) {
    c.out.summary["limit_mass"] = {{"error", e.what()}};
  }
  c.out.text = text.str();
}

void check_assemble(Ctx& c) {
  const BoxSpec box = c.cube();
  const OmegaSample omega = sample_omega(c.cfg.law, box_edges(box), mix_seed(c.cfg.seed, 0));
  const AssembledOperator op = assemble(box, omega, c.cfg.interaction, c.cfg.mesh);
  {
    std::ofstream os(c.file("-A.txt"));
    write_triplets(os, op.A);
  }
  {
    std::ofstream os(c.file("-B.txt"));
    write_triplets(os, op.B);
  }
  {
    std::ofstream os(c.file("-omega.csv"));
    write_omega_csv(os, omega, box.d());
  }
  c.out.summary = {{"box", to_string(box)},        {"dofs", op.size()},
                   {"cubes", op.dofs.cubes.size()}, {"nnz_A", op.A.nonZeros()},
                   {"nnz_B", op.B.nonZeros()},      {"potential_floor", op.meta.potential_floor}};
  c.out.text = "assembled " + to_string(box) + ": " + std::to_string(op.size()) + " dofs\n";
}

void check_spectrum(Ctx& c) {
  const BoxSpec box = c.cube();
  const AssembledOperator op = c.op(box, mix_seed(c.cfg.seed, 0));
  const int k = std::min(c.p["k"].get<int>(), op.size());
  EigenOptions eo;
  eo.want_vectors = false;
  const SpectralResult r = lowest_eigs(op, k, eo);
  CsvWriter csv(c.file(".csv"), "spectrum", {"j", "E", "residual"});
  std::ostringstream text;
  for (int j = 0; j < r.size(); ++j) {
    csv.row(j + 1, r.eigenvalues[j], r.residual_norms.empty() ? 0.0 : r.residual_norms[j]);
    text << "E_" << j + 1 << " = " << fmt(r.eigenvalues[j]) << "\n";
  }
  c.out.summary = {{"box", to_string(box)}, {"dofs", op.size()}, {"eigenvalues", r.eigenvalues}};
  c.out.text = text.str();
}

void check_green(Ctx& c) {
  const BoxSpec box = c.cube();
  const AssembledOperator op = c.op(box, mix_seed(c.cfg.seed, 0));
  const double s = bottom(op);
  const double eta = c.p["eta"];
  const Resolvent R(op, s - eta);
  const std::vector<MultiSite> targets = far_points(box, box.center);
  CsvWriter csv(c.file(".csv"), "green", {"target", "delta", "norm", "ct_bound"});
  double worst = 0;
  for (const GreenBlock& g : R.blocks_from(box.center, targets)) {
    const int delta = cell_distance(g.target, g.source);
    const double bound = combes_thomas_bound(delta, eta);
    worst = std::max(worst, g.norm / bound);
    csv.row(to_string(g.target), delta, g.norm, bound);
  }
  c.out.summary = {{"energy", s - eta}, {"s_omega", s}, {"targets", targets.size()}, {"max_ratio", worst}};
  c.out.text = "E = s - " + fmt(eta) + " = " + fmt(s - eta) + ", " + std::to_string(targets.size()) +
               " blocks, max norm/bound " + fmt(worst) + "\n";
}

void check_cheeger(Ctx& c) {
  c.out.assertable = true;
  CsvWriter csv(c.file(".csv"), "cheeger", {"d", "l", "E1", "E2", "threshold", "pass"});
  std::ostringstream text;
  int ok = 0, total = 0;
  for (int l : c.p["l"].get<std::vector<int>>()) {
    const CheegerCheck r = cheeger_gap_check(l, c.cfg.d, c.cfg.mesh.M);
    csv.row(r.d, r.l, r.E1, r.E2, r.threshold, r.pass);
    text << (r.pass ? "pass" : "FAIL") << " d=" << r.d << " l=" << r.l << " E2=" << fmt(r.E2)
         << " n_l^-2=" << fmt(r.threshold) << "\n";
    ++total;
    ok += r.pass;
  }
  c.out.passed = ok == total;
  c.out.summary = {{"cases", total}, {"passed", ok}};
  c.out.text = text.str();
}

void check_weyl(Ctx& c) {
  c.out.assertable = true;
  const BoxSpec box = c.cube();
  const double S = c.p["S"];
  const std::uint64_t T = c.trials();
  std::vector<WeylCheck> res(T);
  parallel_for(T, c.cfg.threads, [&](std::size_t i) {
    res[i] = weyl_check(c.op(box, mix_seed(c.cfg.seed, i)), S, c.cfg.law.q_minus);
  });
  CsvWriter csv(c.file(".csv"), "weyl", {"trial", "count", "constant", "volume", "bound", "pass"});
  std::uint64_t ok = 0;
  for (std::uint64_t i = 0; i < T; ++i) {
    csv.row(i, res[i].count, res[i].constant, res[i].volume, res[i].bound, res[i].pass);
    ok += res[i].pass;
  }
  c.out.passed = ok == T;
  c.out.summary = {{"S", S}, {"constant", res[0].constant}, {"trials", T}, {"passed", ok}};
  c.out.text = "weyl pass-rate " + std::to_string(ok) + "/" + std::to_string(T) + " (C = " + fmt(res[0].constant) +
               ")\n";
}

void check_ct(Ctx& c) {
  c.out.assertable = true;
  const BoxSpec box = c.cube();
  const std::vector<double> etas = c.p["eta"];
  const std::uint64_t T = c.trials();
  const std::vector<MultiSite> sources = probe_sources(box);
  const std::vector<MultiSite> targets = lattice_points(box);
  struct Row {
    double s = 0;
    std::vector<int> pairs, passed;
    std::vector<double> worst;
  };
  std::vector<Row> rows(T);
  parallel_for(T, c.cfg.threads, [&](std::size_t i) {
    const AssembledOperator op = c.op(box, mix_seed(c.cfg.seed, i));
    Row& r = rows[i];
    r.s = bottom(op);
    for (double eta : etas) {
      const CtReport rep = verify_combes_thomas(op, r.s - eta, r.s, sources, targets);
      double w = 0;
      for (const CtPair& p : rep.pairs) w = std::max(w, p.measured / p.bound);
      r.pairs.push_back(static_cast<int>(rep.pairs.size()));
      r.passed.push_back(rep.passed);
      r.worst.push_back(w);
    }
  });
  CsvWriter csv(c.file(".csv"), "ct", {"trial", "s_omega", "eta", "pairs", "passed", "max_ratio"});
  std::uint64_t trials_ok = 0, pairs = 0, passed = 0;
  double worst = 0;
  for (std::uint64_t i = 0; i < T; ++i) {
    bool all = true;
    for (std::size_t e = 0; e < etas.size(); ++e) {
      csv.row(i, rows[i].s, etas[e], rows[i].pairs[e], rows[i].passed[e], rows[i].worst[e]);
      all = all && rows[i].pairs[e] == rows[i].passed[e];
      pairs += rows[i].pairs[e];
      passed += rows[i].passed[e];
      worst = std::max(worst, rows[i].worst[e]);
    }
    trials_ok += all;
  }
  c.out.passed = trials_ok == T;
  c.out.summary = {{"trials", T}, {"trials_passed", trials_ok}, {"pairs", pairs}, {"pairs_passed", passed},
                   {"max_ratio", worst}};
  c.out.text = "pass-rate " + std::to_string(trials_ok) + "/" + std::to_string(T) + " (" + std::to_string(passed) +
               "/" + std::to_string(pairs) + " pairs, max measured/bound " + fmt(worst) + ")\n";
}

void check_dg(Ctx& c) {
  c.out.assertable = true;
  const BoxSpec box = c.cube();
  const std::vector<double> ts = c.p["t"];
  const int max_delta = c.p["max_delta"];
  const std::uint64_t T = c.trials();
  struct Row {
    double s = 0;
    std::vector<int> entries, pass, fail, inconclusive;
    std::vector<double> worst;
  };
  std::vector<Row> rows(T);
  parallel_for(T, c.cfg.threads, [&](std::size_t i) {
    const AssembledOperator op = c.op(box, mix_seed(c.cfg.seed, i));
    Row& r = rows[i];
    r.s = bottom(op);
    const std::size_t nt = ts.size();
    r.entries.assign(nt, 0);
    r.pass.assign(nt, 0);
    r.fail.assign(nt, 0);
    r.inconclusive.assign(nt, 0);
    r.worst.assign(nt, 0.0);
    const HeatPropagator heat(op);
    for (const MultiSite& y : probe_sources(box)) {
      const CellularSet A{{y}};
      const Eigen::VectorXd f = cell_indicator(op.dofs, A);
      std::vector<DgTarget> tg;
      for (const MultiSite& x : far_points(box, y, 1, max_delta)) {
        CellularSet B{{x}};
        tg.push_back({cell_indicator(op.dofs, B), B});
      }
      if (tg.empty()) continue;
      for (const DgEntry& e : verify_davies_gaffney(heat, op, r.s, f, A, tg, ts)) {
        const std::size_t k = std::find(ts.begin(), ts.end(), e.t) - ts.begin();
        ++r.entries[k];
        if (e.status == CheckStatus::pass) ++r.pass[k];
        if (e.status == CheckStatus::fail) ++r.fail[k];
        if (e.status == CheckStatus::inconclusive) ++r.inconclusive[k];
        r.worst[k] = std::max(r.worst[k], (std::abs(e.value) + e.error) / e.rhs);
      }
    }
  });
  CsvWriter csv(c.file(".csv"), "dg", {"trial", "s_omega", "t", "entries", "pass", "fail", "inconclusive", "max_ratio"});
  std::uint64_t trials_ok = 0, entries = 0, pass = 0, fail = 0, inc = 0;
  double worst = 0;
  for (std::uint64_t i = 0; i < T; ++i) {
    bool all = true;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const Row& r = rows[i];
      csv.row(i, r.s, ts[k], r.entries[k], r.pass[k], r.fail[k], r.inconclusive[k], r.worst[k]);
      all = all && r.pass[k] == r.entries[k];
      entries += r.entries[k];
      pass += r.pass[k];
      fail += r.fail[k];
      inc += r.inconclusive[k];
      worst = std::max(worst, r.worst[k]);
    }
    trials_ok += all;
  }
  c.out.passed = trials_ok == T;
  c.out.summary = {{"trials", T},   {"trials_passed", trials_ok}, {"entries", entries},  {"pass", pass},
                   {"fail", fail}, {"inconclusive", inc},        {"max_ratio", worst}};
  c.out.text = "pass-rate " + std::to_string(trials_ok) + "/" + std::to_string(T) + " (" + std::to_string(pass) + "/" +
               std::to_string(entries) + " entries, " + std::to_string(fail) + " fail, " + std::to_string(inc) +
               " inconclusive, max ratio " + fmt(worst) + ")\n";
}

void write_trials(CsvWriter& csv, const std::string& label, const McResult& r) {
  for (const TrialRecord& t : r.records) csv.row(label, t.trial, t.seed, t.success, t.value);
}

void estimate_row(CsvWriter& csv, const std::string& label, const McResult& r) {
  const McEstimate& e = r.estimate;
  csv.row(label, e.trials, e.successes, e.p_hat, e.wilson_lo, e.wilson_hi, e.rule_of_three, r.reference, r.ratio);
}

const std::vector<std::string> kEstimateCols = {"cell",      "trials",        "successes", "p_hat", "wilson_lo",
                                                "wilson_hi", "rule_of_three", "reference", "ratio"};
const std::vector<std::string> kTrialCols = {"cell", "trial", "seed", "success", "value"};

void check_wegner1(Ctx& c) {
  const BoxSpec box = c.cube();
  const double E = c.p["E"];
  CsvWriter csv(c.file(".csv"), "wegner1", kEstimateCols);
  CsvWriter trials(c.file("-trials.csv"), "wegner1_trials", kTrialCols);
  std::vector<double> le, lp;
  json cells = json::array();
  std::ostringstream text;
  for (double eps : c.p["eps"].get<std::vector<double>>()) {
    const McResult r = mc_wegner_one(box, c.model(), E, eps, c.mc());
    estimate_row(csv, fmt(eps), r);
    write_trials(trials, fmt(eps), r);
    cells.push_back({{"eps", eps}, {"estimate", r.to_json()}});
    if (r.estimate.successes > 0) {
      le.push_back(std::log(eps));
      lp.push_back(std::log(r.estimate.p_hat));
    }
    text << "eps=" << fmt(eps) << " p_hat=" << fmt(r.estimate.p_hat) << " ratio=" << fmt(r.ratio) << "\n";
  }
  c.out.summary = {{"E", E}, {"cells", cells}};
  if (le.size() >= 2) {
    const double slope = -fit_decay(le, lp).mass;
    c.out.summary["loglog_slope"] = slope;
    text << "log-log slope " << fmt(slope) << "\n";
  }
  c.out.text = text.str();
}

void check_wegner2(Ctx& c) {
  const BoxSpec a = c.cube();
  const BoxSpec b = separable_partner(a, c.cfg.interaction.r0);
  const std::vector<double> I = c.p["I"];
  if (I.size() != 2) throw ConfigError("diagnostics.wegner2.I", "expected [lo, hi]");
  const double eps = c.p["eps"];
  const McResult r = mc_wegner_two(a, b, c.model(), {I[0], I[1]}, eps, c.mc());
  CsvWriter csv(c.file(".csv"), "wegner2", kEstimateCols);
  estimate_row(csv, fmt(eps), r);
  CsvWriter trials(c.file("-trials.csv"), "wegner2_trials", kTrialCols);
  write_trials(trials, fmt(eps), r);
  c.out.summary = {{"first", to_string(a)}, {"second", to_string(b)}, {"estimate", r.to_json()}};
  c.out.text = "p_hat=" + fmt(r.estimate.p_hat) + " ratio=" + fmt(r.ratio) + "\n";
}

void check_lifshitz(Ctx& c) {
  const std::vector<int> ls = c.p["l"];
  const LifshitzResult r = mc_lifshitz(origin(c.n(), c.cfg.d), ls, c.p["b"], c.model(), c.mc());
  CsvWriter csv(c.file(".csv"), "lifshitz", {"l", "n_l", "threshold", "trials", "successes", "p_hat", "wilson_lo",
                                             "wilson_hi", "rule_of_three", "neg_log_p"});
  CsvWriter trials(c.file("-trials.csv"), "lifshitz_trials", kTrialCols);
  std::ostringstream text;
  json cells = json::array();
  for (const LifshitzCell& cell : r.cells) {
    const McEstimate& e = cell.result.estimate;
    const double nlp = -std::log(e.upper_or_point());
    csv.row(cell.l, cell.n_l, cell.threshold, e.trials, e.successes, e.p_hat, e.wilson_lo, e.wilson_hi,
            e.rule_of_three, nlp);
    write_trials(trials, std::to_string(cell.l), cell.result);
    cells.push_back({{"l", cell.l}, {"n_l", cell.n_l}, {"threshold", cell.threshold}, {"estimate", e.to_json()}});
    text << "l=" << cell.l << " n_l=" << cell.n_l << " p=" << (e.successes ? fmt(e.p_hat) : "<" + fmt(e.rule_of_three))
         << "\n";
  }
  c.out.summary = {{"cells", cells}, {"increasing", r.increasing}};
  if (r.gamma_hat) {
    c.out.summary["gamma_hat"] = *r.gamma_hat;
    c.out.summary["r2"] = r.r2;
    text << "gamma_hat " << fmt(*r.gamma_hat) << "\n";
  }
  text << "-log p increasing: " << (r.increasing ? "yes" : "no") << "\n";
  c.out.text = text.str();
}

void check_ils(Ctx& c) {
  const BoxSpec cube = BoxSpec::cube(origin(c.n(), c.cfg.d), c.p["L0"]);
  IlsOptions o;
  o.beta = c.p["beta"];
  o.ns_grid = c.p["ns_grid"];
  const IlsResult r = mc_ils(cube, c.model(), c.p["p"], o, c.mc());
  CsvWriter csv(c.file(".csv"), "ils", kEstimateCols);
  estimate_row(csv, "gap", r.gap);
  if (r.ns_scan) estimate_row(csv, "ns_scan", *r.ns_scan);
  CsvWriter trials(c.file("-trials.csv"), "ils_trials", kTrialCols);
  write_trials(trials, "gap", r.gap);
  if (r.ns_scan) write_trials(trials, "ns_scan", *r.ns_scan);
  c.out.summary = {{"mass", r.mass},   {"eps0", r.eps0},          {"I", {r.I.lo, r.I.hi}},
                   {"target", r.target}, {"gap", r.gap.to_json()}};
  if (r.ns_scan) c.out.summary["ns_scan"] = r.ns_scan->to_json();
  c.out.summary["ns_scan_grid_approximate"] = r.ns_scan.has_value();
  c.out.text = "gap event p_hat=" + fmt(r.gap.estimate.p_hat) + " (target L0^{-2p} = " + fmt(r.target) +
               ", reported only)\n";
}

void check_ds(Ctx& c) {
  const ScaleSchedule s = schedule_from(c.p, c.cfg, false);
  DsOptions o;
  o.grid_max = c.p["grid_max"];
  const DsResult r = mc_ds(c.p["n"], c.p["k"], s, c.model(), c.mc(), o);
  CsvWriter csv(c.file(".csv"), "ds", kEstimateCols);
  estimate_row(csv, "k" + std::to_string(r.k), r.result);
  CsvWriter trials(c.file("-trials.csv"), "ds_trials", kTrialCols);
  write_trials(trials, "k" + std::to_string(r.k), r.result);
  c.out.summary = {{"first", to_string(r.first)},    {"second", to_string(r.second)},
                   {"grid_points", r.grid_points},   {"grid_spacing", r.grid_spacing},
                   {"grid_approximate", true},       {"grid_exact", r.grid_exact},
                   {"mass", r.mass},                 {"target", r.target},
                   {"log10_margin", r.log10_margin}, {"estimate", r.result.to_json()},
                   {"schedule_flags", s.to_json()["flags"]}};
  c.out.text = "DS pair p_hat=" + fmt(r.result.estimate.p_hat) + " target " + fmt(r.target) +
               " (reported only), grid " + std::to_string(r.grid_points) + " points\n";
}

void check_gri(Ctx& c) {
  const int l = c.p["l"], L = c.p["L"];
  const double eta = c.p["eta"];
  const MultiSite u = origin(c.n(), c.cfg.d);
  const BoxSpec big = BoxSpec::cube(u, L), small = BoxSpec::cube(u, l);
  const OmegaSample omega = sample_omega(c.cfg.law, box_edges(big), mix_seed(c.cfg.seed, 0));
  const AssembledOperator ob = assemble(big, omega, c.cfg.interaction, c.cfg.mesh);
  const AssembledOperator os = assemble(small, omega, c.cfg.interaction, c.cfg.mesh);
  const double E = std::min(bottom(ob), bottom(os)) - eta;
  MultiSite y = u;
  y.p[0][0] += L - 1;
  const Gri2Audit a = verify_gri2(ob, os, E, u, y);
  CsvWriter csv(c.file(".csv"), "gri", {"inequality", "lhs", "rhs_factor", "empirical_C"});
  csv.row(std::string("GRI.2"), a.lhs, a.rhs_factor, a.empirical_C);
  c.out.summary = {{"energy", E},          {"lhs", a.lhs},           {"rhs_factor", a.rhs_factor},
                   {"empirical_C", a.empirical_C}, {"out_count", a.out_count}};
  c.out.text = "GRI.2 lhs=" + fmt(a.lhs) + " rhs factor=" + fmt(a.rhs_factor) + " empirical C=" + fmt(a.empirical_C) +
               " (reported only)\n";
}

void check_mass_fit(Ctx& c) {
  const BoxSpec box = BoxSpec::cube(origin(1, c.cfg.d), c.p["L"]);
  const AssembledOperator op = c.op(box, mix_seed(c.cfg.seed, 0));
  const int count = c.p["count"];
  const double floor_rel = c.p["floor_rel"];
  const SpectralResult r = lowest_eigs(op, count);
  const std::vector<MultiSite> cells = lattice_points(box);
  CsvWriter csv(c.file(".csv"), "mass_fit", {"j", "E", "mass", "r2", "points", "peak"});
  std::ostringstream text;
  json fits = json::array();
  for (int j = 0; j < r.size(); ++j) {
    const DecayFit f = vector_mass(op, r.eigenvectors.col(j), cells, floor_rel);
    csv.row(j + 1, r.eigenvalues[j], f.mass, f.r2, f.points, to_string(f.peak));
    fits.push_back({{"E", r.eigenvalues[j]}, {"mass", f.mass}, {"r2", f.r2}, {"points", f.points}});
    text << "E_" << j + 1 << "=" << fmt(r.eigenvalues[j]) << " mass=" << fmt(f.mass) << " R2=" << fmt(f.r2) << "\n";
  }
  c.out.summary = {{"box", to_string(box)}, {"fits", fits}};
  c.out.text = text.str();
}

void check_dyn_moment(Ctx& c) {
  const std::vector<double> I = c.p["I"];
  if (I.size() != 2) throw ConfigError("diagnostics.dyn_moment.I", "expected [lo, hi]");
  const double s = c.p["s"];
  CsvWriter csv(c.file(".csv"), "dyn_moment", {"L", "moment"});
  std::ostringstream text;
  json rows = json::array();
  const MultiSite o = origin(1, c.cfg.d);
  const std::vector<MultiSite> K{o};
  for (int L : c.p["L"].get<std::vector<int>>()) {
    const AssembledOperator op = c.op(BoxSpec::cube(o, L), mix_seed(c.cfg.seed, 0));
    const double m = dyn_moment(op, {I[0], I[1]}, K, s, [](double) { return 1.0; });
    csv.row(L, m);
    rows.push_back({{"L", L}, {"moment", m}});
    text << "L=" << L << " moment=" << fmt(m) << "\n";
  }
  c.out.summary = {{"rows", rows}};
  c.out.text = text.str();
}

const std::map<std::string, std::function<void(Ctx&)>>& registry() {
  static const std::map<std::string, std::function<void(Ctx&)>> r = {
      {"geometry", check_geometry}, {"schedule", check_schedule},     {"assemble", check_assemble},
      {"spectrum", check_spectrum}, {"green", check_green},           {"cheeger", check_cheeger},
      {"weyl", check_weyl},         {"ct", check_ct},                 {"dg", check_dg},
      {"wegner1", check_wegner1},   {"wegner2", check_wegner2},       {"lifshitz", check_lifshitz},
      {"ils", check_ils},           {"ds", check_ds},                 {"gri", check_gri},
      {"mass_fit", check_mass_fit}, {"dyn_moment", check_dyn_moment},
  };
  return r;
}

}  // namespace

CheckOutcome run_check(const std::string& name, const ExperimentConfig& cfg) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("diagnostics.checks", "unknown check '" + name + "'");
  fs::create_directories(cfg.out_dir);
  Ctx c(name, cfg);
  it->second(c);
  c.finish();
  return c.out;
}

bool RunResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return !c.assertable || c.passed; });
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult r;
  fs::create_directories(cfg.out_dir);
  json files = json::array();
  json results = json::array();
  for (const std::string& name : cfg.checks) {
    CheckOutcome o = run_check(name, cfg);
    for (const auto& f : o.files) files.push_back(f.filename().string());
    results.push_back({{"check", name}, {"assertable", o.assertable}, {"pass", o.passed}});
    r.checks.push_back(std::move(o));
  }
  json config = cfg.resolved;
  const json manifest = {{"version", kVersion},
                         {"csv_schema_version", kCsvSchemaVersion},
                         {"config", config},
                         {"files", files},
                         {"results", results}};
  config["diagnostics"].erase("threads");
  r.manifest = cfg.out_dir / ("manifest-" + param_hash(config) + ".json");
  write_json(r.manifest, manifest);
  return r;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  return kExitSolver;
}

int run_config_file(const fs::path& path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = resolve_config(load_config_file(path));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const RunResult r = run_experiment(cfg);
    for (const CheckOutcome& o : r.checks) {
      out << "[" << o.name << "] " << (o.assertable ? (o.passed ? "PASS" : "FAIL") : "REPORT") << "\n" << o.text;
    }
    out << "manifest " << r.manifest.string() << "\n";
    return r.all_passed() ? kExitOk : kExitAssertion;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace qgl

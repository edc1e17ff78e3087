#include "qgl/msa_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qgl/errors.hpp"

namespace qgl {

namespace mp = boost::multiprecision;

BigInt floor_pow_three_halves(const BigInt& L) {
  if (L < 0) throw PreconditionError("scale must be nonnegative");
  return mp::sqrt(BigInt(L * L * L));
}

long long cluster_bound(int n) {
  long long k = 1;
  for (int i = 0; i < n; ++i) k *= n;
  return k;
}

namespace {

std::string quad_str(const Quad& q, int digits = 20) {
  std::ostringstream os;
  os.precision(digits);
  os << q;
  return os.str();
}

Quad to_quad(const BigInt& x) { return Quad(x); }

Quad inv_sqrt(const Quad& x) { return 1 / mp::sqrt(x); }
Quad inv_pow_three_quarters(const Quad& x) {
  const Quad q = mp::sqrt(mp::sqrt(x));
  return 1 / (q * q * q);
}

}  // namespace

std::vector<Quad> exponent_sequence(int N, int d, const Quad& p1) {
  if (N < 1 || d < 1) throw PreconditionError("N and d must be >= 1");
  if (!(p1 > 0)) throw PreconditionError("p1 must be > 0");
  const Quad alpha = Quad(3) / 2;
  const Quad theta = 1 / (2 * p1);
  std::vector<Quad> p{p1};
  for (int n = 2; n <= N; ++n) {
    const Quad prev = p.back();
    p.push_back(prev / (alpha * alpha * (1 + theta)) - Quad((2 * n - 1) * d) / (2 * alpha) - n * d - 1);
  }
  return p;
}

ScaleSchedule build_schedule(int N, int d, const Quad& p1, const BigInt& L0, int K, const ScheduleOptions& opt) {
  if (L0 < 2) throw PreconditionError("L0 must be >= 2");
  if (K < 0) throw PreconditionError("K must be >= 0");
  ScaleSchedule s;
  s.N = N;
  s.d = d;
  s.p1 = p1;
  s.p = exponent_sequence(N, d, p1);
  s.theta = 1 / (2 * p1);
  s.r0 = opt.r0;
  s.q_minus = opt.q_minus;

  s.L.push_back(L0);
  for (int k = 0; k < K; ++k) s.L.push_back(next_scale(s.L.back()));
  for (const BigInt& L : s.L) s.r.push_back(4 * BigInt(N - 1) * (2 * L + opt.r0) + 2 * L);

  const Quad NK = Quad(N) * cluster_bound(N);
  const Quad L0q = to_quad(L0);
  s.m.push_back(1 / (3 * mp::sqrt(mp::sqrt(L0q))));
  for (int k = 0; k < K; ++k) {
    const Quad Lk = to_quad(s.L[k]);
    const Quad mk = s.m.back();
    s.m.push_back(mk - (96 * NK * inv_sqrt(Lk) * mk + 3 * inv_pow_three_quarters(Lk)));
  }

  s.eps0 = inv_sqrt(L0q) / 2;
  s.E_plus = -INFINITY;
  for (int n = 1; n <= N; ++n) {
    s.E_plus = std::max(s.E_plus, n * opt.q_minus + 1);
    s.I.push_back({n * opt.q_minus - 0.5, n * opt.q_minus + static_cast<double>(s.eps0)});
  }

  const int target = 3 * N * d + 1;
  s.p_feasible = s.p.back() >= target;
  if (!s.p_feasible)
    s.flags.push_back({"p_N", N, "p_" + std::to_string(N) + " = " + quad_str(s.p.back(), 12) + " < 3Nd+1 = " +
                                     std::to_string(target)});
  s.mass_feasible = true;
  for (int k = 0; k <= K; ++k) {
    const Quad floor = 48 * NK * inv_sqrt(to_quad(s.L[k]));
    if (!(s.m[k] > floor)) {
      s.mass_feasible = false;
      s.flags.push_back({"mass_lower_bound", k, "m_{L_" + std::to_string(k) + "} = " + quad_str(s.m[k], 12) +
                                                    " <= 48NK(N)/L_k^{1/2} = " + quad_str(floor, 12)});
      break;
    }
  }
  for (int k = 0; k <= K; ++k) {
    if (!(s.m[k] > 0)) {
      s.flags.push_back({"mass_positive", k, "m_{L_" + std::to_string(k) + "} = " + quad_str(s.m[k], 12)});
      break;
    }
  }
  for (int k = 0; k < K; ++k) {
    if (!(s.m[k + 1] < s.m[k])) {
      s.flags.push_back({"mass_decreasing", k + 1, "m is not strictly decreasing at k = " + std::to_string(k + 1)});
      break;
    }
  }
  if (opt.strict && !s.flags.empty()) {
    const ScheduleFlag& f = s.flags.front();
    throw FeasibilityError(f.constraint, "infeasible schedule (" + f.constraint + "): " + f.detail);
  }
  return s;
}

long long min_feasible_p1(int N, int d) {
  if (N < 1 || d < 1) throw PreconditionError("N and d must be >= 1");
  const int target = 3 * N * d + 1;
  if (N == 1) return target;
  auto ok = [&](long long p1) { return exponent_sequence(N, d, Quad(p1)).back() >= target; };
  long long hi = 1;
  while (!ok(hi)) {
    if (hi > (1LL << 60)) throw InternalError("min_feasible_p1: no feasible p1");
    hi *= 2;
  }
  long long lo = hi / 2;  // fails (or is 0)
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  if (hi > 1 && ok(hi - 1)) throw InternalError("min_feasible_p1: recursion not monotone in p1");
  return hi;
}

LimitMass limit_mass(const ScaleSchedule& s) {
  if (s.L.empty() || s.m.empty()) throw PreconditionError("limit_mass: empty schedule");
  if (!s.feasible()) throw PreconditionError("limit_mass: schedule is infeasible (" + s.flags.front().constraint + ")");
  LimitMass out;
  out.m0 = s.m.front();
  const Quad NK = Quad(s.N) * cluster_bound(s.N);
  const Quad stop = mp::abs(out.m0) * Quad(1e-32);

  BigInt L = s.L.front();
  Quad m = out.m0;
  out.largeness = true;
  constexpr int kMaxScales = 40;
  for (int k = 0; k < kMaxScales; ++k) {
    const Quad Lq = to_quad(L);
    if (!(m > 48 * NK * inv_sqrt(Lq))) out.largeness = false;
    // tail of the decrements from scale k on, using L_{j+1} >= L_j^{3/2}
    const Quad c = 96 * NK * mp::abs(m) + 3;
    const Quad q = inv_sqrt(mp::sqrt(Lq));
    const Quad tail = L >= 2 && q < 1 ? c * inv_sqrt(Lq) / (1 - q) : Quad(INFINITY);
    if (tail < stop) {
      out.tail_bound = tail;
      break;
    }
    m = m - (96 * NK * inv_sqrt(Lq) * m + 3 * inv_pow_three_quarters(Lq));
    L = next_scale(L);
    out.terms = k + 1;
    out.tail_bound = tail;
  }
  out.m = m;
  out.positive = m > 0;
  out.half_bound = m >= out.m0 / 2;
  if (out.largeness && !out.half_bound)
    throw InternalError("limit_mass: m < m_{L0}/2 although the mass lower bound holds at every scale");
  return out;
}

std::vector<double> dominating_partial_sums(double L0, int terms) {
  if (!(L0 > 1)) throw PreconditionError("L0 must be > 1");
  std::vector<double> sums;
  double acc = 0.0;
  double e = 0.5;
  for (int j = 0; j < terms; ++j) {
    acc += std::pow(L0, -e);
    sums.push_back(acc);
    e *= 1.5;
  }
  return sums;
}

double ils_log_margin(const IlsParams& p, double L) {
  if (p.n < 1 || p.d < 1 || !(p.b > 0) || !(p.gamma >= 0) || !(p.xi >= 0) || !(p.beta > 0 && p.beta < 1) ||
      !(L > 0))
    throw PreconditionError("ils_constraint_check: parameters must be positive");
  const double n = p.n, d = p.d;
  const double logL = std::log(L);
  const double lhs = n * d * std::log(6.0) - 0.5 * n * std::log(p.b) + n * std::log(d) +
                     (n * d + n * (p.beta - 1) / 2) * logL -
                     p.gamma * std::pow(2.0, -d) * std::sqrt(p.b * std::pow(L, 1 - p.beta));
  const double rhs = -p.xi * std::log(2 * L);
  return lhs - rhs;
}

bool ils_constraint_check(double L, const IlsParams& p) { return ils_log_margin(p, L) <= 0; }

std::optional<double> ils_threshold(const IlsParams& p) {
  ils_log_margin(p, 1.0);
  if (p.gamma == 0) return std::nullopt;
  // The margin is concave in log L: increasing up to L_peak, decreasing after.
  const double n = p.n, d = p.d;
  const double slope = n * d + n * (p.beta - 1) / 2 + p.xi;
  const double k = p.gamma * std::pow(2.0, -d) * std::sqrt(p.b) * (1 - p.beta) / 2;
  double peak = 1.0;
  if (slope > 0) peak = std::max(1.0, std::pow(slope / k, 2 / (1 - p.beta)));
  if (!std::isfinite(peak)) return std::nullopt;
  if (ils_log_margin(p, peak) <= 0) return 1.0;
  double lo = peak, hi = peak;
  while (ils_log_margin(p, hi) > 0) {
    lo = hi;
    hi *= 2;
    if (!std::isfinite(hi) || hi > 1e300) return std::nullopt;
  }
  // smallest integer L > lo with margin <= 0
  double a = std::floor(lo), b = std::ceil(hi);
  while (b - a > 1) {
    const double mid = std::floor(a + (b - a) / 2);
    if (ils_log_margin(p, mid) <= 0)
      b = mid;
    else
      a = mid;
    if (b - a <= 1 || b / a - 1 < 1e-15) break;
  }
  return b;
}

nlohmann::json ScaleSchedule::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["J"] = J;
  j["N"] = N;
  j["d"] = d;
  j["p1"] = static_cast<double>(p1);
  j["theta"] = static_cast<double>(theta);
  j["r0"] = r0;
  j["q_minus"] = q_minus;
  j["E_plus"] = E_plus;
  j["eps0"] = static_cast<double>(eps0);
  nlohmann::json rows = nlohmann::json::array();
  for (int k = 0; k <= K(); ++k)
    rows.push_back({{"k", k}, {"L", L[k].str()}, {"m", quad_str(m[k])}, {"r", r[k].str()}});
  j["scales"] = rows;
  nlohmann::json ps = nlohmann::json::array();
  for (std::size_t n = 0; n < p.size(); ++n) ps.push_back({{"n", n + 1}, {"p", quad_str(p[n])}});
  j["exponents"] = ps;
  nlohmann::json in = nlohmann::json::array();
  for (std::size_t n = 0; n < I.size(); ++n) in.push_back({{"n", n + 1}, {"lo", I[n].lo}, {"hi", I[n].hi}});
  j["intervals"] = in;
  j["p_feasible"] = p_feasible;
  j["mass_feasible"] = mass_feasible;
  j["l_star_verified"] = false;
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& f : flags) fl.push_back({{"constraint", f.constraint}, {"index", f.index}, {"detail", f.detail}});
  j["flags"] = fl;
  return j;
}

}  // namespace qgl

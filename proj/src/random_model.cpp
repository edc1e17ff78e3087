#include "qgl/random_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qgl/errors.hpp"

namespace qgl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t i) {
  return splitmix64(splitmix64(base) ^ (i * 0xd1b54a32d192ed03ull));
}

double unit_double(std::uint64_t word) { return static_cast<double>(word >> 11) * 0x1.0p-53; }

std::uint64_t edge_hash(std::uint64_t seed, const EdgeId& e, std::uint64_t stream) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ull);
  for (int a = 0; a < e.base.dim; ++a)
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(e.base[a])));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(e.dir) << 32 | static_cast<std::uint64_t>(e.base.dim)));
  return splitmix64(h + stream);
}

PotentialLaw PotentialLaw::uniform(double q_minus, double q_plus) {
  PotentialLaw law{LawKind::uniform, q_minus, q_plus, 1.0, 1.0 / (q_plus - q_minus)};
  law.validate();
  return law;
}

PotentialLaw PotentialLaw::beta_smoothed(double q_minus, double q_plus) {
  // Density 6x(1-x) peaks at 3/2 on the unit interval.
  PotentialLaw law{LawKind::beta_smoothed, q_minus, q_plus, 1.0, 1.5 / (q_plus - q_minus)};
  law.validate();
  return law;
}

PotentialLaw PotentialLaw::point_mass(double q) {
  return PotentialLaw{LawKind::point_mass, q, q, 0.0, 1.0};
}

void PotentialLaw::validate() const {
  if (!std::isfinite(q_minus) || !std::isfinite(q_plus)) throw PreconditionError("law: support must be finite");
  if (kind == LawKind::point_mass) return;
  if (!(q_minus < q_plus)) throw PreconditionError("law: need q_minus < q_plus");
  if (!(holder_exponent > 0.0 && holder_exponent <= 1.0)) throw PreconditionError("law: Hoelder exponent in (0,1]");
}

double PotentialLaw::sample(std::uint64_t seed, const EdgeId& e) const {
  switch (kind) {
    case LawKind::uniform:
      return q_minus + width() * unit_double(edge_hash(seed, e));
    case LawKind::beta_smoothed: {
      // The median of three independent uniforms is Beta(2,2).
      double u[3];
      for (int s = 0; s < 3; ++s) u[s] = unit_double(edge_hash(seed, e, static_cast<std::uint64_t>(s)));
      std::sort(u, u + 3);
      return q_minus + width() * u[1];
    }
    case LawKind::point_mass:
      return q_minus;
  }
  return q_minus;
}

std::string to_string(LawKind kind) {
  switch (kind) {
    case LawKind::uniform: return "uniform";
    case LawKind::beta_smoothed: return "beta-smoothed";
    case LawKind::point_mass: return "point-mass";
  }
  return "?";
}

LawKind law_kind_from_string(const std::string& s) {
  if (s == "uniform") return LawKind::uniform;
  if (s == "beta-smoothed" || s == "beta_smoothed") return LawKind::beta_smoothed;
  if (s == "point-mass" || s == "point_mass") return LawKind::point_mass;
  throw PreconditionError("unknown law kind '" + s + "'");
}

double concentration(const PotentialLaw& law, double eps) {
  if (eps < 0) throw PreconditionError("concentration: eps must be >= 0");
  if (law.kind == LawKind::point_mass) return 1.0;
  const double x = eps / law.width();
  if (x >= 1.0) return 1.0;
  if (law.kind == LawKind::uniform) return x;
  // Symmetric unimodal density: the heaviest window is centred at 1/2.
  auto cdf = [](double t) { return t * t * (3.0 - 2.0 * t); };
  return cdf(0.5 + 0.5 * x) - cdf(0.5 - 0.5 * x);
}

double OmegaSample::at(const EdgeId& e) const {
  auto it = values_.find(e);
  if (it == values_.end()) throw LookupError("omega has no value for edge " + to_string(e.base) + "/" + std::to_string(e.dir));
  return it->second;
}

std::vector<std::pair<EdgeId, double>> OmegaSample::sorted() const {
  std::vector<std::pair<EdgeId, double>> out(values_.begin(), values_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

double OmegaSample::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [e, v] : values_) m = std::min(m, v);
  return m;
}

OmegaSample sample_omega(const PotentialLaw& law, std::span<const EdgeId> edges, std::uint64_t seed) {
  if (edges.empty()) throw PreconditionError("sample_omega: empty edge list");
  OmegaSample omega(seed);
  for (const EdgeId& e : edges) omega.set(e, law.sample(seed, e));
  return omega;
}

OmegaSample constant_omega(std::span<const EdgeId> edges, double value) {
  OmegaSample omega(0);
  for (const EdgeId& e : edges) omega.set(e, value);
  return omega;
}

void write_omega_csv(std::ostream& os, const OmegaSample& omega, int d) {
  os << "# qgraph-loc v1 schema=omega seed=" << omega.seed() << " d=" << d << "\n";
  for (int a = 0; a < d; ++a) os << "b" << a + 1 << ",";
  os << "dir,value\n";
  os << std::setprecision(17);
  for (const auto& [e, v] : omega.sorted()) {
    for (int a = 0; a < d; ++a) os << e.base[a] << ",";
    os << e.dir << "," << v << "\n";
  }
}

OmegaSample read_omega_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# qgraph-loc", 0) != 0)
    throw PreconditionError("omega csv: missing schema header");
  std::uint64_t seed = 0;
  int d = 0;
  {
    std::istringstream hs(line);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("seed=", 0) == 0) seed = std::stoull(tok.substr(5));
      if (tok.rfind("d=", 0) == 0) d = std::stoi(tok.substr(2));
    }
  }
  if (d < 1 || d > kMaxDim) throw PreconditionError("omega csv: bad dimension in header");
  std::getline(is, line);  // column names
  OmegaSample omega(seed);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    EdgeId e;
    e.base.dim = d;
    for (int a = 0; a < d; ++a) {
      std::getline(ls, cell, ',');
      e.base[a] = std::stoi(cell);
    }
    std::getline(ls, cell, ',');
    e.dir = std::stoi(cell);
    std::getline(ls, cell, ',');
    omega.set(e, std::stod(cell));
  }
  return omega;
}

double eval_W(const CubeId& cube, const OmegaSample& omega) {
  double w = 0.0;
  for (int j = 0; j < cube.n; ++j) w += omega.at(cube.edges[j]);
  return w;
}

std::string to_string(Kernel k) { return k == Kernel::hard_indicator ? "hard_indicator" : "triangular_bump"; }

Kernel kernel_from_string(const std::string& s) {
  if (s == "hard_indicator") return Kernel::hard_indicator;
  if (s == "triangular_bump") return Kernel::triangular_bump;
  throw PreconditionError("unknown interaction kernel '" + s + "'");
}

double InteractionSpec::pair(double r) const {
  if (r >= r0) return 0.0;
  if (kernel == Kernel::hard_indicator) return u0;
  return u0 * (1.0 - r / r0);
}

void InteractionSpec::validate() const {
  if (!(u0 >= 0.0)) throw PreconditionError("interaction: u0 must be >= 0");
  if (r0 < 1) throw PreconditionError("interaction: r0 must be >= 1");
}

double eval_U(int n, int d, std::span<const double> x, const InteractionSpec& spec) {
  double u = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double r = 0.0;
      for (int a = 0; a < d; ++a) r = std::max(r, std::abs(x[i * d + a] - x[j * d + a]));
      u += spec.pair(r);
    }
  return u;
}

}  // namespace qgl

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qgl/lattice.hpp"

namespace qgl {

// Counter-based generator: every value is a pure function of (seed, counter).
std::uint64_t splitmix64(std::uint64_t x);
// Derived seed of trial i from a base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t i);
// Uniform double in [0, 1) from a 64-bit word (top 53 bits).
double unit_double(std::uint64_t word);
// Hash of the canonical edge address (base coordinates, direction) under seed.
std::uint64_t edge_hash(std::uint64_t seed, const EdgeId& e, std::uint64_t stream = 0);

enum class LawKind {
  uniform,        // uniform on [q-, q+]
  beta_smoothed,  // Beta(2,2) rescaled to [q-, q+]
  point_mass,     // all mass at q-; not Hoelder, used as a degenerate surrogate
};

struct PotentialLaw {
  LawKind kind = LawKind::uniform;
  double q_minus = 0.0;
  double q_plus = 1.0;
  double holder_exponent = 1.0;
  double holder_const = 1.0;

  static PotentialLaw uniform(double q_minus, double q_plus);
  static PotentialLaw beta_smoothed(double q_minus, double q_plus);
  static PotentialLaw point_mass(double q);

  bool is_holder() const { return kind != LawKind::point_mass; }
  double width() const { return q_plus - q_minus; }
  double sample(std::uint64_t seed, const EdgeId& e) const;
  void validate() const;
};

std::string to_string(LawKind kind);
LawKind law_kind_from_string(const std::string& s);

// s(mu, eps) = sup of mu[a, b] over intervals with b - a <= eps.
double concentration(const PotentialLaw& law, double eps);

class OmegaSample {
 public:
  OmegaSample() = default;
  explicit OmegaSample(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  double at(const EdgeId& e) const;  // throws LookupError
  bool has(const EdgeId& e) const { return values_.count(e) != 0; }
  void set(const EdgeId& e, double v) { values_[e] = v; }
  std::size_t size() const { return values_.size(); }
  // Sorted by edge address.
  std::vector<std::pair<EdgeId, double>> sorted() const;
  double min_value() const;

 private:
  std::uint64_t seed_ = 0;
  std::unordered_map<EdgeId, double, EdgeIdHash> values_;
};

OmegaSample sample_omega(const PotentialLaw& law, std::span<const EdgeId> edges, std::uint64_t seed);
// Constant potential on the given edges.
OmegaSample constant_omega(std::span<const EdgeId> edges, double value);

void write_omega_csv(std::ostream& os, const OmegaSample& omega, int d);
OmegaSample read_omega_csv(std::istream& is);

// W_kappa = sum of omega over the edges of the cube.
double eval_W(const CubeId& cube, const OmegaSample& omega);

enum class Kernel { hard_indicator, triangular_bump };

std::string to_string(Kernel k);
Kernel kernel_from_string(const std::string& s);

struct InteractionSpec {
  double u0 = 0.0;
  int r0 = 1;
  Kernel kernel = Kernel::hard_indicator;

  // Two-body profile F at sup-norm distance r.
  double pair(double r) const;
  void validate() const;
};

// U(x) = sum over pairs i < j of F(|x_i - x_j|); positions flat particle-major.
double eval_U(int n, int d, std::span<const double> x, const InteractionSpec& spec);

}  // namespace qgl

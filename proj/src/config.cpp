#include "qgl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qgl/errors.hpp"
#include "qgl/montecarlo.hpp"

namespace qgl {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

json scalar(const std::string& v) {
  if (v.empty()) return "";
  json j = json::parse(v, nullptr, false);
  if (!j.is_discarded()) return j;
  return v;
}

json ini_value(const std::string& v) {
  json j = json::parse(v, nullptr, false);
  if (!j.is_discarded()) return j;
  if (v.find(',') != std::string::npos) {
    json arr = json::array();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) arr.push_back(scalar(trim(item)));
    return arr;
  }
  return v;
}

void set_path(json& root, const std::string& dotted, json value, int line) {
  json* node = &root;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(trim(part));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError("line " + std::to_string(line), "empty key component in '" + dotted + "'");
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = std::move(value);
    } else {
      json& next = (*node)[parts[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) throw ConfigError("line " + std::to_string(line), "'" + parts[i] + "' is not a section");
      node = &next;
    }
  }
}

json check_defaults() {
  return {
      {"geometry", {{"check", "counts"}, {"n", nullptr}, {"d", nullptr}, {"max_L", 4}, {"max_d", 3}, {"max_n", 3}, {"radius", 30}, {"side", 2},
                    {"far_width", 4}}},
      {"schedule", {{"p1", "auto"}, {"L0", 81}, {"K", 4}, {"strict", false}}},
      {"assemble", {{"n", nullptr}, {"L", nullptr}}},
      {"spectrum", {{"n", nullptr}, {"L", nullptr}, {"k", 10}}},
      {"green", {{"n", nullptr}, {"L", nullptr}, {"eta", 0.25}}},
      {"cheeger", {{"l", {2, 3, 4, 5}}}},
      {"weyl", {{"n", nullptr}, {"L", nullptr}, {"trials", nullptr}, {"S", 4 * std::numbers::pi}}},
      {"ct", {{"n", nullptr}, {"L", nullptr}, {"trials", nullptr}, {"eta", {0.25, 0.5}}}},
      {"dg", {{"n", nullptr}, {"L", nullptr}, {"trials", nullptr}, {"t", {0.5, 1.0, 2.0}}, {"max_delta", 4}}},
      {"wegner1", {{"n", nullptr}, {"L", nullptr}, {"trials", nullptr}, {"E", 0.5}, {"eps", {0.04, 0.02, 0.01}}}},
      {"wegner2", {{"n", nullptr}, {"L", nullptr}, {"trials", nullptr}, {"I", {0.0, 2.0}}, {"eps", 0.05}}},
      {"lifshitz", {{"n", nullptr}, {"trials", nullptr}, {"b", 0.5}, {"l", {1, 2, 3, 4, 5}}}},
      {"ils", {{"n", nullptr}, {"trials", nullptr}, {"L0", 9}, {"beta", 0.5}, {"p", 1.0}, {"ns_grid", 0}}},
      {"ds", {{"trials", nullptr}, {"p1", "auto"}, {"L0", 7}, {"K", 1}, {"n", 1}, {"k", 0}, {"grid_max", 4096}}},
      {"gri", {{"n", nullptr}, {"l", 8}, {"L", 16}, {"eta", 0.5}}},
      {"mass_fit", {{"L", 100}, {"count", 5}, {"floor_rel", 1e-11}}},
      {"dyn_moment", {{"L", {20, 40, 80}}, {"s", 1.0}, {"I", {0.0, 2.0}}}},
  };
}

// Every key of `user` must exist in `schema` with a compatible type.
void validate_shape(const json& user, const json& schema, const std::string& path) {
  if (!user.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected a section");
  for (const auto& [key, value] : user.items()) {
    const std::string p = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) throw ConfigError(p, "unknown key");
    const json& s = schema[key];
    if (s.is_object()) {
      validate_shape(value, s, p);
      continue;
    }
    const bool ok = s.is_null()                ? value.is_number() || value.is_null()
                    : key == "p1"              ? value.is_number() || value == "auto"
                    : s.is_number_float()      ? value.is_number()
                    : s.is_number()            ? value.is_number_integer()
                    : s.is_array()             ? value.is_array()
                                               : s.type() == value.type();
    if (!ok) throw ConfigError(p, "expected " + std::string(s.is_null() ? "number" : s.type_name()));
  }
}

template <class T>
T get_in(const json& j, const std::string& path, T lo, T hi) {
  const T v = j.get<T>();
  if (!(v >= lo && v <= hi)) {
    std::ostringstream os;
    os << "must be in [" << lo << ", " << hi << "]";
    throw ConfigError(path, os.str());
  }
  return v;
}

}  // namespace

json parse_ini(std::string_view text) {
  json root = json::object();
  std::string section;
  std::stringstream ss{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("line " + std::to_string(line), "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(line), "empty section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line), "expected key = value");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    set_path(root, section.empty() ? key : section + "." + key, ini_value(value), line);
  }
  return root;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), "cannot read file");
  std::stringstream buf;
  buf << is.rdbuf();
  json j;
  if (path.extension() == ".json") {
    j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw ConfigError(path.string(), "invalid JSON");
  } else {
    j = parse_ini(buf.str());
  }
  if (j.is_object() && j.contains("config") && j.contains("version")) return j["config"];
  return j;
}

std::vector<std::string> known_checks() {
  std::vector<std::string> out;
  const json defaults = check_defaults();
  for (const auto& [k, v] : defaults.items()) out.push_back(k);
  return out;
}

json default_config() {
  json d = {
      {"model",
       {{"N", 1},
        {"d", 1},
        {"law", {{"kind", "uniform"}, {"q_minus", 0.0}, {"q_plus", 1.0}}},
        {"interaction", {{"u0", 0.0}, {"r0", 1}, {"kernel", "hard_indicator"}}}}},
      {"geometry", {{"L", 8}}},
      {"mesh", {{"M", 4}}},
      {"diagnostics", {{"checks", json::array()}, {"trials", 50}, {"seed", 1}, {"threads", 0}}},
      {"output", {{"dir", "out"}}},
  };
  const json checks = check_defaults();
  for (const auto& [k, v] : checks.items()) d["diagnostics"][k] = v;
  return d;
}

ExperimentConfig resolve_config(const json& user) {
  const json defaults = default_config();
  validate_shape(user, defaults, "");
  json r = defaults;
  r.merge_patch(user);
  const json checks = check_defaults();
  // merge_patch drops keys set to null; put the inherit markers back
  for (const auto& [k, v] : checks.items())
    for (const auto& [key, val] : v.items())
      if (!r["diagnostics"][k].contains(key)) r["diagnostics"][k][key] = val;

  ExperimentConfig c;
  const json& m = r["model"];
  c.N = get_in<int>(m["N"], "model.N", 1, kMaxParticles);
  c.d = get_in<int>(m["d"], "model.d", 1, kMaxDim);
  try {
    const std::string kind = m["law"]["kind"];
    const double lo = m["law"]["q_minus"], hi = m["law"]["q_plus"];
    const LawKind lk = law_kind_from_string(kind);
    c.law = lk == LawKind::uniform         ? PotentialLaw::uniform(lo, hi)
            : lk == LawKind::beta_smoothed ? PotentialLaw::beta_smoothed(lo, hi)
                                           : PotentialLaw::point_mass(lo);
    c.law.validate();
  } catch (const Error& e) {
    throw ConfigError("model.law", e.what());
  }
  try {
    c.interaction.u0 = m["interaction"]["u0"];
    c.interaction.r0 = m["interaction"]["r0"];
    c.interaction.kernel = kernel_from_string(m["interaction"]["kernel"]);
    c.interaction.validate();
  } catch (const Error& e) {
    throw ConfigError("model.interaction", e.what());
  }
  c.L = get_in<int>(r["geometry"]["L"], "geometry.L", 1, 1 << 20);
  c.mesh.M = get_in<int>(r["mesh"]["M"], "mesh.M", 1, 1024);
  const json& dg = r["diagnostics"];
  const std::vector<std::string> known = known_checks();
  for (std::size_t i = 0; i < dg["checks"].size(); ++i) {
    const json& v = dg["checks"][i];
    const std::string p = "diagnostics.checks[" + std::to_string(i) + "]";
    if (!v.is_string()) throw ConfigError(p, "expected a check name");
    if (std::find(known.begin(), known.end(), v.get<std::string>()) == known.end())
      throw ConfigError(p, "unknown check '" + v.get<std::string>() + "'");
    c.checks.push_back(v);
  }
  c.trials = get_in<std::int64_t>(dg["trials"], "diagnostics.trials", 1, std::int64_t{1} << 40);
  c.seed = dg["seed"].get<std::uint64_t>();
  const int threads = get_in<int>(dg["threads"], "diagnostics.threads", 0, 4096);
  c.threads = threads == 0 ? worker_count() : threads;
  for (const auto& [name, block] : checks.items()) {
    const json& b = dg[name];
    const std::string p = "diagnostics." + name;
    if (b.contains("n") && !b["n"].is_null()) get_in<int>(b["n"], p + ".n", 1, kMaxParticles);
    if (b.contains("d") && !b["d"].is_null()) get_in<int>(b["d"], p + ".d", 1, kMaxDim);
    if (b.contains("L") && b["L"].is_number()) get_in<int>(b["L"], p + ".L", 1, 1 << 20);
    if (b.contains("trials") && !b["trials"].is_null())
      get_in<std::int64_t>(b["trials"], p + ".trials", 1, std::int64_t{1} << 40);
  }
  c.out_dir = r["output"]["dir"].get<std::string>();
  c.resolved = r;
  return c;
}

json ExperimentConfig::check(const std::string& name) const {
  json b = resolved["diagnostics"][name];
  if (b.contains("n") && b["n"].is_null()) b["n"] = N;
  if (b.contains("d") && b["d"].is_null()) b["d"] = d;
  if (b.contains("L") && b["L"].is_null()) b["L"] = L;
  if (b.contains("trials") && b["trials"].is_null()) b["trials"] = trials;
  return b;
}

json ExperimentConfig::fingerprint(const std::string& name) const {
  return {{"check", name},
          {"model", resolved["model"]},
          {"mesh", resolved["mesh"]},
          {"seed", seed},
          {"params", check(name)}};
}

}  // namespace qgl

#include <iostream>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qgl/config.hpp"
#include "qgl/errors.hpp"
#include "qgl/experiments.hpp"
#include "qgl/output.hpp"

using nlohmann::json;

namespace {

struct Flag {
  std::string name;  // without dashes
  std::string path;  // dotted config path
  std::string help;
};

// Flags shared by every diagnostic subcommand.
const std::vector<Flag> kModelFlags = {
    {"N", "model.N", "number of particles in the model"},
    {"d", "model.d", "lattice dimension"},
    {"M", "mesh.M", "subdivisions per unit edge"},
    {"law", "model.law.kind", "uniform | beta_smoothed | point_mass"},
    {"q-minus", "model.law.q_minus", "lower end of the potential support"},
    {"q-plus", "model.law.q_plus", "upper end of the potential support"},
    {"u0", "model.interaction.u0", "interaction strength"},
    {"r0", "model.interaction.r0", "interaction range"},
    {"kernel", "model.interaction.kernel", "hard_indicator | triangular_bump"},
    {"seed", "diagnostics.seed", "base seed"},
    {"trials", "diagnostics.trials", "Monte Carlo trials / disorder samples"},
    {"threads", "diagnostics.threads", "worker threads (0 = available parallelism)"},
    {"out", "output.dir", "output directory"},
};

struct Command {
  std::string name;
  std::string check;
  std::string help;
  std::vector<Flag> flags;  // paths relative to diagnostics.<check> unless they contain a dot
};

const std::vector<Command>& commands() {
  static const std::vector<Command> c = {
      {"geometry", "geometry", "exact combinatorics and separability audits",
       {{"check", "check", "counts | separability"},
        {"radius", "radius", "centre range for the separability grid"},
        {"max-L", "max_L", "largest half-side for counts"},
        {"max-d", "max_d", "largest dimension for counts"},
        {"max-n", "max_n", "largest particle number for counts"}}},
      {"schedule", "schedule", "multiscale schedule table",
       {{"p1", "p1", "first exponent or 'auto'"},
        {"L0", "L0", "initial scale"},
        {"K", "K", "number of scale steps"}}},
      {"assemble", "assemble", "write the matrices of one sample", {{"L", "L", "half-side"}, {"n", "n", "particles"}}},
      {"spectrum", "spectrum", "lowest eigenvalues of one sample",
       {{"L", "L", "half-side"}, {"n", "n", "particles"}, {"k", "k", "number of eigenvalues"}}},
      {"green", "green", "Green blocks from the centre cell",
       {{"L", "L", "half-side"}, {"n", "n", "particles"}, {"eta", "eta", "distance below the spectrum"}}},
      {"cheeger", "cheeger", "spectral gap of the free Kirchhoff Laplacian", {{"l", "l", "half-sides"}}},
      {"weyl", "weyl", "eigenvalue counting bound",
       {{"L", "L", "half-side"}, {"n", "n", "particles"}, {"S", "S", "energy ceiling"}}},
      {"ct-check", "ct", "Combes-Thomas bound on Green blocks",
       {{"L", "L", "half-side"}, {"n", "n", "particles"}, {"eta", "eta", "distances below the spectrum"}}},
      {"dg-check", "dg", "Davies-Gaffney bound on the heat semigroup",
       {{"L", "L", "half-side"},
        {"n", "n", "particles"},
        {"t", "t", "times"},
        {"max-delta", "max_delta", "largest cell distance"}}},
      {"wegner1", "wegner1", "one-volume spectral proximity probability",
       {{"L", "L", "half-side"}, {"n", "n", "particles"}, {"E", "E", "energy"}, {"eps", "eps", "window half-widths"}}},
      {"wegner2", "wegner2", "two-volume spectral proximity probability",
       {{"L", "L", "half-side"}, {"n", "n", "particles"}, {"I", "I", "energy interval lo,hi"}, {"eps", "eps", "distance"}}},
      {"lifshitz", "lifshitz", "probability of a low ground state",
       {{"n", "n", "particles"}, {"b", "b", "threshold constant"}, {"l", "l", "half-sides"}}},
      {"ils", "ils", "initial length scale gap event",
       {{"n", "n", "particles"},
        {"L0", "L0", "initial scale"},
        {"beta", "beta", "exponent"},
        {"p", "p", "target exponent"},
        {"ns-grid", "ns_grid", "energies for the direct singularity scan"}}},
      {"ds", "ds", "probability of a singular separable pair",
       {{"p1", "p1", "first exponent or 'auto'"},
        {"L0", "L0", "initial scale"},
        {"K", "K", "number of scale steps"},
        {"n", "n", "particles in the pair"},
        {"k", "k", "scale index"},
        {"grid-max", "grid_max", "cap on the energy grid"}}},
      {"gri-audit", "gri", "geometric resolvent inequality constants",
       {{"n", "n", "particles"}, {"l", "l", "inner half-side"}, {"L", "L", "outer half-side"}, {"eta", "eta", "distance below the spectrum"}}},
      {"mass-fit", "mass_fit", "exponential decay rate of eigenfunctions",
       {{"L", "L", "half-side"}, {"count", "count", "number of eigenfunctions"}, {"floor-rel", "floor_rel", "relative norm floor"}}},
      {"dyn-moment", "dyn_moment", "weighted Hilbert-Schmidt moment",
       {{"L", "L", "half-sides"}, {"s", "s", "moment order"}, {"I", "I", "energy interval lo,hi"}}},
  };
  return c;
}

json parse_value(const std::string& v) { return qgl::parse_ini("v = " + v)["v"]; }

void set_dotted(json& root, const std::string& path, const json& v) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = v;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

int run_subcommand(const Command& cmd, const std::map<std::string, std::string>& values, bool json_out) {
  json user = json::object();
  for (const Flag& f : kModelFlags)
    if (auto it = values.find(f.name); it != values.end()) set_dotted(user, f.path, parse_value(it->second));
  for (const Flag& f : cmd.flags)
    if (auto it = values.find(f.name); it != values.end())
      set_dotted(user, "diagnostics." + cmd.check + "." + f.path, parse_value(it->second));
  user["diagnostics"]["checks"] = json::array({cmd.check});
  qgl::ExperimentConfig cfg;
  try {
    cfg = qgl::resolve_config(user);
  } catch (const qgl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return qgl::kExitConfig;
  }
  try {
    const qgl::RunResult r = qgl::run_experiment(cfg);
    const qgl::CheckOutcome& o = r.checks.at(0);
    if (json_out)
      std::cout << o.summary.dump(2) << "\n";
    else
      std::cout << o.text;
    if (o.assertable && !o.passed) return qgl::kExitAssertion;
    return qgl::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << (dynamic_cast<const qgl::ConfigError*>(&e) ? "config error: " : "error: ") << e.what() << "\n";
    return qgl::exit_code_for(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-particle quantum graph localization diagnostics"};
  app.set_version_flag("--version", std::string(qgl::kVersion));
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, bool> json_flags;
  std::string exhaustive;

  for (const Command& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    auto& store = values[cmd.name];
    auto add = [&](const Flag& f) {
      sub->add_option_function<std::string>("--" + f.name, [&store, name = f.name](const std::string& v) {
        store[name] = v;
      }, f.help);
    };
    for (const Flag& f : kModelFlags) add(f);
    for (const Flag& f : cmd.flags) add(f);
    sub->add_flag("--json", json_flags[cmd.name], "print the JSON summary instead of text");
    if (cmd.name == "geometry")
      sub->add_option("--exhaustive", exhaustive, "separability grid as d<d>n<n>L<L>, e.g. d1n2L2");
    if (cmd.name == "schedule") sub->add_flag_function("--strict", [&store](std::int64_t) { store["strict"] = "true"; },
                                                       "fail on the first violated constraint");
  }

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run every check of a configuration file");
  run->add_option("config", config_path, "INI or JSON configuration (or a manifest)")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return qgl::run_config_file(config_path, std::cout, std::cerr);
  for (const Command& cmd : commands()) {
    if (!app.got_subcommand(cmd.name)) continue;
    auto store = values[cmd.name];
    if (cmd.name == "geometry" && !exhaustive.empty()) {
      static const std::regex spec(R"(d(\d)n(\d)L(\d+))");
      std::smatch m;
      if (!std::regex_match(exhaustive, m, spec)) {
        std::cerr << "config error: --exhaustive: expected d<d>n<n>L<L>\n";
        return qgl::kExitConfig;
      }
      store["check"] = "\"separability\"";
      store["d"] = m[1];
      store["n"] = m[2];
      store["side"] = m[3];
    }
    Command c = cmd;
    if (cmd.name == "geometry")
      c.flags.insert(c.flags.end(), {{"d", "d", ""}, {"n", "n", ""}, {"side", "side", ""}});
    if (cmd.name == "schedule") c.flags.push_back({"strict", "strict", ""});
    return run_subcommand(c, store, json_flags[cmd.name]);
  }
  return qgl::kExitConfig;
}

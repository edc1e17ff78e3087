#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "qgl/config.hpp"
#include "qgl/errors.hpp"
#include "qgl/experiments.hpp"
#include "qgl/output.hpp"

using namespace qgl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string config_error_path(const json& user) {
  try {
    resolve_config(user);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qgl-unit-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("INI parsing") {
  const json j = parse_ini(
      "# comment\n"
      "[model]\n"
      "N = 2\n"
      "law.kind = beta_smoothed\n"
      "[diagnostics]\n"
      "checks = cheeger, weyl\n"
      "ct.eta = [0.25, 1]\n"
      "seed = 7\n");
  CHECK(j["model"]["N"] == 2);
  CHECK(j["model"]["law"]["kind"] == "beta_smoothed");
  CHECK(j["diagnostics"]["checks"] == json::array({"cheeger", "weyl"}));
  CHECK(j["diagnostics"]["ct"]["eta"] == json::array({0.25, 1}));
  CHECK_THROWS_AS(parse_ini("[model\nN = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("N 1\n"), ConfigError);
}

TEST_CASE("defaults and inheritance") {
  const ExperimentConfig c = resolve_config(json::object());
  CHECK(c.N == 1);
  CHECK(c.L == 8);
  CHECK(c.mesh.M == 4);
  CHECK(c.threads >= 1);
  const ExperimentConfig c2 = resolve_config({{"model", {{"N", 2}}}, {"geometry", {{"L", 5}}}, {"diagnostics", {{"ct", {{"L", 3}}}}}});
  CHECK(c2.check("ct")["n"] == 2);
  CHECK(c2.check("ct")["L"] == 3);
  CHECK(c2.check("dg")["L"] == 5);
  CHECK(c2.check("dg")["trials"] == 50);
}

TEST_CASE("invalid configurations name the offending field") {
  CHECK(config_error_path({{"model", {{"N", 0}}}}) == "model.N");
  CHECK(config_error_path({{"model", {{"d", 4}}}}) == "model.d");
  CHECK(config_error_path({{"model", {{"colour", 1}}}}) == "model.colour");
  CHECK(config_error_path({{"mesh", {{"M", "fine"}}}}) == "mesh.M");
  CHECK(config_error_path({{"diagnostics", {{"checks", {"nope"}}}}}) == "diagnostics.checks[0]");
  CHECK(config_error_path({{"diagnostics", {{"ct", {{"n", 5}}}}}}) == "diagnostics.ct.n");
  CHECK(config_error_path({{"model", {{"law", {{"q_minus", 2.0}, {"q_plus", 1.0}}}}}}) == "model.law");
  CHECK(config_error_path({{"diagnostics", {{"schedule", {{"p1", "auto"}}}}}}).empty());
  CHECK(config_error_path({{"diagnostics", {{"schedule", {{"p1", "big"}}}}}}) == "diagnostics.schedule.p1");
}

TEST_CASE("fingerprint ignores unrelated checks") {
  const ExperimentConfig a = resolve_config(json::object());
  const ExperimentConfig b = resolve_config({{"diagnostics", {{"weyl", {{"S", 20.0}}}}}});
  CHECK(param_hash(a.fingerprint("cheeger")) == param_hash(b.fingerprint("cheeger")));
  CHECK(param_hash(a.fingerprint("weyl")) != param_hash(b.fingerprint("weyl")));
}

TEST_CASE("hash and number formatting") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(param_hash(json{{"x", 1}}).size() == 16);
  CHECK(fmt(0.1) == "0.1");
  CHECK(fmt(1e-300) == "1e-300");
  CHECK(fmt(INFINITY) == "inf");
  CHECK(fmt(-INFINITY) == "-inf");
  CHECK(fmt(NAN) == "nan");
  CHECK(std::stod(fmt(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("csv writer") {
  const fs::path dir = scratch_dir("csv");
  {
    CsvWriter w(dir / "t.csv", "demo", {"a", "b", "c"});
    w.row(1, 0.5, true);
    w.row("x", -2.25, false);
    CHECK_THROWS_AS(w.row(1, 2), InternalError);
  }
  CHECK(slurp(dir / "t.csv") == "# qgraph-loc v1 schema=demo\na,b,c\n1,0.5,1\nx,-2.25,0\n");
}

TEST_CASE("experiment run writes hashed outputs and a manifest") {
  const fs::path dir = scratch_dir("run");
  json user = {{"diagnostics", {{"checks", {"cheeger", "weyl"}}, {"trials", 2}, {"cheeger", {{"l", {5}}}}}},
               {"model", {{"N", 2}}},
               {"geometry", {{"L", 2}}},
               {"output", {{"dir", dir.string()}}}};
  const ExperimentConfig cfg = resolve_config(user);
  const RunResult r = run_experiment(cfg);
  REQUIRE(r.checks.size() == 2);
  CHECK(r.all_passed());
  const json manifest = json::parse(slurp(r.manifest));
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest["csv_schema_version"] == kCsvSchemaVersion);
  CHECK(manifest["files"].size() >= 4);
  for (const auto& f : manifest["files"]) CHECK(fs::exists(dir / f.get<std::string>()));

  const std::string first = slurp(r.checks[1].files.front());
  user["diagnostics"]["threads"] = 3;
  const RunResult again = run_experiment(resolve_config(user));
  CHECK(again.manifest == r.manifest);
  CHECK(slurp(again.checks[1].files.front()) == first);

  const json reloaded = load_config_file(r.manifest);
  CHECK(resolve_config(reloaded).checks == cfg.checks);
}

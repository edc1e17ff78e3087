#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(QGL_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qgl-cli-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") out[e.path().filename().string()] = slurp(e.path());
  return out;
}

int count_lines_starting_with_digit(const std::string& s) {
  std::istringstream is(s);
  std::string line;
  int n = 0;
  while (std::getline(is, line))
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++n;
  return n;
}

}  // namespace

TEST_CASE("schedule prints one row per scale") {
  const fs::path dir = scratch_dir("schedule");
  const Run r = cli("schedule --N 2 --d 1 --p1 auto --L0 81 --K 4 --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("k,L_k,m_{L_k},r_{N,L_k}") != std::string::npos);
  CHECK(count_lines_starting_with_digit(r.out) == 5);
  CHECK(r.out.find("0,81,0.1111111111") != std::string::npos);
  CHECK(cli("schedule --N 2 --d 1 --L0 81 --K 4 --strict --out " + dir.string()).code == 1);
}

TEST_CASE("geometry audits") {
  const fs::path dir = scratch_dir("geometry");
  const Run sep = cli("geometry --check separability --exhaustive d1n2L2 --out " + dir.string());
  CHECK(sep.code == 0);
  CHECK(sep.out.rfind("pass", 0) == 0);
  CHECK(sep.out.find("pairs") != std::string::npos);
  const Run counts = cli("geometry --max-L 3 --out " + dir.string());
  CHECK(counts.code == 0);
  CHECK(counts.out.find("pass") != std::string::npos);
  CHECK(cli("geometry --exhaustive banana --out " + dir.string()).code == 2);
}

TEST_CASE("run with configuration files") {
  const fs::path dir = scratch_dir("run");
  write_file(dir / "ok.ini",
             "[model]\nN = 1\nd = 1\n[diagnostics]\nchecks = [\"cheeger\"]\ncheeger.l = [5]\n[output]\ndir = \"" +
                 (dir / "out").string() + "\"\n");
  const Run ok = cli("run " + (dir / "ok.ini").string());
  CHECK(ok.code == 0);
  CHECK(ok.out.find("[cheeger] PASS") != std::string::npos);
  CHECK(ok.out.find("pass d=1 l=5") != std::string::npos);

  write_file(dir / "bad.ini", "[model]\nN = 0\n");
  const Run bad = cli("run " + (dir / "bad.ini").string());
  CHECK(bad.code == 2);
  CHECK(bad.out.find("model.N") != std::string::npos);

  CHECK(cli("run " + (dir / "missing.ini").string()).code == 2);
}

TEST_CASE("reruns give byte-identical csv files") {
  const fs::path a = scratch_dir("det-a"), b = scratch_dir("det-b");
  const std::string args = "ct-check --L 4 --trials 3 --seed 11 --out ";
  CHECK(cli(args + a.string() + " --threads 1").code == 0);
  CHECK(cli(args + b.string() + " --threads 2").code == 0);
  const auto fa = csv_files(a), fb = csv_files(b);
  CHECK(!fa.empty());
  CHECK(fa == fb);
}

TEST_CASE("subcommand flags and json output") {
  const fs::path dir = scratch_dir("json");
  const Run r = cli("weyl --N 2 --L 2 --trials 2 --json --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("\"pass\": true") != std::string::npos);
  CHECK(cli("weyl --N 7 --out " + dir.string()).code == 2);
  CHECK(cli("--version").out.find("1.0.0") != std::string::npos);
}

#include "qgl/output.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "qgl/errors.hpp"

namespace qgl {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string param_hash(const nlohmann::json& params) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(params.dump())));
  return buf;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& schema,
                     const std::vector<std::string>& columns)
    : path_(path), os_(path), width_(columns.size()) {
  if (!os_) throw Error("cannot open " + path.string() + " for writing");
  os_ << "# qgraph-loc v" << kCsvSchemaVersion << " schema=" << schema << '\n';
  write(columns);
}

void CsvWriter::write(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw InternalError("csv row width mismatch in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
  os_ << '\n';
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

}  // namespace qgl

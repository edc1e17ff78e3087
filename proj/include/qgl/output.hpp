#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

namespace qgl {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);
// 16 hex digits of the FNV-1a hash of the canonical JSON dump.
std::string param_hash(const nlohmann::json& params);

// Shortest round-trip decimal form; "inf", "-inf" and "nan" otherwise.
std::string fmt(double x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& schema, const std::vector<std::string>& columns);

  template <class... Ts>
  void row(const Ts&... cells) {
    std::vector<std::string> v{cell(cells)...};
    write(v);
  }
  void write(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double x) { return fmt(x); }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I i) {
    return std::to_string(i);
  }

  std::filesystem::path path_;
  std::ofstream os_;
  std::size_t width_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace qgl

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace compforge {

inline constexpr std::string_view kToolVersion = "0.3.1";

std::string sha256_hex(std::string_view bytes);
/// Throws std::runtime_error when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record written next to every output of a mutating command.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> flags;
  std::map<std::string, std::string> input_hashes;  // path -> sha256
  std::uint64_t seed = 0;
  std::string tool_version{kToolVersion};
  std::string timestamp;
  std::vector<std::string> deviations;

  void add_input(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// UTC ISO-8601 time. Honors SOURCE_DATE_EPOCH so that manifests of
/// reproducible runs can be compared byte for byte.
std::string manifest_timestamp();

}  // namespace compforge

#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace compforge::csv {

/// Splits one line on commas. No quoting: ids and numbers never contain commas.
/// A trailing '\r' is stripped.
std::vector<std::string> split(std::string_view line);

/// Reads the next non-empty line that does not start with '#'.
bool next_record(std::istream& in, std::string& line);

std::string join(const std::vector<std::string>& cells);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict full-string parse; nullopt on trailing junk or empty input.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace compforge::csv

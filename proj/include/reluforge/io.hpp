#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace reluforge::io {

/// Shortest round-trippable text for a double, independent of the C locale.
std::string format_double(double value);
/// Fixed count of significant digits (locale independent).
std::string format_double(double value, int significant_digits);
/// Strict parse of a whole token; throws ValidationError on junk.
double parse_double(std::string_view token);
long long parse_integer(std::string_view token);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Minimal CSV builder with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace reluforge::io

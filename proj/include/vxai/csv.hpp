#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vxai::csv {

/// Shortest round-trip decimal form; empty string for nullopt/non-finite.
std::string format(double v);
std::string format(std::optional<double> v);
std::string quote(const std::string& field);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws InputError for unknown names.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

/// Writes header + rows with '\n' line endings.
void write(const Table& t, const std::filesystem::path& path);
std::string to_string(const Table& t);
Table read(const std::filesystem::path& path);

}  // namespace vxai::csv

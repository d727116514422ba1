#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iti::harness {

// Shortest round-trip decimal, independent of the C locale.
std::string format_real(double v);
double parse_real(std::string_view s);

// Tab-separated table: '#' lines are comments, the first other line is the header.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  void add_row(std::vector<std::string> row);
  std::string to_string() const;
  static Table parse(std::string_view text);
};

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace iti::harness

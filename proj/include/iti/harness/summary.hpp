#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "iti/harness/config.hpp"
#include "iti/harness/evaluate.hpp"
#include "iti/harness/table_io.hpp"

namespace iti::harness {

struct CellResult {
  std::string family;
  double intensity = 0;
  std::string variant;
  std::uint64_t seed = 0;
  EvalResult source, zero_shot, adapted;
};

CellResult parse_result(const Table& t);
CellResult load_result(const std::filesystem::path& path);
// Every result.tsv below `dir`, plus the relative paths of cells that left error.txt.
std::vector<CellResult> load_results(const std::filesystem::path& dir, std::vector<std::string>* failed = nullptr);

struct Aggregate {
  double mean = 0;
  double std = 0;
};

struct SummaryRow {
  std::string family;
  double intensity = 0;
  std::string variant;
  int seeds = 0;
  Aggregate source, zero_shot, adapted;
  double delta = 0;  // adapted.mean - zero_shot.mean
};

struct Summary {
  std::vector<SummaryRow> rows;  // sorted by (family, intensity, variant)
  std::vector<std::string> missing;
  std::vector<std::string> failed;
};

// Across seeds: mean of per-seed means and their sample std. With a single
// seed the cell's own episode mean and std are reported unchanged.
Summary summarize(std::vector<CellResult> results);

Table summary_table(const Summary& s);
std::string summary_text(const Summary& s);

}  // namespace iti::harness

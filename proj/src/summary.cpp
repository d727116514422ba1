#include "iti/harness/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace iti::harness {

namespace fs = std::filesystem;

CellResult parse_result(const Table& t) {
  const auto c_family = t.column("family"), c_int = t.column("intensity"), c_var = t.column("variant"),
             c_seed = t.column("seed"), c_phase = t.column("phase"), c_ep = t.column("episodes"),
             c_mean = t.column("mean_return"), c_std = t.column("std_return");
  if (t.rows.size() != 3) throw ConfigError("result table must have exactly three rows");
  CellResult r;
  r.family = t.rows[0][c_family];
  r.intensity = parse_real(t.rows[0][c_int]);
  r.variant = t.rows[0][c_var];
  r.seed = std::stoull(t.rows[0][c_seed]);
  EvalResult* slots[3] = {&r.source, &r.zero_shot, &r.adapted};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& row = t.rows[i];
    if (row[c_family] != r.family || row[c_var] != r.variant || row[c_seed] != t.rows[0][c_seed])
      throw ConfigError("result table mixes cells");
    slots[i]->phase = row[c_phase];
    slots[i]->episodes = std::stoi(row[c_ep]);
    slots[i]->mean_return = parse_real(row[c_mean]);
    slots[i]->std_return = parse_real(row[c_std]);
    slots[i]->seed = r.seed;
  }
  return r;
}

CellResult load_result(const fs::path& path) { return parse_result(Table::parse(read_text_file(path))); }

std::vector<CellResult> load_results(const fs::path& dir, std::vector<std::string>* failed) {
  std::vector<fs::path> paths, errors;
  if (!fs::exists(dir)) throw ConfigError("no such directory: " + dir.string());
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (e.path().filename() == "result.tsv") paths.push_back(e.path());
    if (e.path().filename() == "error.txt") errors.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::sort(errors.begin(), errors.end());
  std::vector<CellResult> out;
  for (const auto& p : paths) out.push_back(load_result(p));
  if (failed)
    for (const auto& p : errors) failed->push_back(fs::relative(p.parent_path(), dir).generic_string());
  return out;
}

namespace {

Aggregate aggregate(const std::vector<const EvalResult*>& cells) {
  if (cells.size() == 1) return {cells[0]->mean_return, cells[0]->std_return};
  Aggregate a;
  for (const auto* c : cells) a.mean += c->mean_return;
  a.mean /= double(cells.size());
  double ss = 0;
  for (const auto* c : cells) ss += (c->mean_return - a.mean) * (c->mean_return - a.mean);
  a.std = std::sqrt(ss / double(cells.size() - 1));
  return a;
}

}  // namespace

Summary summarize(std::vector<CellResult> results) {
  auto key = [](const CellResult& r) { return std::make_tuple(r.family, r.intensity, r.variant, r.seed); };
  std::sort(results.begin(), results.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });

  std::map<std::tuple<std::string, double, std::string>, std::vector<const CellResult*>> groups;
  std::set<std::uint64_t> all_seeds;
  for (const auto& r : results) {
    groups[{r.family, r.intensity, r.variant}].push_back(&r);
    all_seeds.insert(r.seed);
  }

  Summary s;
  for (const auto& [k, cells] : groups) {
    SummaryRow row;
    std::tie(row.family, row.intensity, row.variant) = k;
    row.seeds = int(cells.size());
    std::vector<const EvalResult*> src, zs, ad;
    std::set<std::uint64_t> present;
    for (const auto* c : cells) {
      src.push_back(&c->source);
      zs.push_back(&c->zero_shot);
      ad.push_back(&c->adapted);
      present.insert(c->seed);
    }
    row.source = aggregate(src);
    row.zero_shot = aggregate(zs);
    row.adapted = aggregate(ad);
    row.delta = row.adapted.mean - row.zero_shot.mean;
    s.rows.push_back(row);
    for (auto seed : all_seeds)
      if (!present.count(seed))
        s.missing.push_back(row.family + " lambda=" + format_real(row.intensity) + " " + row.variant +
                            " seed=" + std::to_string(seed));
  }
  return s;
}

Table summary_table(const Summary& s) {
  Table t;
  t.comments.push_back(std::string(kCodeVersion) + " summary v1");
  for (const auto& m : s.missing) t.comments.push_back("missing: " + m);
  for (const auto& f : s.failed) t.comments.push_back("failed: " + f);
  t.header = {"family",       "intensity",     "variant",        "seeds",          "source_mean",
              "source_std",   "zero_shot_mean", "zero_shot_std", "adapted_mean",   "adapted_std",
              "delta"};
  for (const auto& r : s.rows)
    t.add_row({r.family, format_real(r.intensity), r.variant, std::to_string(r.seeds), format_real(r.source.mean),
               format_real(r.source.std), format_real(r.zero_shot.mean), format_real(r.zero_shot.std),
               format_real(r.adapted.mean), format_real(r.adapted.std), format_real(r.delta)});
  return t;
}

std::string summary_text(const Summary& s) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-9s %6s %-8s %5s %18s %18s %18s %10s\n", "family", "lambda", "variant", "seeds",
                "source", "zero-shot", "adapted", "delta");
  out << line;
  for (const auto& r : s.rows) {
    auto cell = [](const Aggregate& a) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f +- %.2f", a.mean, a.std);
      return std::string(buf);
    };
    std::snprintf(line, sizeof(line), "%-9s %6.2f %-8s %5d %18s %18s %18s %+10.2f\n", r.family.c_str(), r.intensity,
                  r.variant.c_str(), r.seeds, cell(r.source).c_str(), cell(r.zero_shot).c_str(),
                  cell(r.adapted).c_str(), r.delta);
    out << line;
  }
  for (const auto& m : s.missing) out << "missing: " << m << '\n';
  for (const auto& f : s.failed) out << "failed: " << f << '\n';
  return out.str();
}

}  // namespace iti::harness

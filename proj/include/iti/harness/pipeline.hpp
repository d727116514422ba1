#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iti/adapt/adaptation.hpp"
#include "iti/buffers/collect.hpp"
#include "iti/harness/config.hpp"
#include "iti/harness/evaluate.hpp"

namespace iti::harness {

env::Domain make_source_domain(const ExperimentConfig& c);
env::Domain make_target_domain(const ExperimentConfig& c, env::Family family, double intensity,
                               std::uint64_t seed);

// Resolves experiment.output_dir against $ITI_OUTPUT_ROOT when relative.
std::filesystem::path output_root(const ExperimentConfig& c);

enum class Phase { collect, pretrain_policy, pretrain_dynamics };

// Everything a seed's cells share. Fields past the requested phase stay empty.
struct SeedArtifacts {
  std::uint64_t seed = 0;
  buffers::TransitionBuffer source;
  std::optional<pretrain::PolicyBundle> policy;
  std::optional<buffers::LatentBuffer> source_latents;
  std::optional<pretrain::DynamicsBundle> dynamics;
  harness::Table pretrain_log;
};

// Runs (or resumes from checkpoints under seeds/seed_<s>/) the shared phases
// up to and including `until`.
SeedArtifacts prepare_seed(const ExperimentConfig& c, std::uint64_t seed, Phase until = Phase::pretrain_dynamics);

struct CellKey {
  env::Family family = env::Family::rotation;
  double intensity = 0;
  Variant variant = Variant::full;
  std::uint64_t seed = 0;

  std::filesystem::path relative_dir() const;
};

struct CellOutcome {
  CellKey key;
  bool ok = false;
  bool resumed = false;
  std::string error;
  EvalResult source, zero_shot, adapted;
};

// collect target -> zero-shot eval -> run_adaptation -> post-adaptation eval,
// writing result.tsv, adapt_log.tsv, eval_curve.tsv (and encoder.ckpt).
// A cell whose result.tsv was produced under the same settings is reloaded.
CellOutcome run_cell(const ExperimentConfig& c, const SeedArtifacts& seed, const CellKey& key);

struct PipelineReport {
  std::vector<CellOutcome> cells;
  bool all_ok() const;
};

std::vector<CellKey> cell_grid(const ExperimentConfig& c);

// Every (family, intensity, variant, seed) cell of the config. A failing
// cell records error.txt and the remaining cells still run.
PipelineReport run_pipeline(const ExperimentConfig& c);

harness::Table result_table(const ExperimentConfig& c, const CellOutcome& cell);

pretrain::PolicyBundle with_encoder(const pretrain::PolicyBundle& policy, const pretrain::Encoder& encoder);

}  // namespace iti::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "iti/adapt/objective.hpp"
#include "iti/env/distortion.hpp"
#include "iti/pretrain/bc_train.hpp"
#include "iti/pretrain/dyn_pretrain.hpp"

namespace iti::harness {

// Ablation columns. wo_dyn drops both dynamics terms.
enum class Variant { full, wo_adv, wo_dyn, wo_inv, wo_fwd };

std::string_view to_string(Variant v);
std::string_view display_name(Variant v);
Variant parse_variant(std::string_view name);
adapt::AdaptConfig apply_variant(adapt::AdaptConfig c, Variant v);

struct ExperimentConfig {
  env::MdpSpec mdp;
  std::uint64_t obs_seed = 7;
  env::ObservationLayout layout;
  env::DistortionScales scales;

  std::vector<env::Family> families = {env::Family::rotation};
  std::vector<double> intensities = {1.0};
  std::vector<Variant> variants = {Variant::full};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  Eigen::Index buffer_capacity = 50000;
  int source_episodes = 100;
  int target_episodes = 100;

  pretrain::ArchConfig arch;
  pretrain::BcConfig bc;
  pretrain::DynamicsConfig dynamics;
  adapt::AdaptConfig adapt;

  int eval_episodes = 20;
  int curve_episodes = 10;
  // Adapted encoders are checkpointed per cell unless disabled.
  bool save_cell_checkpoints = true;
  std::string output_dir = "iti-out";

  void validate() const;
};

// Line-oriented `key = value` with dotted section prefixes; '#' starts a
// comment; lists are comma separated; unknown keys are rejected.
void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value);
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string serialize_config(const ExperimentConfig& c);

struct ConfigKey {
  std::string name;
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

// Large-scale values documented next to every desk-scale override in reports.
std::vector<std::string> scale_overrides(const ExperimentConfig& c);

inline constexpr std::string_view kCodeVersion = "iti 0.1.0";
inline constexpr std::string_view kOutputRootEnv = "ITI_OUTPUT_ROOT";

}  // namespace iti::harness

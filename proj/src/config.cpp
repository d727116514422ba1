#include "iti/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "iti/harness/table_io.hpp"

namespace iti::harness {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::wo_adv: return "wo_adv";
    case Variant::wo_dyn: return "wo_dyn";
    case Variant::wo_inv: return "wo_inv";
    case Variant::wo_fwd: return "wo_fwd";
  }
  return "?";
}

std::string_view display_name(Variant v) {
  switch (v) {
    case Variant::full: return "+ITI";
    case Variant::wo_adv: return "+ITI w/o adv.";
    case Variant::wo_dyn: return "+ITI w/o dyn.";
    case Variant::wo_inv: return "+ITI w/o inv.";
    case Variant::wo_fwd: return "+ITI w/o fwd.";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::full, Variant::wo_adv, Variant::wo_dyn, Variant::wo_inv, Variant::wo_fwd})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

adapt::AdaptConfig apply_variant(adapt::AdaptConfig c, Variant v) {
  switch (v) {
    case Variant::full: break;
    case Variant::wo_adv: c.use_adv = false; break;
    case Variant::wo_dyn: c.use_fwd = c.use_inv = false; break;
    case Variant::wo_inv: c.use_inv = false; break;
    case Variant::wo_fwd: c.use_fwd = false; break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  mdp.validate();
  arch.validate();
  bc.validate();
  dynamics.validate();
  adapt.validate();
  if (families.empty()) throw ConfigError("config: at least one distortion family is required");
  if (intensities.empty()) throw ConfigError("config: at least one intensity is required");
  for (double l : intensities)
    if (!(l >= 0 && l <= 1)) throw ConfigError("config: intensities must lie in [0, 1]");
  if (variants.empty()) throw ConfigError("config: at least one variant is required");
  if (seeds.empty()) throw ConfigError("config: at least one seed is required");
  if (buffer_capacity < 1) throw ConfigError("config: buffers.capacity must be >= 1");
  if (source_episodes < 1 || target_episodes < 1) throw ConfigError("config: buffer episode counts must be >= 1");
  if (eval_episodes < 1 || curve_episodes < 1) throw ConfigError("config: episode counts must be >= 1");
  if (layout.lifted_dim < 4 || layout.nuisance_dims < 0) throw ConfigError("config: bad observation layout");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    auto item = trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("not an integer: '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: '" + std::string(s) + "'");
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

struct Entry {
  ConfigKey key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define ITI_REAL(name, field, help)                                                          \
  Entry {                                                                                    \
    {name, help}, [](ExperimentConfig& c, std::string_view v) { c.field = parse_real(v); },  \
        [](const ExperimentConfig& c) { return format_real(c.field); }                       \
  }
#define ITI_INT(name, field, help)                                                                  \
  Entry {                                                                                           \
    {name, help},                                                                                   \
        [](ExperimentConfig& c, std::string_view v) { c.field = parse_int<decltype(c.field)>(v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                           \
  }
#define ITI_BOOL(name, field, help)                                                          \
  Entry {                                                                                    \
    {name, help}, [](ExperimentConfig& c, std::string_view v) { c.field = parse_bool(v); },  \
        [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }    \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      ITI_REAL("env.dt", mdp.dt, "integration step"),
      ITI_REAL("env.friction", mdp.friction, "per-step velocity damping"),
      ITI_REAL("env.goal_x", mdp.goal(0), "goal position x"),
      ITI_REAL("env.goal_y", mdp.goal(1), "goal position y"),
      ITI_INT("env.horizon", mdp.horizon, "steps per episode"),
      ITI_REAL("env.position_cost", mdp.position_cost, "weight of squared goal distance"),
      ITI_REAL("env.action_cost", mdp.action_cost, "weight of squared action"),
      ITI_REAL("env.action_bound", mdp.action_bound, "per-axis action bound"),
      ITI_REAL("env.start_box", mdp.start_box, "half-width of the start box"),
      ITI_REAL("env.expert_kp", mdp.expert_kp, "expert proportional gain"),
      ITI_REAL("env.expert_kd", mdp.expert_kd, "expert derivative gain"),
      ITI_INT("env.obs_seed", obs_seed, "seed of the source observation map"),
      ITI_INT("env.lifted_dim", layout.lifted_dim, "width of the lifted state block"),
      ITI_INT("env.nuisance_dims", layout.nuisance_dims, "number of nuisance slots"),
      Entry{{"distortion.families", "comma-separated: recolor, rotation, nuisance"},
            [](ExperimentConfig& c, std::string_view v) {
              c.families.clear();
              for (auto item : split_list(v)) c.families.push_back(env::parse_family(item));
            },
            [](const ExperimentConfig& c) {
              return join(c.families, [](env::Family f) { return std::string(env::to_string(f)); });
            }},
      Entry{{"distortion.intensities", "comma-separated intensities in [0, 1]"},
            [](ExperimentConfig& c, std::string_view v) {
              c.intensities.clear();
              for (auto item : split_list(v)) c.intensities.push_back(parse_real(item));
            },
            [](const ExperimentConfig& c) { return join(c.intensities, format_real); }},
      ITI_REAL("distortion.recolor_gain", scales.recolor_gain, "recolor gain spread"),
      ITI_REAL("distortion.recolor_shift", scales.recolor_shift, "recolor shift spread"),
      ITI_REAL("distortion.rotation_angle", scales.rotation_angle, "largest rotation angle at intensity 1"),
      ITI_REAL("distortion.nuisance_mix", scales.nuisance_mix, "nuisance mixing scale"),
      Entry{{"experiment.variants", "comma-separated: full, wo_adv, wo_dyn, wo_inv, wo_fwd"},
            [](ExperimentConfig& c, std::string_view v) {
              c.variants.clear();
              for (auto item : split_list(v)) c.variants.push_back(parse_variant(item));
            },
            [](const ExperimentConfig& c) {
              return join(c.variants, [](Variant x) { return std::string(to_string(x)); });
            }},
      Entry{{"experiment.seeds", "comma-separated run seeds"},
            [](ExperimentConfig& c, std::string_view v) {
              c.seeds.clear();
              for (auto item : split_list(v)) c.seeds.push_back(parse_int<std::uint64_t>(item));
            },
            [](const ExperimentConfig& c) {
              return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
            }},
      Entry{{"experiment.output_dir", "output directory (relative paths resolve under $ITI_OUTPUT_ROOT)"},
            [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(v); },
            [](const ExperimentConfig& c) { return c.output_dir; }},
      ITI_BOOL("experiment.save_cell_checkpoints", save_cell_checkpoints, "checkpoint adapted encoders"),
      ITI_INT("eval.episodes", eval_episodes, "episodes per evaluation"),
      ITI_INT("eval.curve_episodes", curve_episodes, "episodes per in-adaptation evaluation"),
      ITI_INT("buffers.capacity", buffer_capacity, "replay buffer capacity"),
      ITI_INT("buffers.source_episodes", source_episodes, "random-policy episodes in the source domain"),
      ITI_INT("buffers.target_episodes", target_episodes, "random-policy episodes in the target domain"),
      ITI_INT("arch.z_dim", arch.z_dim, "latent width"),
      ITI_INT("arch.hidden", arch.hidden, "hidden width of encoder and dynamics networks"),
      ITI_INT("arch.policy_hidden", arch.policy_hidden, "hidden width of the policy head"),
      ITI_INT("arch.disc_hidden", arch.disc_hidden, "hidden width of the discriminator"),
      ITI_INT("arch.inverse_hidden_layers", arch.inverse_hidden_layers, "hidden layers of C_inv"),
      Entry{{"arch.forward_output", "layernorm_tanh or tanh"},
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "layernorm_tanh")
                c.arch.forward_output = pretrain::ForwardOutput::layernorm_tanh;
              else if (v == "tanh")
                c.arch.forward_output = pretrain::ForwardOutput::tanh;
              else
                throw ConfigError("arch.forward_output must be layernorm_tanh or tanh");
            },
            [](const ExperimentConfig& c) {
              return std::string(c.arch.forward_output == pretrain::ForwardOutput::tanh ? "tanh" : "layernorm_tanh");
            }},
      ITI_INT("bc.demo_episodes", bc.demo_episodes, "labeled source episodes"),
      ITI_REAL("bc.expert_noise", bc.expert_noise, "action noise on demonstration episodes"),
      ITI_INT("bc.epochs", bc.epochs, "behavior cloning epochs"),
      ITI_INT("bc.batch_size", bc.batch_size, "behavior cloning batch size"),
      ITI_REAL("bc.learning_rate", bc.learning_rate, "behavior cloning learning rate"),
      ITI_REAL("bc.holdout_fraction", bc.holdout_fraction, "held-out share"),
      ITI_INT("dynamics.steps", dynamics.steps, "dynamics pretraining steps"),
      ITI_INT("dynamics.batch_size", dynamics.batch_size, "dynamics batch size"),
      ITI_REAL("dynamics.forward_lr", dynamics.forward_lr, "forward dynamics learning rate"),
      ITI_REAL("dynamics.inverse_lr", dynamics.inverse_lr, "inverse dynamics learning rate"),
      ITI_BOOL("dynamics.train_forward", dynamics.train_forward, "train C_fwd (false: inverse only)"),
      ITI_BOOL("dynamics.train_inverse", dynamics.train_inverse, "train C_inv"),
      ITI_REAL("dynamics.holdout_fraction", dynamics.holdout_fraction, "held-out share"),
      ITI_INT("dynamics.log_every", dynamics.log_every, "held-out evaluation cadence"),
      ITI_INT("adapt.steps", adapt.steps, "adaptation steps"),
      ITI_INT("adapt.batch_size", adapt.batch_size, "adaptation batch size"),
      ITI_INT("adapt.disc_updates", adapt.disc_updates, "critic updates per encoder update"),
      ITI_REAL("adapt.clip", adapt.clip, "critic clip bound"),
      Entry{{"adapt.clip_mode", "weights or gradients"},
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "weights")
                c.adapt.clip_mode = adapt::ClipMode::weights;
              else if (v == "gradients")
                c.adapt.clip_mode = adapt::ClipMode::gradients;
              else
                throw ConfigError("adapt.clip_mode must be weights or gradients");
            },
            [](const ExperimentConfig& c) {
              return std::string(c.adapt.clip_mode == adapt::ClipMode::weights ? "weights" : "gradients");
            }},
      ITI_REAL("adapt.encoder_lr", adapt.encoder_lr, "encoder learning rate"),
      ITI_REAL("adapt.disc_lr", adapt.disc_lr, "critic learning rate"),
      ITI_REAL("adapt.dynamics_lr", adapt.dynamics_lr, "recorded only: dynamics stay frozen"),
      ITI_REAL("adapt.rms_alpha", adapt.rms_alpha, "RMSProp decay"),
      ITI_REAL("adapt.rms_epsilon", adapt.rms_epsilon, "RMSProp stabilizer"),
      ITI_BOOL("adapt.use_adv", adapt.use_adv, "adversarial term"),
      ITI_BOOL("adapt.use_fwd", adapt.use_fwd, "forward-dynamics term"),
      ITI_BOOL("adapt.use_inv", adapt.use_inv, "inverse-dynamics term"),
      ITI_REAL("adapt.adv_weight", adapt.adv_weight, "weight of J_adv"),
      ITI_REAL("adapt.dyn_weight", adapt.dyn_weight, "weight of J_dyn"),
      ITI_INT("adapt.log_every", adapt.log_every, "adaptation log cadence"),
      ITI_INT("adapt.eval_every", adapt.eval_every, "evaluation-curve cadence"),
      ITI_REAL("adapt.divergence_bound", adapt.divergence_bound, "abort when |J_adv| exceeds this"),
      ITI_INT("adapt.early_stop_patience", adapt.early_stop_patience,
              "stop after this many log records without improvement (0: off)"),
      ITI_REAL("adapt.early_stop_tolerance", adapt.early_stop_tolerance, "relative improvement that resets patience"),
  };
  return table;
}

#undef ITI_REAL
#undef ITI_INT
#undef ITI_BOOL

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  for (const auto& e : entries()) {
    if (e.key.name == key) {
      try {
        e.set(c, trim(value));
      } catch (const ConfigError& err) {
        throw ConfigError(std::string(key) + ": " + err.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig c) {
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    if (end == text.size()) break;
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config(read_text_file(path), std::move(base));
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& e : entries()) out += e.key.name + " = " + e.get(c) + "\n";
  return out;
}

std::vector<std::string> scale_overrides(const ExperimentConfig& c) {
  std::vector<std::string> out;
  auto note = [&out](bool differs, const std::string& what) {
    if (differs) out.push_back(what);
  };
  note(c.dynamics.steps != 100000, "dynamics.steps = " + std::to_string(c.dynamics.steps) + " (large scale: 100000)");
  note(c.adapt.batch_size != 256, "adapt.batch_size = " + std::to_string(c.adapt.batch_size) + " (large scale: 256)");
  note(c.dynamics.batch_size != 256,
       "dynamics.batch_size = " + std::to_string(c.dynamics.batch_size) + " (large scale: 256)");
  note(c.buffer_capacity != 1000000,
       "buffers.capacity = " + std::to_string(c.buffer_capacity) + " (large scale: 1000000)");
  note(c.arch.z_dim != 100, "arch.z_dim = " + std::to_string(c.arch.z_dim) + " (large scale: 100)");
  note(c.arch.hidden != 1024, "arch.hidden = " + std::to_string(c.arch.hidden) + " (large scale: 1024)");
  note(c.arch.disc_hidden != 100,
       "arch.disc_hidden = " + std::to_string(c.arch.disc_hidden) + " (large scale: 100)");
  note(c.arch.inverse_hidden_layers != 4,
       "arch.inverse_hidden_layers = " + std::to_string(c.arch.inverse_hidden_layers) + " (large scale: 4)");
  note(c.adapt.encoder_lr != 1e-4, "adapt.encoder_lr = " + format_real(c.adapt.encoder_lr) + " (large scale: 1e-4)");
  note(c.adapt.disc_lr != 1e-4, "adapt.disc_lr = " + format_real(c.adapt.disc_lr) + " (large scale: 1e-4)");
  note(c.adapt.disc_updates != 5,
       "adapt.disc_updates = " + std::to_string(c.adapt.disc_updates) + " (large scale: 5)");
  out.push_back("policy pretraining: behavior cloning from a PD expert (large scale: RL-pretrained pixel policies)");
  return out;
}

}  // namespace iti::harness

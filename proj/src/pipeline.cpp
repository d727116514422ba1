#include "iti/harness/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>

#include "iti/harness/summary.hpp"
#include "iti/nn/checkpoint.hpp"

namespace iti::harness {

namespace fs = std::filesystem;

namespace {

std::uint64_t family_tag(env::Family f) { return static_cast<std::uint64_t>(f); }

std::string seed_stamp(const ExperimentConfig& c) {
  // The shared phases depend on these keys only.
  std::string stamp;
  const auto text = serialize_config(c);
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end - start);
    for (const char* prefix : {"env.", "buffers.", "arch.", "bc.", "dynamics."})
      if (line.rfind(prefix, 0) == 0) stamp += line + "\n";
    start = end + 1;
  }
  return stamp;
}

std::string cell_stamp(const ExperimentConfig& c) {
  // A finished cell is reusable under any grid that shares these settings.
  std::string stamp;
  const auto text = serialize_config(c);
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.rfind("experiment.", 0) == 0 && line.rfind("experiment.save_cell_checkpoints", 0) != 0) continue;
    if (line.rfind("distortion.families", 0) == 0 || line.rfind("distortion.intensities", 0) == 0) continue;
    stamp += line + "\n";
  }
  return stamp;
}

std::string now_string() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void append_meta(const fs::path& root, const std::string& line) {
  fs::create_directories(root);
  std::string existing;
  if (fs::exists(root / "meta.txt")) existing = read_text_file(root / "meta.txt");
  write_text_file(root / "meta.txt", existing + now_string() + " " + line + "\n");
}

}  // namespace

env::Domain make_source_domain(const ExperimentConfig& c) {
  env::Domain d;
  d.mdp = c.mdp;
  d.model = env::make_observation_model(c.obs_seed, c.layout);
  return d;
}

env::Domain make_target_domain(const ExperimentConfig& c, env::Family family, double intensity,
                               std::uint64_t seed) {
  env::Domain d = make_source_domain(c);
  const env::DistortionSpec spec{family, intensity, derive_seed(seed, "distortion", family_tag(family))};
  d.distortion = env::sample_distortion(spec, c.layout, c.scales);
  return d;
}

fs::path output_root(const ExperimentConfig& c) {
  fs::path p(c.output_dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv(std::string(kOutputRootEnv).c_str()); root && *root) p = fs::path(root) / p;
  }
  return p;
}

pretrain::PolicyBundle with_encoder(const pretrain::PolicyBundle& policy, const pretrain::Encoder& encoder) {
  pretrain::PolicyBundle p = policy;
  p.encoder = encoder;
  return p;
}

SeedArtifacts prepare_seed(const ExperimentConfig& c, std::uint64_t seed, Phase until) {
  c.validate();
  const fs::path dir = output_root(c) / "seeds" / ("seed_" + std::to_string(seed));
  fs::create_directories(dir);
  const auto stamp = seed_stamp(c);
  const fs::path stamp_path = dir / "pretrain.cfg";
  if (fs::exists(stamp_path)) {
    if (read_text_file(stamp_path) != stamp)
      throw ConfigError("checkpoints in " + dir.string() +
                        " were produced with different pretraining settings; use a fresh output directory");
  } else {
    write_text_file(stamp_path, stamp);
  }

  SeedArtifacts a;
  a.seed = seed;
  a.pretrain_log.header = {"quantity", "value"};
  const env::Domain source = make_source_domain(c);

  const fs::path buf_path = dir / "source_buffer.ckpt";
  if (fs::exists(buf_path)) {
    a.source = buffers::TransitionBuffer::load_from(nn::Checkpoint::load(buf_path), "source");
  } else {
    a.source = buffers::collect_random(source, c.source_episodes, derive_seed(seed, "source-buffer"),
                                       c.buffer_capacity);
    nn::Checkpoint ck;
    a.source.save_to(ck, "source");
    ck.save(buf_path);
  }
  if (until == Phase::collect) return a;

  const fs::path policy_path = dir / "policy.ckpt";
  if (fs::exists(policy_path)) {
    a.policy = pretrain::get_policy(nn::Checkpoint::load(policy_path));
  } else {
    const auto normalizer = pretrain::Normalizer::fit(a.source.all().first);
    Rng init(derive_seed(seed, "policy-init"));
    auto untrained = pretrain::make_policy(source.obs_dim(), env::Domain::action_dim(), c.mdp.action_bound,
                                           normalizer, c.arch, init);
    const auto data = buffers::collect_labeled(source, c.bc.demo_episodes, derive_seed(seed, "bc-data"),
                                               c.bc.expert_noise);
    const auto mdp = c.mdp;
    auto bc = pretrain::bc_train(
        data, [&mdp](const Eigen::MatrixXd& s) { return env::expert_actions(s, mdp); }, std::move(untrained), c.bc,
        derive_seed(seed, "bc"));
    a.policy = std::move(bc.policy);
    nn::Checkpoint ck;
    pretrain::put_policy(ck, *a.policy);
    ck.save(policy_path);
    Table log;
    log.header = {"quantity", "value"};
    log.add_row({"bc.initial_heldout_loss", format_real(bc.initial_heldout_loss)});
    log.add_row({"bc.final_heldout_loss", format_real(bc.heldout_loss)});
    for (std::size_t e = 0; e < bc.epoch_losses.size(); ++e)
      log.add_row({"bc.epoch_" + std::to_string(e) + "_loss", format_real(bc.epoch_losses[e])});
    write_text_file(dir / "bc_log.tsv", log.to_string());
  }
  if (until == Phase::pretrain_policy) return a;

  const fs::path lat_path = dir / "source_latents.ckpt";
  const fs::path dyn_path = dir / "dynamics.ckpt";
  if (fs::exists(lat_path)) {
    a.source_latents = buffers::LatentBuffer::load_from(nn::Checkpoint::load(lat_path), "source_latents");
  } else {
    a.source_latents = buffers::encode_source_buffer(a.source, a.policy->encoder);
    nn::Checkpoint ck;
    a.source_latents->save_to(ck, "source_latents");
    ck.save(lat_path);
  }
  if (fs::exists(dyn_path)) {
    a.dynamics = pretrain::get_dynamics(nn::Checkpoint::load(dyn_path));
  } else {
    Rng init(derive_seed(seed, "dynamics-init"));
    auto untrained = pretrain::make_dynamics(c.arch.z_dim, env::Domain::action_dim(), c.arch, init);
    auto dyn = pretrain::dyn_pretrain(*a.source_latents, std::move(untrained), c.dynamics, derive_seed(seed, "dyn"));
    a.dynamics = std::move(dyn.dynamics);
    nn::Checkpoint ck;
    pretrain::put_dynamics(ck, *a.dynamics);
    ck.save(dyn_path);
    Table log;
    log.header = {"step", "heldout_total", "heldout_fwd", "heldout_inv"};
    for (const auto& [step, l] : dyn.curve)
      log.add_row({std::to_string(step), format_real(l.total), format_real(l.forward), format_real(l.inverse)});
    write_text_file(dir / "dynamics_log.tsv", log.to_string());
  }
  return a;
}

fs::path CellKey::relative_dir() const {
  return fs::path("cells") / std::string(env::to_string(family)) / ("lambda_" + format_real(intensity)) /
         std::string(to_string(variant)) / ("seed_" + std::to_string(seed));
}

bool PipelineReport::all_ok() const {
  for (const auto& c : cells)
    if (!c.ok) return false;
  return true;
}

std::vector<CellKey> cell_grid(const ExperimentConfig& c) {
  std::vector<CellKey> out;
  for (auto seed : c.seeds)
    for (auto f : c.families)
      for (double l : c.intensities)
        for (auto v : c.variants) out.push_back({f, l, v, seed});
  return out;
}

Table result_table(const ExperimentConfig& c, const CellOutcome& cell) {
  Table t;
  t.comments.push_back(std::string(kCodeVersion) + " result v1");
  for (const auto& line : scale_overrides(c)) t.comments.push_back("override: " + line);
  const auto cfg = serialize_config(c);
  std::size_t start = 0;
  while (start < cfg.size()) {
    const auto end = cfg.find('\n', start);
    t.comments.push_back("config: " + cfg.substr(start, end - start));
    start = end + 1;
  }
  t.header = {"family", "intensity", "variant", "seed", "phase", "episodes", "mean_return", "std_return"};
  for (const auto* r : {&cell.source, &cell.zero_shot, &cell.adapted})
    t.add_row({std::string(env::to_string(cell.key.family)), format_real(cell.key.intensity),
               std::string(to_string(cell.key.variant)), std::to_string(cell.key.seed), r->phase,
               std::to_string(r->episodes), format_real(r->mean_return), format_real(r->std_return)});
  return t;
}

CellOutcome run_cell(const ExperimentConfig& c, const SeedArtifacts& seed, const CellKey& key) {
  CellOutcome out;
  out.key = key;
  const fs::path dir = output_root(c) / key.relative_dir();
  try {
    if (!seed.policy || !seed.dynamics || !seed.source_latents)
      throw UsageError("run_cell: seed artifacts are incomplete");
    fs::create_directories(dir);
    fs::remove(dir / "error.txt");
    const auto stamp = cell_stamp(c);
    if (fs::exists(dir / "result.tsv") && fs::exists(dir / "cell.cfg") && read_text_file(dir / "cell.cfg") == stamp) {
      const auto r = load_result(dir / "result.tsv");
      out.source = r.source;
      out.zero_shot = r.zero_shot;
      out.adapted = r.adapted;
      out.ok = out.resumed = true;
      return out;
    }
    fs::remove(dir / "result.tsv");
    const auto& policy = *seed.policy;
    const env::Domain source = make_source_domain(c);
    const env::Domain target = make_target_domain(c, key.family, key.intensity, key.seed);
    const auto eval_seed = derive_seed(key.seed, "eval");

    out.source = evaluate(policy, source, c.eval_episodes, eval_seed, "source");
    out.zero_shot = evaluate(policy, target, c.eval_episodes, eval_seed, "zero-shot");

    const auto target_seed = derive_seed(key.seed, "target-buffer",
                                         family_tag(key.family) * 1000003u + std::uint64_t(key.intensity * 1e6));
    const auto target_buffer = buffers::collect_random(target, c.target_episodes, target_seed, c.buffer_capacity);

    Rng disc_init(derive_seed(key.seed, "disc-init"));
    auto disc = adapt::make_discriminator(c.arch, disc_init);
    const auto cfg = apply_variant(c.adapt, key.variant);

    Table curve;
    curve.header = {"step", "episodes", "mean_return", "std_return"};
    const auto curve_seed = derive_seed(key.seed, "curve-eval");
    const std::uint64_t frozen_before =
        nn::parameter_hash(policy.head.parameters()) ^ nn::parameter_hash(seed.dynamics->forward.parameters()) ^
        nn::parameter_hash(seed.dynamics->inverse.parameters());

    auto result = adapt::run_adaptation(cfg, *seed.source_latents, target_buffer, policy.encoder, std::move(disc),
                                        *seed.dynamics, derive_seed(key.seed, "adapt"),
                                        [&](int step, const pretrain::Encoder& enc) {
                                          const auto r = evaluate(with_encoder(policy, enc), target,
                                                                  c.curve_episodes, curve_seed);
                                          curve.add_row({std::to_string(step), std::to_string(r.episodes),
                                                         format_real(r.mean_return), format_real(r.std_return)});
                                        });
    const std::uint64_t frozen_after =
        nn::parameter_hash(policy.head.parameters()) ^ nn::parameter_hash(seed.dynamics->forward.parameters()) ^
        nn::parameter_hash(seed.dynamics->inverse.parameters());
    if (frozen_before != frozen_after) throw TrainingError("frozen components changed during adaptation");

    const auto adapted_policy = with_encoder(policy, result.encoder);
    out.adapted = evaluate(adapted_policy, target, c.eval_episodes, eval_seed, std::string(display_name(key.variant)));

    write_text_file(dir / "adapt_log.tsv", adapt::adaptation_log_table(result.log).to_string());
    write_text_file(dir / "eval_curve.tsv", curve.to_string());
    if (c.save_cell_checkpoints) {
      nn::Checkpoint ck;
      pretrain::put_encoder(ck, "adapted.encoder", result.encoder);
      ck.save(dir / "encoder.ckpt");
    }
    out.ok = true;
    write_text_file(dir / "result.tsv", result_table(c, out).to_string());
    write_text_file(dir / "cell.cfg", stamp);
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    try {
      fs::create_directories(dir);
      write_text_file(dir / "error.txt", out.error + "\n");
    } catch (const std::exception&) {
      out.error += " (error.txt could not be written)";
    }
  }
  return out;
}

PipelineReport run_pipeline(const ExperimentConfig& c) {
  c.validate();
  const fs::path root = output_root(c);
  fs::create_directories(root);
  write_text_file(root / "config.cfg", "# " + std::string(kCodeVersion) + "\n" + serialize_config(c));
  append_meta(root, "pipeline start");
  PipelineReport report;
  for (auto seed : c.seeds) {
    std::optional<SeedArtifacts> artifacts;
    std::string seed_error;
    try {
      artifacts = prepare_seed(c, seed);
    } catch (const std::exception& e) {
      seed_error = std::string("pretraining failed: ") + e.what();
    }
    for (auto f : c.families)
      for (double l : c.intensities)
        for (auto v : c.variants) {
          const CellKey key{f, l, v, seed};
          if (artifacts) {
            report.cells.push_back(run_cell(c, *artifacts, key));
          } else {
            CellOutcome o;
            o.key = key;
            o.error = seed_error;
            const auto dir = root / key.relative_dir();
            fs::create_directories(dir);
            write_text_file(dir / "error.txt", seed_error + "\n");
            report.cells.push_back(std::move(o));
          }
        }
  }
  append_meta(root, "pipeline end");
  return report;
}

}  // namespace iti::harness

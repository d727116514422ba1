// iti: command-line front end for the adaptation pipeline.
//
//   iti [--config FILE] [--<config.key> VALUE ...] <subcommand> [options]
//
// Every config key is also a flag; flags override the config file, which
// overrides the subcommand's defaults.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "iti/harness/pipeline.hpp"
#include "iti/harness/summary.hpp"
#include "iti/nn/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace iti;
using namespace iti::harness;

namespace {

struct Settings {
  std::string config_path;
  std::map<std::string, std::string> flags;
};

ExperimentConfig build_config(const Settings& s, const ExperimentConfig& defaults) {
  ExperimentConfig c = defaults;
  if (!s.config_path.empty()) c = load_config(s.config_path, c);
  for (const auto& [k, v] : s.flags) apply_setting(c, k, v);
  c.validate();
  return c;
}

ExperimentConfig sweep_defaults() {
  ExperimentConfig c;
  c.families = {env::Family::recolor, env::Family::rotation, env::Family::nuisance};
  c.intensities = {0.0, 0.25, 0.5, 0.75, 1.0};
  c.variants = {Variant::full};
  return c;
}

ExperimentConfig ablate_defaults() {
  ExperimentConfig c;
  c.families = {env::Family::recolor, env::Family::rotation, env::Family::nuisance};
  c.intensities = {1.0};
  c.variants = {Variant::full, Variant::wo_adv, Variant::wo_dyn, Variant::wo_inv, Variant::wo_fwd};
  return c;
}

int report_pipeline(const ExperimentConfig& c, const PipelineReport& report) {
  int failed = 0;
  for (const auto& cell : report.cells) {
    if (cell.ok) {
      std::cout << cell.key.relative_dir().generic_string() << "\tsource " << format_real(cell.source.mean_return)
                << "\tzero-shot " << format_real(cell.zero_shot.mean_return) << "\t" << cell.adapted.phase << " "
                << format_real(cell.adapted.mean_return) << "\n";
    } else {
      ++failed;
      std::cerr << cell.key.relative_dir().generic_string() << "\tFAILED: " << cell.error << "\n";
    }
  }
  const auto root = output_root(c);
  std::vector<std::string> failures;
  auto summary = summarize(load_results(root / "cells", &failures));
  summary.failed = failures;
  write_text_file(root / "summary.tsv", summary_table(summary).to_string());
  write_text_file(root / "summary.txt", summary_text(summary));
  std::cout << summary_text(summary);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time encoder adaptation by latent distribution matching on point-mass control"};
  app.require_subcommand(1);
  app.fallthrough();

  Settings settings;
  app.add_option("-c,--config", settings.config_path, "key = value config file")->check(CLI::ExistingFile);
  std::map<std::string, std::string> raw;
  for (const auto& key : config_keys()) {
    raw[key.name];
    app.add_option("--" + key.name, raw[key.name], key.help);
  }

  auto* collect = app.add_subcommand("collect", "collect random-policy buffers (source, and target per family/lambda)");
  std::string dump_path;
  bool source_only = false;
  collect->add_option("--dump", dump_path, "write a source trajectory dump for the first seed");
  collect->add_flag("--source-only", source_only, "skip target buffers");

  auto* pre_policy = app.add_subcommand("pretrain-policy", "behavior-clone the encoder and policy head per seed");
  auto* pre_dyn = app.add_subcommand("pretrain-dynamics", "encode the source buffer and pretrain C_fwd / C_inv per seed");
  auto* adapt_cmd = app.add_subcommand("adapt", "run adaptation for every configured cell");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy checkpoint in the configured domains");
  std::string policy_path, encoder_path;
  int episodes = 0;
  eval_cmd->add_option("--policy", policy_path, "policy checkpoint (default: the seed's pretrained policy)");
  eval_cmd->add_option("--encoder", encoder_path, "adapted encoder checkpoint to swap in");
  eval_cmd->add_option("--episodes", episodes, "episodes (default: eval.episodes)");

  auto* sweep = app.add_subcommand("sweep", "intensity sweep: all families x lambda grid, full method");
  auto* ablate = app.add_subcommand("ablate", "ablation matrix at lambda = 1 over all families");

  auto* summ = app.add_subcommand("summarize", "aggregate result files into summary tables");
  std::string summary_dir;
  summ->add_option("--dir", summary_dir, "directory to scan (default: the output root)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  for (const auto& [k, v] : raw)
    if (app.count("--" + k)) settings.flags[k] = v;

  try {
    if (*sweep) {
      const auto c = build_config(settings, sweep_defaults());
      return report_pipeline(c, run_pipeline(c));
    }
    if (*ablate) {
      const auto c = build_config(settings, ablate_defaults());
      return report_pipeline(c, run_pipeline(c));
    }
    const auto c = build_config(settings, ExperimentConfig{});
    const auto root = output_root(c);

    if (*collect) {
      for (auto seed : c.seeds) {
        const auto a = prepare_seed(c, seed, Phase::collect);
        std::cout << "seed " << seed << ": source buffer " << a.source.size() << " transitions\n";
        if (!source_only) {
          for (auto f : c.families)
            for (double l : c.intensities) {
              const auto target = make_target_domain(c, f, l, seed);
              const auto buf = buffers::collect_random(target, c.target_episodes,
                                                       derive_seed(seed, "target-collect"), c.buffer_capacity);
              const auto dir = root / "targets" / std::string(env::to_string(f)) / ("lambda_" + format_real(l)) /
                               ("seed_" + std::to_string(seed));
              fs::create_directories(dir);
              nn::Checkpoint ck;
              buf.save_to(ck, "target");
              ck.save(dir / "target_buffer.ckpt");
              std::cout << "  " << env::to_string(f) << " lambda=" << format_real(l) << ": " << buf.size()
                        << " transitions\n";
            }
        }
      }
      if (!dump_path.empty()) {
        std::vector<env::DumpRecord> records;
        buffers::collect_random(make_source_domain(c), c.source_episodes, derive_seed(c.seeds.front(), "source-buffer"),
                                c.buffer_capacity, &records);
        std::ofstream out(dump_path);
        env::write_trajectory_dump(out, records);
      }
      return 0;
    }
    if (*pre_policy || *pre_dyn) {
      for (auto seed : c.seeds) {
        const auto a = prepare_seed(c, seed, *pre_dyn ? Phase::pretrain_dynamics : Phase::pretrain_policy);
        const auto r = evaluate(*a.policy, make_source_domain(c), c.eval_episodes, derive_seed(seed, "eval"), "source");
        std::cout << "seed " << seed << ": source return " << format_real(r.mean_return) << " +- "
                  << format_real(r.std_return) << "\n";
      }
      return 0;
    }
    if (*adapt_cmd) {
      return report_pipeline(c, run_pipeline(c));
    }
    if (*eval_cmd) {
      const int n = episodes > 0 ? episodes : c.eval_episodes;
      std::cout << "seed\tfamily\tintensity\tepisodes\tmean_return\tstd_return\n";
      for (auto seed : c.seeds) {
        const fs::path p = policy_path.empty() ? root / "seeds" / ("seed_" + std::to_string(seed)) / "policy.ckpt"
                                               : fs::path(policy_path);
        auto policy = pretrain::get_policy(nn::Checkpoint::load(p));
        if (!encoder_path.empty())
          policy = with_encoder(policy, pretrain::get_encoder(nn::Checkpoint::load(encoder_path), "adapted.encoder"));
        for (auto f : c.families)
          for (double l : c.intensities) {
            const auto r = evaluate(policy, make_target_domain(c, f, l, seed), n, derive_seed(seed, "eval"));
            std::cout << seed << '\t' << env::to_string(f) << '\t' << format_real(l) << '\t' << r.episodes << '\t'
                      << format_real(r.mean_return) << '\t' << format_real(r.std_return) << '\n';
          }
      }
      return 0;
    }
    if (*summ) {
      const fs::path dir = summary_dir.empty() ? root : fs::path(summary_dir);
      std::vector<std::string> failures;
      auto s = summarize(load_results(dir, &failures));
      s.failed = failures;
      write_text_file(dir / "summary.tsv", summary_table(s).to_string());
      write_text_file(dir / "summary.txt", summary_text(s));
      std::cout << summary_text(s);
      return s.failed.empty() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

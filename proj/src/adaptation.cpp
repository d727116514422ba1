#include "iti/adapt/adaptation.hpp"

#include <cmath>
#include <limits>

#include "iti/nn/clip.hpp"

namespace iti::adapt {

harness::Table adaptation_log_table(const std::vector<AdaptLogRecord>& log) {
  harness::Table t;
  t.header = {"step", "j_adv", "critic_j_adv", "j_dyn", "j_fwd", "j_inv"};
  using harness::format_real;
  for (const auto& r : log)
    t.add_row({std::to_string(r.step), format_real(r.j_adv), format_real(r.critic_j_adv), format_real(r.j_dyn),
               format_real(r.j_fwd), format_real(r.j_inv)});
  return t;
}

AdaptationResult run_adaptation(const AdaptConfig& config, const buffers::LatentBuffer& source_latents,
                                const buffers::TransitionBuffer& target, Encoder encoder, Mlp disc,
                                const DynamicsBundle& dynamics, std::uint64_t seed, const EvalHook& on_eval,
                                const AdaptationProbe& probe) {
  config.validate();
  if (source_latents.empty() || target.empty()) throw UsageError("run_adaptation: buffers must be pre-filled");
  if (source_latents.first_dim() != encoder.output_dim())
    throw ConfigError("run_adaptation: source latent width does not match the encoder");
  if (target.first_dim() != encoder.input_dim())
    throw ConfigError("run_adaptation: target observation width does not match the encoder");
  if (disc.input_dim() != encoder.output_dim() || disc.output_dim() != 1)
    throw ConfigError("run_adaptation: discriminator must map latents to a scalar");

  const nn::RmsPropOptions<double> base{0.0, config.rms_alpha, config.rms_epsilon};
  auto enc_opts = base;
  enc_opts.learning_rate = config.encoder_lr;
  auto disc_opts = base;
  disc_opts.learning_rate = config.disc_lr;
  nn::RmsProp<double> enc_opt(enc_opts), disc_opt(disc_opts);

  // Bring an out-of-range initialization inside the clip box before training.
  if (config.clip_mode == ClipMode::weights) nn::clip_params(disc.parameters(), config.clip);

  Rng rng(derive_seed(seed, "adapt-batches"));
  AdaptationResult result;
  Encoder last_good = encoder;
  if (on_eval) on_eval(0, encoder);
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int step = 1; step <= config.steps; ++step) {
    double critic_j = 0;
    try {
      for (int k = 0; k < config.disc_updates; ++k) {
        const auto src = source_latents.sample_batch(config.batch_size, rng);
        const auto tgt = target.sample_batch(config.batch_size, rng);
        critic_j = discriminator_update(config, src.first, tgt.first, disc, encoder, disc_opt);
        if (probe.after_critic_update) probe.after_critic_update(step, k, disc);
      }
      const auto src = source_latents.sample_batch(config.batch_size, rng);
      const auto tgt = target.sample_batch(config.batch_size, rng);
      if (probe.before_encoder_update) probe.before_encoder_update(step, src.first, tgt, encoder, disc);
      const auto obj = encoder_update(config, src.first, tgt, encoder, disc, dynamics, enc_opt);
      if (!(std::abs(obj.j_adv) <= config.divergence_bound) || !(std::abs(critic_j) <= config.divergence_bound))
        throw TrainingError("J_adv left the divergence bound");
      if (step % config.log_every == 0 || step == config.steps) {
        result.log.push_back({step, obj.j_adv, critic_j, obj.j_dyn.total, obj.j_dyn.forward, obj.j_dyn.inverse});
        if (config.early_stop_patience > 0) {
          if (!std::isfinite(best) || obj.total < best - config.early_stop_tolerance * std::abs(best)) {
            best = obj.total;
            stale = 0;
          } else if (++stale >= config.early_stop_patience) {
            result.stopped_early = true;
          }
        }
      }
    } catch (const TrainingError& e) {
      throw AdaptationDiverged(std::string("adaptation aborted at step ") + std::to_string(step) + ": " + e.what(),
                               step, std::move(last_good));
    }
    last_good = encoder;
    result.steps_run = step;
    if (on_eval && (step % config.eval_every == 0 || step == config.steps || result.stopped_early))
      on_eval(step, encoder);
    if (result.stopped_early) break;
  }
  result.encoder = std::move(encoder);
  result.discriminator = std::move(disc);
  return result;
}

}  // namespace iti::adapt

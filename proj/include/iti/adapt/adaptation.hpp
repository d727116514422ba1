#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iti/adapt/objective.hpp"
#include "iti/harness/table_io.hpp"

namespace iti::adapt {

// One adaptation-log row. Deliberately carries no reward-derived values.
struct AdaptLogRecord {
  int step = 0;
  double j_adv = 0;
  double critic_j_adv = 0;  // J_adv seen by the last critic update
  double j_dyn = 0;
  double j_fwd = 0;
  double j_inv = 0;
};

harness::Table adaptation_log_table(const std::vector<AdaptLogRecord>& log);

struct AdaptationResult {
  Encoder encoder;
  Mlp discriminator;
  std::vector<AdaptLogRecord> log;
  int steps_run = 0;
  bool stopped_early = false;
};

// Raised on a non-finite or runaway loss; keeps the last encoder that
// completed a step cleanly.
class AdaptationDiverged : public TrainingError {
 public:
  AdaptationDiverged(const std::string& what, int step, Encoder last_good)
      : TrainingError(what), step_(step), last_good_(std::move(last_good)) {}
  int step() const { return step_; }
  const Encoder& last_good() const { return last_good_; }

 private:
  int step_;
  Encoder last_good_;
};

// Called every eval_every steps (and after the final step) with a snapshot
// of the encoder; the harness uses it for evaluation curves.
using EvalHook = std::function<void(int step, const Encoder&)>;

// Read-only observation points inside the loop, for audits.
struct AdaptationProbe {
  std::function<void(int step, int update, const Mlp& disc)> after_critic_update;
  std::function<void(int step, const Eigen::MatrixXd& z_src, const buffers::TransitionBatch& target,
                     const Encoder& encoder, const Mlp& disc)>
      before_encoder_update;
};

// For each step: disc_updates critic updates on fresh batches, then one
// encoder update. Only the encoder network and the critic change; the
// dynamics networks and the source latent buffer are read-only.
AdaptationResult run_adaptation(const AdaptConfig& config, const buffers::LatentBuffer& source_latents,
                                const buffers::TransitionBuffer& target, Encoder encoder, Mlp discriminator,
                                const DynamicsBundle& dynamics, std::uint64_t seed,
                                const EvalHook& on_eval = {}, const AdaptationProbe& probe = {});

}  // namespace iti::adapt

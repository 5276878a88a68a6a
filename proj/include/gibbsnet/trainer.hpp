#pragma once

#include <functional>
#include <map>

#include "gibbsnet/chains.hpp"
#include "gibbsnet/data.hpp"
#include "gibbsnet/losses.hpp"

// The adversarial training loop. Every stochastic decision is drawn from a
// stream derived from (seed, iteration, purpose), so a run is reproducible
// bit-for-bit and resuming from a checkpoint continues the exact same
// trajectory.

namespace gibbsnet {

struct TrainConfig {
  int n_steps = 3;  // unclamped chain length
  Eigen::Index dim_x = 2;
  Eigen::Index dim_z = 2;
  std::vector<Eigen::Index> enc_hidden{256, 256, 256};
  std::vector<Eigen::Index> dec_hidden{256, 256, 256};
  std::vector<Eigen::Index> disc_hidden{256, 256, 256};
  LossConfig loss;
  double lr = 1e-4;
  double lr_disc = 0.0;  // 0: use lr for the discriminator too
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  Eigen::Index batch = 128;
  long total_iterations = 1000;
  long eval_every = 0;  // 0: no periodic metric snapshots
  std::uint64_t seed = 0;
  bool decoder_stochastic = true;
  double log_var_min = -8.0;  // Gaussian-head noise bounds for enc and dec
  double log_var_max = 4.0;
  bool label_modeling = false;
  int n_labels = 0;
  int iw_label_samples = 4;    // M for the importance-weighted label loss
  bool shared_batches = true;  // one clamped batch for both phases

  void validate() const;
  std::vector<Eigen::Index> enc_sizes() const;
  std::vector<Eigen::Index> dec_sizes() const;
  std::vector<Eigen::Index> disc_sizes() const;
};

struct TrainRecord {
  long iteration = 0;
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  std::map<std::string, double> metrics;
  double wall_time_s = 0.0;
};

struct Nets {
  NetParams enc, dec, disc;
};

struct TrainerState {
  Nets nets;
  AdamState opt_enc, opt_dec, opt_disc;
  long iteration = 0;
};

struct TrainingDivergedError : NumericError {
  long iteration;
  TrainingDivergedError(const std::string& what, long iter)
      : NumericError(what), iteration(iter) {}
};

TrainerState init_trainer(const TrainConfig& cfg);

// One discriminator update on fresh chain samples; only disc params move.
double disc_update(TrainerState& st, const Matrix& x_batch, const std::vector<int>& y_batch,
                   const TrainConfig& cfg, int substep);
// One generator update through the live final step plus the clamped-side
// encoder signal; only enc and dec params move.
double gen_update(TrainerState& st, const Matrix& x_batch, const std::vector<int>& y_batch,
                  const TrainConfig& cfg);

// Full iteration: disc_steps_per_gen_step discriminator updates, then one
// generator update. Advances st.iteration.
TrainRecord train_step(TrainerState& st, const Dataset& data, const TrainConfig& cfg);

// Standalone trainer for the n_steps = 1 special case, written directly
// against the prior-and-decoder graph. Used to cross-check that the chain
// trainer reduces to it exactly.
TrainRecord ali_train_step(TrainerState& st, const Dataset& data, const TrainConfig& cfg);

using RecordSink = std::function<void(const TrainerState&, const TrainRecord&)>;

struct TrainResult {
  std::vector<TrainRecord> records;
};

// Runs from st.iteration to cfg.total_iterations. Throws
// TrainingDivergedError on a non-finite loss.
TrainResult train(TrainerState& st, const Dataset& data, const TrainConfig& cfg,
                  const RecordSink& sink = {});
std::pair<TrainerState, TrainResult> train(const TrainConfig& cfg, const Dataset& data,
                                           const RecordSink& sink = {});

}  // namespace gibbsnet

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gibbsnet/nets.hpp"

// The two Markov chains of the training procedure. The unclamped chain runs
// z ~ N(0,I) followed by alternating p(x|z) and q(z|x); everything before
// the final step is cut from the tape, so discriminator gradients travel
// through a single step of the iterative procedure. At n_steps = 1 the graph
// degenerates to the plain prior-and-decoder generator.

namespace gibbsnet {

struct ChainState {
  Matrix x, z;
  int step = 0;
  bool live_gradient = false;
};

enum class Source { clamped, unclamped };

struct JointBatch {
  Tensor x, z;
  std::optional<Tensor> y_features;  // label features fed to the discriminator
  std::vector<int> y_hard;           // hard-sampled labels, for evaluation
  Source source = Source::unclamped;
};

struct ChainOptions {
  bool decoder_stochastic = true;
  bool label_modeling = false;
  bool zero_noise = false;  // diagnostics: all eps forced to zero, rng untouched
  int record_every = 1;     // trajectory thinning; the final step is always kept
};

struct UnclampedChain {
  JointBatch pair;
  std::vector<ChainState> trajectory;
  std::optional<Tensor> label_logits;  // live logits behind pair.y_features
  Matrix final_eps_z, final_eps_x;     // noise consumed by the live step
};

UnclampedChain unclamped_chain(const NetVars& enc, const NetVars& dec, int n_steps,
                               Eigen::Index batch, RandomStream& rng,
                               const ChainOptions& opt = {});

// Single ancestral step of the data-clamped chain; gradient flows into the
// encoder through z.
JointBatch clamped_step(const NetVars& enc, const Matrix& x_data, RandomStream& rng,
                        bool zero_noise = false);

// Detached continuation of the transition operator from an existing x.
std::vector<ChainState> continue_chain(const NetParams& enc, const NetParams& dec,
                                       const Matrix& x_start, int steps, RandomStream& rng,
                                       const ChainOptions& opt = {});

// Runs the transition operator while overwriting observed coordinates with
// their given values after every decoder sample. mask[i] == true: observed.
std::vector<ChainState> inpaint_chain(const NetParams& enc, const NetParams& dec,
                                      const Matrix& x_obs, const std::vector<bool>& mask,
                                      int steps, std::uint64_t seed,
                                      bool decoder_stochastic = true);

}  // namespace gibbsnet

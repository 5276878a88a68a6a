#pragma once

#include <vector>

#include "gibbsnet/ops.hpp"

namespace gibbsnet {

enum class GeneratorLoss { non_saturating, boundary_seeking };
enum class LabelLoss { expected_softmax, importance_weighted };

struct LossConfig {
  GeneratorLoss generator_loss = GeneratorLoss::boundary_seeking;
  LabelLoss label_loss = LabelLoss::expected_softmax;
  int disc_steps_per_gen_step = 1;
};

// mean(-log D_clamped - log(1 - D_unclamped)). The caller detaches generator
// outputs before discriminating, so gradients reach the discriminator only.
Tensor disc_loss(const Tensor& d_clamped, const Tensor& d_unclamped);

// non_saturating: mean(-log D); boundary_seeking: mean of half the squared
// log-odds, minimized exactly at the decision boundary D = 1/2.
Tensor gen_loss(const Tensor& d_unclamped, GeneratorLoss kind);

// The encoder's adversarial signal on the clamped pair: push D toward
// calling it fake (non_saturating) or toward the boundary (boundary_seeking).
Tensor clamped_fool_loss(const Tensor& d_clamped, GeneratorLoss kind);

// Normalized importance weights w_m proportional to D_m / (1 - D_m).
Vector importance_weights(const RowVector& d_row);

// Reweighted negative log-likelihood of M >= 2 sampled labels per example.
// d_values are plain numbers (no gradient through the discriminator);
// gradients reach the label logits only.
Tensor importance_weighted_label_loss(const Tensor& logits,
                                      const std::vector<std::vector<int>>& sampled_labels,
                                      const Matrix& d_values);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  long step_count = 0;

  static AdamState init(const std::vector<const Matrix*>& params, AdamConfig cfg);
};

// Standard Adam update with bias correction, in place.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state);

}  // namespace gibbsnet

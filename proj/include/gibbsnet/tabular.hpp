#pragma once

#include <cstdint>

#include "gibbsnet/common.hpp"

// Exact finite-state machinery for verifying the stationarity claims of the
// learned transition operator at desk scale. Joint states are indexed
// s = z * |X| + x throughout.

namespace gibbsnet {

struct TabularModel {
  Matrix p_x_given_z;  // |Z| x |X|, rows are p(x | z)
  Matrix q_z_given_x;  // |X| x |Z|, rows are q(z | x)
  Vector data_dist;    // over |X|

  Eigen::Index n_x() const { return p_x_given_z.cols(); }
  Eigen::Index n_z() const { return p_x_given_z.rows(); }

  // every row sums to 1 within 1e-12 and all entries are positive
  void validate() const;
};

// z_first composes q then p (the operator T that maps (z_t, x_t) to
// (z_t+1, x_t+1)); x_first composes p then q (the odd-pair operator).
enum class TransitionOrder { z_first, x_first };

Matrix tabular_transition(const TabularModel& m, TransitionOrder order);

// Unique stationary distribution of an ergodic row-stochastic matrix via
// power iteration, run to L1 residual < 1e-12. `start` defaults to uniform.
Vector tabular_stationary(const Matrix& transition, const Vector& start = Vector());

struct Prop1Report {
  double tv_x_marginal;        // TV(x-marginal of pi_T, data_dist)
  double tv_even_odd;          // TV(stationary of T, stationary of T_odd)
  double max_conditional_dev;  // max |p(x|z) - pi_T(x|z)|
};

Prop1Report check_proposition1(const TabularModel& m);

// Builds data_dist, q and p from one random positive joint, so the model is
// an exact fixed point of the transition operator.
TabularModel consistent_tabular_model(Eigen::Index nx, Eigen::Index nz, std::uint64_t seed);

// Mixes p(x|z) with the uniform distribution, breaking consistency.
TabularModel perturb_p_uniform(TabularModel m, double mix);

// Occupancy histogram over joint states of a simulated chain.
Vector simulate_chain_histogram(const TabularModel& m, long steps, std::uint64_t seed);

double total_variation(const Vector& a, const Vector& b);

}  // namespace gibbsnet

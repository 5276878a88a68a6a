#pragma once

#include <map>
#include <string>
#include <vector>

#include "gibbsnet/chains.hpp"
#include "gibbsnet/data.hpp"

// Quantitative diagnostics: kernel two-sample tests between the clamped and
// unclamped joints, mixture mode coverage, histogram divergences, frozen-
// latent probes and long-chain stability sweeps.

namespace gibbsnet {

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::map<std::string, double> details;
  long n_samples = 0;
  std::uint64_t seed = 0;
};

// Unbiased MMD^2 with RBF kernels exp(-d^2 / (2 sigma^2)), summed over the
// bandwidth list. An empty list selects {1/4, 1/2, 1, 2, 4} times the median
// pairwise distance of the pooled sample. The raw estimate is reported; it
// may be negative near zero.
MetricReport mmd_rbf(const Matrix& a, const Matrix& b, std::vector<double> bandwidths = {});
std::vector<double> median_heuristic_bandwidths(const Matrix& a, const Matrix& b);

// Fraction of samples within threshold_sigmas of each mode center (nearest
// center wins); value is the unassigned fraction.
MetricReport mode_coverage(const Matrix& samples, const MixtureMeta& meta,
                           double threshold_sigmas = 3.0);

// KL(hist_a || hist_b) in nats over a shared binning of [lo, hi], with
// additive smoothing of 1/bins pseudo-counts per bin. Out-of-range samples
// land in the edge bins.
MetricReport histogram_kl(const Vector& a, const Vector& b, int bins, double lo, double hi);

struct ProbeConfig {
  bool mlp = false;  // true: one 256-unit hidden layer, matching the 2-layer probe
  int hidden = 256;
  int iters = 400;
  double lr = 0.1;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression (optionally an MLP) on frozen latents;
// value is test accuracy. Never touches the encoder.
MetricReport linear_probe(const Matrix& train_z, const std::vector<int>& train_y,
                          const Matrix& test_z, const std::vector<int>& test_y,
                          const ProbeConfig& cfg = {});

struct StabilityConfig {
  int steps = 2000;
  int probe_every = 100;
  Eigen::Index batch = 512;
  std::uint64_t seed = 0;
  bool decoder_stochastic = true;
};

// One detached unclamped chain probed periodically with mode coverage and
// MMD against a data sample. One report per probe point; the final step is
// always probed.
std::vector<MetricReport> long_chain_stability(const NetParams& enc, const NetParams& dec,
                                               const StabilityConfig& cfg,
                                               const MixtureMeta& meta, const Matrix& data_x);

// L1 distance between the per-mode coverage vectors of two reports.
double coverage_l1_drift(const MetricReport& a, const MetricReport& b);

}  // namespace gibbsnet

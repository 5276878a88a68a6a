#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gibbsnet/common.hpp"

// Synthetic datasets with exact ground truth, plus an optional IDX raster
// loader. The meta descriptor carries whatever is needed to compute mode
// membership and conditionals analytically.

namespace gibbsnet {

struct MixtureMeta {
  Matrix centers;  // K x dim
  double sigma;    // isotropic per-mode std
  Vector weights;  // prior over modes, sums to 1
};

struct SwissRollMeta {
  double t_min, t_max, scale, noise;
};

struct MoonsMeta {
  double noise;
};

using DatasetMeta = std::variant<std::monostate, MixtureMeta, SwissRollMeta, MoonsMeta>;

struct Dataset {
  Matrix x;            // n x dim
  std::vector<int> y;  // empty when unlabeled
  bool labeled = false;
  int n_classes = 0;
  int image_rows = 0, image_cols = 0;  // nonzero for raster data
  DatasetMeta meta;

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
};

// K modes equally spaced on a circle, optionally rotated by `phase`.
Dataset gaussian_mixture(int k, int n, double radius, double sigma, std::uint64_t seed,
                         bool labeled, double phase = 0.0);

Dataset swiss_roll_2d(int n, double noise, std::uint64_t seed);
Dataset two_moons(int n, double noise, std::uint64_t seed);

// IDX raster format: big-endian dims, unsigned byte pixels, scaled to [0,1].
// limit <= 0 loads everything.
Dataset load_idx_images(const std::string& path, int limit);
void write_idx_images(const std::string& path, const Matrix& pixels01, int rows, int cols);

struct ConditionalMixture {
  Vector weights;              // posterior over modes
  Matrix means;                // K x n_free, conditional means of free coords
  double sigma;                // isotropic conditional std
  std::vector<int> free_dims;  // column indices of the free coordinates
};

// Exact posterior mixture over the free coordinates given observed ones.
// mask[i] == true marks coordinate i as observed.
ConditionalMixture exact_conditional(const MixtureMeta& meta, const RowVector& observed,
                                     const std::vector<bool>& mask);
ConditionalMixture exact_conditional(const Dataset& ds, const RowVector& observed,
                                     const std::vector<bool>& mask);

}  // namespace gibbsnet

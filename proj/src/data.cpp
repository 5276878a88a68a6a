#include "gibbsnet/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace gibbsnet {

Dataset gaussian_mixture(int k, int n, double radius, double sigma, std::uint64_t seed,
                         bool labeled, double phase) {
  if (k < 1) throw ConfigError("gaussian_mixture: need k >= 1, got " + std::to_string(k));
  if (sigma <= 0.0) throw ConfigError("gaussian_mixture: need sigma > 0");
  if (n < k)
    throw ConfigError("gaussian_mixture: n=" + std::to_string(n) + " < k=" + std::to_string(k));

  MixtureMeta meta;
  meta.centers.resize(k, 2);
  for (int i = 0; i < k; ++i) {
    const double angle = phase + 2.0 * M_PI * i / k;
    meta.centers(i, 0) = radius * std::cos(angle);
    meta.centers(i, 1) = radius * std::sin(angle);
  }
  meta.sigma = sigma;
  meta.weights = Vector::Constant(k, 1.0 / k);

  RandomStream rng(mix_seed(seed, 0xda7a, 1));
  Dataset ds;
  ds.x.resize(n, 2);
  ds.labeled = labeled;
  ds.n_classes = labeled ? k : 0;
  if (labeled) ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const int mode = static_cast<int>(rng.index(k));
    ds.x(i, 0) = meta.centers(mode, 0) + sigma * rng.normal();
    ds.x(i, 1) = meta.centers(mode, 1) + sigma * rng.normal();
    if (labeled) ds.y[static_cast<std::size_t>(i)] = mode;
  }
  ds.meta = meta;
  return ds;
}

Dataset swiss_roll_2d(int n, double noise, std::uint64_t seed) {
  if (n < 1) throw ConfigError("swiss_roll_2d: need n >= 1");
  SwissRollMeta meta{1.5 * M_PI, 4.5 * M_PI, 0.25, noise};
  RandomStream rng(mix_seed(seed, 0xda7a, 2));
  Dataset ds;
  ds.x.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double t = rng.uniform(meta.t_min, meta.t_max);
    ds.x(i, 0) = meta.scale * t * std::cos(t) + noise * rng.normal();
    ds.x(i, 1) = meta.scale * t * std::sin(t) + noise * rng.normal();
  }
  ds.meta = meta;
  return ds;
}

Dataset two_moons(int n, double noise, std::uint64_t seed) {
  if (n < 1) throw ConfigError("two_moons: need n >= 1");
  RandomStream rng(mix_seed(seed, 0xda7a, 3));
  Dataset ds;
  ds.x.resize(n, 2);
  ds.y.resize(n);
  ds.labeled = true;
  ds.n_classes = 2;
  const int n_upper = (n + 1) / 2;
  for (int i = 0; i < n; ++i) {
    const double t = rng.uniform(0.0, M_PI);
    double px, py;
    int label;
    if (i < n_upper) {  // upper arc, unit circle at the origin
      px = std::cos(t);
      py = std::sin(t);
      label = 0;
    } else {  // lower arc, unit circle at (1, 0.5)
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
      label = 1;
    }
    ds.x(i, 0) = px + noise * rng.normal();
    ds.x(i, 1) = py + noise * rng.normal();
    ds.y[static_cast<std::size_t>(i)] = label;
  }
  ds.meta = MoonsMeta{noise};
  return ds;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError("load_idx_images: truncated header in " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx_images(const std::string& path, int limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_idx_images: cannot open " + path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != 0x00000803u) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw FormatError("load_idx_images: bad magic " + std::string(buf) + " in " + path);
  }
  const std::uint32_t count = read_be32(in, path);
  const std::uint32_t rows = read_be32(in, path);
  const std::uint32_t cols = read_be32(in, path);
  const std::uint32_t take =
      limit > 0 ? std::min<std::uint32_t>(count, static_cast<std::uint32_t>(limit)) : count;

  Dataset ds;
  ds.image_rows = static_cast<int>(rows);
  ds.image_cols = static_cast<int>(cols);
  ds.x.resize(take, static_cast<Eigen::Index>(rows) * cols);
  std::vector<unsigned char> pix(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < take; ++i) {
    if (!in.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size())))
      throw FormatError("load_idx_images: truncated pixel data in " + path);
    for (std::size_t j = 0; j < pix.size(); ++j)
      ds.x(i, static_cast<Eigen::Index>(j)) = pix[j] / 255.0;
  }
  return ds;
}

void write_idx_images(const std::string& path, const Matrix& pixels01, int rows, int cols) {
  if (pixels01.cols() != static_cast<Eigen::Index>(rows) * cols)
    throw DimensionError("write_idx_images: " + shape_str(pixels01) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("write_idx_images: cannot open " + path);
  write_be32(out, 0x00000803u);
  write_be32(out, static_cast<std::uint32_t>(pixels01.rows()));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  for (Eigen::Index i = 0; i < pixels01.rows(); ++i)
    for (Eigen::Index j = 0; j < pixels01.cols(); ++j) {
      const double v = std::min(1.0, std::max(0.0, pixels01(i, j)));
      const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
}

ConditionalMixture exact_conditional(const MixtureMeta& meta, const RowVector& observed,
                                     const std::vector<bool>& mask) {
  const Eigen::Index dim = meta.centers.cols();
  if (observed.size() != dim || static_cast<Eigen::Index>(mask.size()) != dim)
    throw DimensionError("exact_conditional: mask/observation size does not match dim " +
                         std::to_string(dim));
  std::vector<int> obs_dims, free_dims;
  for (int d = 0; d < dim; ++d) (mask[static_cast<std::size_t>(d)] ? obs_dims : free_dims).push_back(d);
  if (obs_dims.empty()) throw ContractError("exact_conditional: no observed coordinate");

  const Eigen::Index k = meta.centers.rows();
  Vector log_w(k);
  for (Eigen::Index m = 0; m < k; ++m) {
    double ll = std::log(meta.weights(m));
    for (int d : obs_dims) {
      const double r = observed(d) - meta.centers(m, d);
      ll -= r * r / (2.0 * meta.sigma * meta.sigma);
    }
    log_w(m) = ll;
  }
  const double lmax = log_w.maxCoeff();
  Vector w = (log_w.array() - lmax).exp();
  w /= w.sum();

  ConditionalMixture cond;
  cond.weights = w;
  cond.sigma = meta.sigma;
  cond.free_dims = free_dims;
  cond.means.resize(k, static_cast<Eigen::Index>(free_dims.size()));
  for (Eigen::Index m = 0; m < k; ++m)
    for (std::size_t j = 0; j < free_dims.size(); ++j)
      cond.means(m, static_cast<Eigen::Index>(j)) = meta.centers(m, free_dims[j]);
  return cond;
}

ConditionalMixture exact_conditional(const Dataset& ds, const RowVector& observed,
                                     const std::vector<bool>& mask) {
  const auto* meta = std::get_if<MixtureMeta>(&ds.meta);
  if (!meta) throw ContractError("exact_conditional: dataset meta is not a Gaussian mixture");
  return exact_conditional(*meta, observed, mask);
}

}  // namespace gibbsnet

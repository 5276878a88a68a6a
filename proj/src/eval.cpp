#include "gibbsnet/eval.hpp"

#include <algorithm>
#include <cmath>

#include "gibbsnet/losses.hpp"

namespace gibbsnet {
namespace {

// lexicographic order on (rows, cols, entries); used to canonicalize the
// operand order so the estimate is symmetric bit-for-bit
bool lex_less(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
  return false;
}

Matrix squared_distances(const Matrix& a, const Matrix& b) {
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

}  // namespace

std::vector<double> median_heuristic_bandwidths(const Matrix& a, const Matrix& b) {
  const Eigen::Index cap = 512;
  const Eigen::Index na = std::min(a.rows(), cap), nb = std::min(b.rows(), cap);
  Matrix pooled(na + nb, a.cols());
  pooled.topRows(na) = a.topRows(na);
  pooled.bottomRows(nb) = b.topRows(nb);
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>((na + nb) * (na + nb - 1) / 2));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j)
      dists.push_back((pooled.row(i) - pooled.row(j)).norm());
  double med = 1.0;
  if (!dists.empty()) {
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    med = dists[mid];
  }
  if (med <= 0.0) med = 1.0;
  return {0.25 * med, 0.5 * med, med, 2.0 * med, 4.0 * med};
}

MetricReport mmd_rbf(const Matrix& a_in, const Matrix& b_in, std::vector<double> bandwidths) {
  if (a_in.cols() != b_in.cols())
    throw DimensionError("mmd_rbf: feature dims differ, " + shape_str(a_in) + " vs " +
                         shape_str(b_in));
  if (a_in.rows() < 2 || b_in.rows() < 2)
    throw ContractError("mmd_rbf: need at least 2 samples per side");

  const bool swapped = lex_less(b_in, a_in);
  const Matrix& a = swapped ? b_in : a_in;
  const Matrix& b = swapped ? a_in : b_in;
  if (bandwidths.empty()) bandwidths = median_heuristic_bandwidths(a, b);

  const Matrix daa = squared_distances(a, a);
  const Matrix dbb = squared_distances(b, b);
  const Matrix dab = squared_distances(a, b);
  const double m = static_cast<double>(a.rows()), n = static_cast<double>(b.rows());

  MetricReport report;
  report.name = "mmd_rbf";
  report.n_samples = a.rows() + b.rows();
  double total = 0.0;
  for (std::size_t k = 0; k < bandwidths.size(); ++k) {
    const double sigma = bandwidths[k];
    if (sigma <= 0.0) throw ContractError("mmd_rbf: bandwidth must be positive");
    const double gamma = 1.0 / (2.0 * sigma * sigma);
    double kaa = 0.0, kbb = 0.0, kab = 0.0;
    for (Eigen::Index i = 0; i < daa.rows(); ++i)
      for (Eigen::Index j = 0; j < daa.cols(); ++j)
        if (i != j) kaa += std::exp(-gamma * daa(i, j));
    for (Eigen::Index i = 0; i < dbb.rows(); ++i)
      for (Eigen::Index j = 0; j < dbb.cols(); ++j)
        if (i != j) kbb += std::exp(-gamma * dbb(i, j));
    for (Eigen::Index i = 0; i < dab.rows(); ++i)
      for (Eigen::Index j = 0; j < dab.cols(); ++j) kab += std::exp(-gamma * dab(i, j));
    const double v = kaa / (m * (m - 1.0)) + kbb / (n * (n - 1.0)) - 2.0 * kab / (m * n);
    report.details["bandwidth_" + std::to_string(k)] = sigma;
    report.details["mmd2_" + std::to_string(k)] = v;
    total += v;
  }
  report.value = total;
  return report;
}

MetricReport mode_coverage(const Matrix& samples, const MixtureMeta& meta,
                           double threshold_sigmas) {
  if (samples.cols() != meta.centers.cols())
    throw DimensionError("mode_coverage: sample dim " + shape_str(samples) +
                         " vs centers " + shape_str(meta.centers));
  const Eigen::Index k = meta.centers.rows();
  Vector counts = Vector::Zero(k);
  double unassigned = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    Eigen::Index best = 0;
    double best_dist = (samples.row(i) - meta.centers.row(0)).norm();
    for (Eigen::Index m = 1; m < k; ++m) {
      const double d = (samples.row(i) - meta.centers.row(m)).norm();
      if (d < best_dist) {
        best_dist = d;
        best = m;
      }
    }
    if (best_dist <= threshold_sigmas * meta.sigma)
      counts(best) += 1.0;
    else
      unassigned += 1.0;
  }
  const double n = static_cast<double>(samples.rows());
  MetricReport report;
  report.name = "mode_coverage";
  report.n_samples = samples.rows();
  double min_frac = 1.0;
  for (Eigen::Index m = 0; m < k; ++m) {
    const double frac = counts(m) / n;
    report.details["mode_" + std::to_string(m)] = frac;
    min_frac = std::min(min_frac, frac);
  }
  report.details["unassigned"] = unassigned / n;
  report.details["min_mode_fraction"] = min_frac;
  report.value = unassigned / n;
  return report;
}

MetricReport histogram_kl(const Vector& a, const Vector& b, int bins, double lo, double hi) {
  if (a.size() == 0 || b.size() == 0) throw ContractError("histogram_kl: empty input");
  if (bins < 1 || !(lo < hi)) throw ContractError("histogram_kl: bad binning grid");

  auto histogram = [&](const Vector& v) {
    Vector h = Vector::Zero(bins);
    const double width = (hi - lo) / bins;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      int idx = static_cast<int>((v(i) - lo) / width);
      idx = std::max(0, std::min(bins - 1, idx));
      h(idx) += 1.0;
    }
    // additive smoothing: one pseudo-count spread across the grid
    h.array() += 1.0 / bins;
    return Vector(h / (static_cast<double>(v.size()) + 1.0));
  };

  const Vector pa = histogram(a), pb = histogram(b);
  double kl = 0.0;
  for (int i = 0; i < bins; ++i) kl += pa(i) * std::log(pa(i) / pb(i));

  MetricReport report;
  report.name = "histogram_kl";
  report.value = kl;
  report.n_samples = a.size() + b.size();
  report.details["bins"] = bins;
  report.details["lo"] = lo;
  report.details["hi"] = hi;
  return report;
}

MetricReport linear_probe(const Matrix& train_z, const std::vector<int>& train_y,
                          const Matrix& test_z, const std::vector<int>& test_y,
                          const ProbeConfig& cfg) {
  if (train_z.rows() != static_cast<Eigen::Index>(train_y.size()) ||
      test_z.rows() != static_cast<Eigen::Index>(test_y.size()))
    throw DimensionError("linear_probe: latent/label counts disagree");
  if (train_z.cols() != test_z.cols())
    throw DimensionError("linear_probe: train/test latent dims disagree");

  int n_classes = 0;
  for (int y : train_y) n_classes = std::max(n_classes, y + 1);
  for (int y : test_y) n_classes = std::max(n_classes, y + 1);
  bool multiple = false;
  for (int y : train_y) multiple = multiple || y != train_y.front();
  if (!multiple) throw ContractError("linear_probe: training labels contain a single class");

  const Eigen::Index d = train_z.cols();
  std::vector<Eigen::Index> sizes;
  if (cfg.mlp)
    sizes = {d, static_cast<Eigen::Index>(cfg.hidden), static_cast<Eigen::Index>(n_classes)};
  else
    sizes = {d, static_cast<Eigen::Index>(n_classes)};
  NetParams clf = init_params(sizes, mix_seed(cfg.seed, 0x9f0be), Role::discriminator);
  clf.role = Role::discriminator;  // unused; the probe runs its own forward

  const Matrix targets = one_hot(train_y, n_classes);
  AdamConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.beta1 = 0.9;
  AdamState opt = AdamState::init(param_refs(static_cast<const NetParams&>(clf)), opt_cfg);

  auto forward_logits = [&](const NetVars& v, const Matrix& z) {
    Tensor h(z);
    for (std::size_t i = 0; i < v.hidden.size(); ++i)
      h = leaky_relu(add_rowwise(matmul(h, transpose(v.hidden[i].weight)), v.hidden[i].bias));
    return add_rowwise(matmul(h, transpose(v.out.weight)), v.out.bias);
  };

  for (int it = 0; it < cfg.iters; ++it) {
    Tape tape;
    NetVars vars = register_leaves(tape, clf);
    Tensor logits = forward_logits(vars, train_z);
    Tensor ce = neg(mean(sum(mul(Tensor(targets), log(softmax_rows(logits))), 1)));
    tape.backward(ce);
    auto grads = net_grads(tape, vars);
    adam_step(param_refs(clf), grads, opt);
  }

  auto accuracy = [&](const Matrix& z, const std::vector<int>& y) {
    Matrix logits = forward_logits(as_constants(clf), z).value;
    long correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index arg;
      logits.row(i).maxCoeff(&arg);
      if (static_cast<int>(arg) == y[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
  };

  MetricReport report;
  report.name = "linear_probe";
  report.value = accuracy(test_z, test_y);
  report.details["train_accuracy"] = accuracy(train_z, train_y);
  report.details["n_classes"] = n_classes;
  report.details["mlp"] = cfg.mlp ? 1.0 : 0.0;
  report.n_samples = test_z.rows();
  report.seed = cfg.seed;
  return report;
}

std::vector<MetricReport> long_chain_stability(const NetParams& enc, const NetParams& dec,
                                               const StabilityConfig& cfg,
                                               const MixtureMeta& meta, const Matrix& data_x) {
  ChainOptions opt;
  opt.decoder_stochastic = cfg.decoder_stochastic;
  opt.record_every = std::max(1, cfg.probe_every);
  RandomStream rng(mix_seed(cfg.seed, 0x57ab));
  auto chain = unclamped_chain(as_constants(enc), as_constants(dec), cfg.steps, cfg.batch, rng,
                               opt);

  const Eigen::Index mmd_cap = 512;
  const Matrix data_ref = data_x.topRows(std::min(data_x.rows(), mmd_cap));
  std::vector<MetricReport> series;
  for (const ChainState& state : chain.trajectory) {
    MetricReport cov = mode_coverage(state.x, meta);
    MetricReport mmd = mmd_rbf(state.x.topRows(std::min(state.x.rows(), mmd_cap)), data_ref);
    MetricReport probe;
    probe.name = "long_chain_stability";
    probe.value = mmd.value;
    probe.details = cov.details;
    probe.details["step"] = state.step;
    probe.details["mmd"] = mmd.value;
    probe.n_samples = state.x.rows();
    probe.seed = cfg.seed;
    series.push_back(std::move(probe));
  }
  return series;
}

double coverage_l1_drift(const MetricReport& a, const MetricReport& b) {
  double drift = 0.0;
  for (const auto& [key, va] : a.details) {
    if (key.rfind("mode_", 0) != 0) continue;
    const auto it = b.details.find(key);
    if (it == b.details.end()) throw ContractError("coverage_l1_drift: mismatched mode keys");
    drift += std::abs(va - it->second);
  }
  return drift;
}

}  // namespace gibbsnet

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gibbsnet/eval.hpp"
#include "testutil.hpp"

using namespace gibbsnet;
using testutil::random_matrix;

TEST_CASE("mmd of a sample against itself is near zero") {
  RandomStream rng(1);
  Matrix a = rng.normal_matrix(200, 2);
  auto report = mmd_rbf(a, a, {1.0});
  CHECK(std::abs(report.value) < 3.0 / std::sqrt(200.0));
  CHECK(report.n_samples == 400);
}

TEST_CASE("mmd separates N(0,1) from N(5,1) at bandwidth 1") {
  RandomStream rng(2);
  Matrix a = rng.normal_matrix(500, 1);
  Matrix b = rng.normal_matrix(500, 1);
  b.array() += 5.0;
  auto report = mmd_rbf(a, b, {1.0});
  CHECK(report.value > 0.5);
}

TEST_CASE("mmd is symmetric bit-exactly and validates its inputs") {
  RandomStream rng(3);
  Matrix a = rng.normal_matrix(40, 3), b = rng.normal_matrix(60, 3);
  CHECK(mmd_rbf(a, b).value == mmd_rbf(b, a).value);
  CHECK(mmd_rbf(a, b, {0.5, 2.0}).value == mmd_rbf(b, a, {0.5, 2.0}).value);

  CHECK_THROWS_AS(mmd_rbf(a.topRows(1), b), ContractError);
  CHECK_THROWS_AS(mmd_rbf(a, rng.normal_matrix(10, 2)), DimensionError);
}

TEST_CASE("median-heuristic bandwidths are positive and ordered") {
  RandomStream rng(4);
  auto bw = median_heuristic_bandwidths(rng.normal_matrix(100, 2), rng.normal_matrix(100, 2));
  REQUIRE(bw.size() == 5);
  for (std::size_t i = 0; i + 1 < bw.size(); ++i) {
    CHECK(bw[i] > 0.0);
    CHECK(bw[i] < bw[i + 1]);
  }
  CHECK(bw[2] == doctest::Approx(2.0 * bw[1]));
}

TEST_CASE("mode coverage of exact mixture samples is near uniform") {
  Dataset ds = gaussian_mixture(8, 10000, 2.0, 0.05, 31, false);
  const auto& meta = std::get<MixtureMeta>(ds.meta);
  auto report = mode_coverage(ds.x, meta);
  double total = report.details.at("unassigned");
  for (int m = 0; m < 8; ++m) {
    const double frac = report.details.at("mode_" + std::to_string(m));
    CHECK(std::abs(frac - 0.125) < 0.03);
    total += frac;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK(report.value < 0.02);  // 3-sigma misses only
}

TEST_CASE("all samples at one center cover exactly that mode") {
  Dataset ds = gaussian_mixture(4, 100, 2.0, 0.1, 5, false);
  const auto& meta = std::get<MixtureMeta>(ds.meta);
  Matrix samples = meta.centers.row(2).replicate(50, 1);
  auto report = mode_coverage(samples, meta);
  CHECK(report.details.at("mode_2") == 1.0);
  CHECK(report.details.at("mode_0") == 0.0);
  CHECK(report.value == 0.0);
}

TEST_CASE("histogram KL is zero on identical samples and nonnegative in general") {
  RandomStream rng(6);
  Vector a(500);
  for (int i = 0; i < 500; ++i) a(i) = rng.normal();
  CHECK(std::abs(histogram_kl(a, a, 20, -4, 4).value) < 1e-6);

  for (int rep = 0; rep < 20; ++rep) {
    Vector u(300), v(300);
    for (int i = 0; i < 300; ++i) {
      u(i) = rng.uniform(-1, 1);
      v(i) = rng.normal();
    }
    CHECK(histogram_kl(u, v, 15, -3, 3).value >= 0.0);
  }
  CHECK_THROWS_AS(histogram_kl(Vector(), a, 10, 0, 1), ContractError);
}

TEST_CASE("histogram KL matches the closed form for uniform vs point mass") {
  const int bins = 10, n = 1000;
  Vector uniform(n), point(n);
  for (int i = 0; i < n; ++i) {
    uniform(i) = (i % bins + 0.5) / bins;  // 100 exactly per bin
    point(i) = 0.05;                       // all in bin 0
  }
  auto report = histogram_kl(uniform, point, bins, 0.0, 1.0);

  // hand computation with the same smoothing constants
  const double pu = (100.0 + 0.1) / (n + 1.0);
  const double q0 = (1000.0 + 0.1) / (n + 1.0);
  const double qrest = 0.1 / (n + 1.0);
  const double want = pu * std::log(pu / q0) + 9.0 * pu * std::log(pu / qrest);
  CHECK(report.value == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("probe reaches full accuracy on separated clusters") {
  RandomStream rng(7);
  const int n = 200;
  Matrix z(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    const double cx = i % 2 == 0 ? -3.0 : 3.0;
    z(i, 0) = cx + 0.2 * rng.normal();
    z(i, 1) = 0.2 * rng.normal();
  }
  auto report = linear_probe(z.topRows(150), {y.begin(), y.begin() + 150}, z.bottomRows(50),
                             {y.end() - 50, y.end()});
  CHECK(report.value == 1.0);
  CHECK(report.details.at("n_classes") == 2);
}

TEST_CASE("probe on shuffled labels sits at chance level") {
  RandomStream rng(8);
  const int n = 3000, k = 3;
  Matrix z = rng.normal_matrix(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(k));
  auto report = linear_probe(z.topRows(2000), {y.begin(), y.begin() + 2000}, z.bottomRows(1000),
                             {y.end() - 1000, y.end()});
  CHECK(std::abs(report.value - 1.0 / k) < 0.05);
}

TEST_CASE("probe rejects single-class training labels and is deterministic") {
  Matrix z = Matrix::Random(10, 2);
  std::vector<int> ones(10, 1);
  CHECK_THROWS_AS(linear_probe(z, ones, z, ones), ContractError);

  RandomStream rng(9);
  Matrix tz = rng.normal_matrix(60, 2);
  std::vector<int> ty(60);
  for (int i = 0; i < 60; ++i) ty[static_cast<std::size_t>(i)] = i % 2;
  auto r1 = linear_probe(tz, ty, tz, ty);
  auto r2 = linear_probe(tz, ty, tz, ty);
  CHECK(r1.value == r2.value);
  CHECK(r1.details.at("train_accuracy") == r2.details.at("train_accuracy"));
}

TEST_CASE("mlp probe variant runs and reports its flavor") {
  RandomStream rng(10);
  Matrix tz = rng.normal_matrix(80, 2);
  std::vector<int> ty(80);
  for (int i = 0; i < 80; ++i) ty[static_cast<std::size_t>(i)] = i % 2;
  ProbeConfig cfg;
  cfg.mlp = true;
  cfg.hidden = 16;
  cfg.iters = 50;
  auto report = linear_probe(tz, ty, tz, ty, cfg);
  CHECK(report.details.at("mlp") == 1.0);
  CHECK(std::isfinite(report.value));
}

TEST_CASE("long-chain stability smoke on untrained networks") {
  NetParams enc = init_params({2, 8, 4}, 1, Role::encoder);
  NetParams dec = init_params({2, 8, 4}, 2, Role::decoder);
  Dataset ds = gaussian_mixture(4, 256, 2.0, 0.2, 3, false);
  const auto& meta = std::get<MixtureMeta>(ds.meta);

  StabilityConfig cfg;
  cfg.steps = 50;
  cfg.probe_every = 20;
  cfg.batch = 64;
  auto series = long_chain_stability(enc, dec, cfg, meta, ds.x);
  REQUIRE(series.size() == 3);  // steps 20, 40 and the final 50
  int prev = 0;
  for (const auto& probe : series) {
    const int step = static_cast<int>(probe.details.at("step"));
    CHECK(step > prev);
    prev = step;
    CHECK(std::isfinite(probe.value));
    CHECK(std::isfinite(probe.details.at("unassigned")));
  }
  CHECK(prev == 50);

  // drift helper consumes coverage keys from the probes
  CHECK(coverage_l1_drift(series.front(), series.front()) == 0.0);
  CHECK(std::isfinite(coverage_l1_drift(series.front(), series.back())));
}

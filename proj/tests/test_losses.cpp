#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gibbsnet/losses.hpp"
#include "testutil.hpp"

using namespace gibbsnet;
using testutil::grad_close;
using testutil::numeric_grad;
using testutil::random_matrix;

TEST_CASE("disc_loss at the 1/2 fixed point is 2 log 2") {
  Tensor half(Matrix::Constant(4, 1, 0.5));
  CHECK(disc_loss(half, half).scalar() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("perfect discriminator sits at the clamp floor") {
  Tensor real(Matrix::Constant(4, 1, 1.0 - 1e-12));
  Tensor fake(Matrix::Constant(4, 1, 1e-12));
  CHECK(disc_loss(real, fake).scalar() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(disc_loss(real, fake).scalar() >= 0.0);
}

TEST_CASE("disc_loss rejects values outside the open unit interval") {
  Tensor ok(Matrix::Constant(2, 1, 0.5));
  Tensor bad_hi(Matrix::Constant(2, 1, 1.0));
  Tensor bad_lo(Matrix::Constant(2, 1, 0.0));
  CHECK_THROWS_AS(disc_loss(bad_hi, ok), ContractError);
  CHECK_THROWS_AS(disc_loss(ok, bad_lo), ContractError);
  CHECK_THROWS_AS(gen_loss(bad_hi, GeneratorLoss::boundary_seeking), ContractError);
}

TEST_CASE("disc_loss gradient matches finite differences through sigmoid logits") {
  RandomStream rng(10);
  const Matrix lc = random_matrix(5, 1, rng), lu = random_matrix(5, 1, rng);
  Tape tape;
  Tensor tc = tape.leaf(lc), tu = tape.leaf(lu);
  tape.backward(disc_loss(sigmoid(tc), sigmoid(tu)));
  auto f = [](const std::vector<Matrix>& p) {
    return disc_loss(sigmoid(Tensor(p[0])), sigmoid(Tensor(p[1]))).scalar();
  };
  CHECK(grad_close({tape.grad(tc), tape.grad(tu)}, numeric_grad(f, {lc, lu})));
}

TEST_CASE("generator losses at the boundary") {
  Tensor half(Matrix::Constant(3, 1, 0.5));
  CHECK(gen_loss(half, GeneratorLoss::boundary_seeking).scalar() == doctest::Approx(0.0));
  CHECK(gen_loss(half, GeneratorLoss::non_saturating).scalar() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("boundary-seeking loss is nonnegative, zero only at 1/2, pushing both sides inward") {
  RandomStream rng(20);
  for (int i = 0; i < 200; ++i) {
    const double d = rng.uniform(0.01, 0.99);
    const double v = gen_loss(Tensor(Matrix::Constant(1, 1, d)),
                              GeneratorLoss::boundary_seeking).scalar();
    CHECK(v >= 0.0);
    if (std::abs(d - 0.5) > 1e-3) CHECK(v > 0.0);
  }

  auto slope_at = [](double d) {
    Tape tape;
    Tensor t = tape.leaf(Matrix::Constant(1, 1, d));
    tape.backward(gen_loss(t, GeneratorLoss::boundary_seeking));
    return tape.grad(t)(0, 0);
  };
  CHECK(slope_at(0.3) < 0.0);  // minimizing raises d toward 1/2
  CHECK(slope_at(0.7) > 0.0);  // and lowers it from above
}

TEST_CASE("gen_loss gradient matches finite differences") {
  RandomStream rng(30);
  const Matrix lu = random_matrix(6, 1, rng);
  for (auto kind : {GeneratorLoss::non_saturating, GeneratorLoss::boundary_seeking}) {
    Tape tape;
    Tensor t = tape.leaf(lu);
    tape.backward(gen_loss(sigmoid(t), kind));
    auto f = [kind](const std::vector<Matrix>& p) {
      return gen_loss(sigmoid(Tensor(p[0])), kind).scalar();
    };
    CHECK(grad_close({tape.grad(t)}, numeric_grad(f, {lu})));
  }
}

TEST_CASE("equal discriminator outputs give uniform importance weights") {
  RowVector d = RowVector::Constant(5, 0.37);
  Vector w = importance_weights(d);
  CHECK((w.array() - 0.2).abs().maxCoeff() < 1e-12);
}

TEST_CASE("importance weights normalize for random discriminator outputs") {
  RandomStream rng(40);
  for (int i = 0; i < 50; ++i) {
    RowVector d(4);
    for (int m = 0; m < 4; ++m) d(m) = rng.uniform(0.01, 0.99);
    Vector w = importance_weights(d);
    CHECK(std::abs(w.sum() - 1.0) < 1e-9);
    CHECK((w.array() >= 0.0).all());
  }
}

TEST_CASE("a dominant sample reduces the loss to its negative log-likelihood") {
  Matrix logits(1, 3);
  logits << 0.4, -0.2, 1.1;
  Matrix d(1, 3);
  d << 1.0 - 1e-9, 1e-9, 1e-9;
  Tensor loss = importance_weighted_label_loss(Tensor(logits), {{2, 0, 1}}, d);

  Eigen::ArrayXd e = logits.row(0).array().exp();
  const double want = -std::log(e(2) / e.sum());
  CHECK(loss.scalar() == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("importance-weighted label loss sends gradient to logits only") {
  RandomStream rng(50);
  const Matrix logits = random_matrix(3, 4, rng);
  Matrix d(3, 2);
  d << 0.6, 0.2, 0.4, 0.5, 0.9, 0.1;
  const std::vector<std::vector<int>> labels = {{0, 2}, {1, 1}, {3, 0}};

  Tape tape;
  Tensor t = tape.leaf(logits);
  tape.backward(importance_weighted_label_loss(t, labels, d));
  auto f = [&](const std::vector<Matrix>& p) {
    return importance_weighted_label_loss(Tensor(p[0]), labels, d).scalar();
  };
  CHECK(grad_close({tape.grad(t)}, numeric_grad(f, {logits})));

  Matrix d_single(3, 1);
  d_single << 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(
      importance_weighted_label_loss(Tensor(logits), {{0}, {1}, {3}}, d_single), ConfigError);
}

TEST_CASE("adam leaves parameters alone under zero gradient") {
  Matrix w = Matrix::Constant(2, 2, 1.5);
  const Matrix before = w;
  AdamState st = AdamState::init({&w}, AdamConfig{});
  adam_step({&w}, {Matrix::Zero(2, 2)}, st);
  CHECK(w == before);
  CHECK(st.step_count == 1);
}

TEST_CASE("bias-corrected first step has magnitude close to lr") {
  Matrix w = Matrix::Zero(1, 3);
  Matrix g(1, 3);
  g << 2.0, -0.5, 1e-3;
  AdamConfig cfg;
  cfg.lr = 0.05;
  AdamState st = AdamState::init({&w}, cfg);
  adam_step({&w}, {g}, st);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(std::abs(w(0, j)) - cfg.lr) < cfg.lr * 1e-4);
    CHECK(w(0, j) * g(0, j) < 0.0);  // moves against the gradient
  }
}

TEST_CASE("adam minimizes (w-3)^2 from zero within 2000 steps at lr 0.05") {
  Matrix w = Matrix::Zero(1, 1);
  AdamConfig cfg;
  cfg.lr = 0.05;
  cfg.beta1 = 0.9;
  AdamState st = AdamState::init({&w}, cfg);
  for (int i = 0; i < 2000; ++i) {
    Matrix g(1, 1);
    g(0, 0) = 2.0 * (w(0, 0) - 3.0);
    adam_step({&w}, {g}, st);
  }
  CHECK(std::abs(w(0, 0) - 3.0) < 1e-3);
}

TEST_CASE("adam updates are deterministic and shape-checked") {
  auto run = [] {
    Matrix w = Matrix::Constant(2, 2, 0.3);
    AdamState st = AdamState::init({&w}, AdamConfig{});
    Matrix g = Matrix::Constant(2, 2, 0.11);
    adam_step({&w}, {g}, st);
    adam_step({&w}, {g}, st);
    return w;
  };
  CHECK(run() == run());

  Matrix w = Matrix::Zero(2, 2);
  AdamState st = AdamState::init({&w}, AdamConfig{});
  CHECK_THROWS_AS(adam_step({&w}, {Matrix::Zero(3, 3)}, st), DimensionError);
}

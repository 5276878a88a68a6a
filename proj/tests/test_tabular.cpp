#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gibbsnet/tabular.hpp"

using namespace gibbsnet;

TEST_CASE("degenerate one-state model gives the 1x1 identity operator") {
  TabularModel m;
  m.p_x_given_z = Matrix::Ones(1, 1);
  m.q_z_given_x = Matrix::Ones(1, 1);
  m.data_dist = Vector::Ones(1);
  m.validate();
  Matrix t = tabular_transition(m, TransitionOrder::z_first);
  CHECK(t.rows() == 1);
  CHECK(t(0, 0) == 1.0);
  auto report = check_proposition1(m);
  CHECK(report.tv_x_marginal == 0.0);
  CHECK(report.tv_even_odd == 0.0);
  CHECK(report.max_conditional_dev == 0.0);
}

TEST_CASE("composed operators are row-stochastic for random models") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    TabularModel m = consistent_tabular_model(5, 4, seed);
    for (auto order : {TransitionOrder::z_first, TransitionOrder::x_first}) {
      Matrix t = tabular_transition(m, order);
      for (Eigen::Index i = 0; i < t.rows(); ++i)
        CHECK(std::abs(t.row(i).sum() - 1.0) < 1e-12);
      CHECK((t.array() > 0.0).all());
    }
  }
}

TEST_CASE("two-state toy chain has stationary x-marginal (2/3, 1/3)") {
  // q routes z = x deterministically, so the x-chain is exactly p.
  TabularModel m;
  m.q_z_given_x = Matrix::Identity(2, 2);
  m.p_x_given_z.resize(2, 2);
  m.p_x_given_z << 0.9, 0.1, 0.2, 0.8;
  m.data_dist.resize(2);
  m.data_dist << 2.0 / 3.0, 1.0 / 3.0;

  Matrix t = tabular_transition(m, TransitionOrder::z_first);
  Vector pi = tabular_stationary(t);
  Vector x_marginal = Vector::Zero(2);
  for (Eigen::Index z = 0; z < 2; ++z)
    for (Eigen::Index x = 0; x < 2; ++x) x_marginal(x) += pi(z * 2 + x);
  CHECK(x_marginal(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(x_marginal(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("doubly stochastic transition has the uniform stationary distribution") {
  Matrix t(3, 3);
  t << 0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.3, 0.2, 0.5;
  Vector pi = tabular_stationary(t);
  CHECK((pi.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("non-stochastic rows are rejected") {
  Matrix t(2, 2);
  t << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS_AS(tabular_stationary(t), ContractError);

  TabularModel m;
  m.p_x_given_z = t;
  m.q_z_given_x = Matrix::Identity(2, 2);
  m.data_dist = Vector::Constant(2, 0.5);
  CHECK_THROWS_AS(tabular_transition(m, TransitionOrder::z_first), ContractError);
}

TEST_CASE("periodic chain started off the fixed point does not converge") {
  Matrix t(2, 2);
  t << 0.0, 1.0, 1.0, 0.0;
  Vector start(2);
  start << 1.0, 0.0;
  CHECK_THROWS_AS(tabular_stationary(t, start), NumericError);
}

TEST_CASE("consistent model is an exact fixed point of the operator") {
  TabularModel m = consistent_tabular_model(6, 3, 42);
  auto report = check_proposition1(m);
  CHECK(report.tv_x_marginal < 1e-10);
  CHECK(report.tv_even_odd < 1e-10);
  CHECK(report.max_conditional_dev < 1e-10);
}

TEST_CASE("perturbing p away from the joint breaks stationarity") {
  TabularModel m = perturb_p_uniform(consistent_tabular_model(6, 3, 42), 0.1);
  m.validate();  // still a valid positive stochastic model
  auto report = check_proposition1(m);
  CHECK(report.tv_x_marginal > 1e-4);
}

TEST_CASE("even and odd operators share their stationary joint on a consistent 12-state model") {
  TabularModel m = consistent_tabular_model(4, 3, 7);
  Vector pi_even = tabular_stationary(tabular_transition(m, TransitionOrder::z_first));
  Vector pi_odd = tabular_stationary(tabular_transition(m, TransitionOrder::x_first));
  CHECK(total_variation(pi_even, pi_odd) < 1e-10);
}

TEST_CASE("simulated 12-state chain matches the power-iteration stationary in TV") {
  TabularModel m = consistent_tabular_model(4, 3, 19);
  Vector pi = tabular_stationary(tabular_transition(m, TransitionOrder::z_first));
  Vector hist = simulate_chain_histogram(m, 1000000, 23);
  CHECK(total_variation(pi, hist) < 0.01);
}

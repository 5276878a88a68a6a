#include "gibbsnet/tabular.hpp"

#include <cmath>
#include <string>

namespace gibbsnet {
namespace {

void check_stochastic_rows(const Matrix& m, const char* name) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double s = m.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12)
      throw ContractError(std::string(name) + ": row " + std::to_string(i) +
                          " sums to " + std::to_string(s) + ", not 1");
  }
}

void check_positive(const Matrix& m, const char* name) {
  if ((m.array() <= 0.0).any())
    throw ContractError(std::string(name) + ": non-positive entry breaks ergodicity");
}

}  // namespace

void TabularModel::validate() const {
  if (q_z_given_x.rows() != n_x() || q_z_given_x.cols() != n_z())
    throw DimensionError("TabularModel: q is " + shape_str(q_z_given_x) + ", expected " +
                         shape_str(n_x(), n_z()));
  if (data_dist.size() != n_x())
    throw DimensionError("TabularModel: data_dist has " + std::to_string(data_dist.size()) +
                         " entries, expected " + std::to_string(n_x()));
  check_stochastic_rows(p_x_given_z, "p_x_given_z");
  check_stochastic_rows(q_z_given_x, "q_z_given_x");
  check_positive(p_x_given_z, "p_x_given_z");
  check_positive(q_z_given_x, "q_z_given_x");
  if (std::abs(data_dist.sum() - 1.0) > 1e-12 || (data_dist.array() <= 0.0).any())
    throw ContractError("TabularModel: data_dist is not a positive distribution");
}

Matrix tabular_transition(const TabularModel& m, TransitionOrder order) {
  check_stochastic_rows(m.p_x_given_z, "p_x_given_z");
  check_stochastic_rows(m.q_z_given_x, "q_z_given_x");
  const Eigen::Index nx = m.n_x(), nz = m.n_z();
  const Eigen::Index n = nx * nz;
  Matrix t(n, n);
  for (Eigen::Index z = 0; z < nz; ++z)
    for (Eigen::Index x = 0; x < nx; ++x) {
      const Eigen::Index from = z * nx + x;
      for (Eigen::Index zp = 0; zp < nz; ++zp)
        for (Eigen::Index xp = 0; xp < nx; ++xp) {
          const Eigen::Index to = zp * nx + xp;
          t(from, to) = order == TransitionOrder::z_first
                            ? m.q_z_given_x(x, zp) * m.p_x_given_z(zp, xp)
                            : m.p_x_given_z(z, xp) * m.q_z_given_x(xp, zp);
        }
    }
  return t;
}

Vector tabular_stationary(const Matrix& transition, const Vector& start) {
  if (transition.rows() != transition.cols())
    throw DimensionError("tabular_stationary: matrix is " + shape_str(transition));
  check_stochastic_rows(transition, "transition");
  const Eigen::Index n = transition.rows();
  RowVector pi = start.size() == 0 ? RowVector::Constant(n, 1.0 / static_cast<double>(n))
                                   : RowVector(start.transpose() / start.sum());
  if (pi.size() != n) throw DimensionError("tabular_stationary: start size mismatch");
  for (long iter = 0; iter < 1000000; ++iter) {
    RowVector next = pi * transition;
    next /= next.sum();
    const double residual = (next - pi).cwiseAbs().sum();
    pi = next;
    if (residual < 1e-13) return pi.transpose();
  }
  throw NumericError("tabular_stationary: no convergence after 1e6 iterations");
}

Prop1Report check_proposition1(const TabularModel& m) {
  const Eigen::Index nx = m.n_x(), nz = m.n_z();
  const Vector pi_even = tabular_stationary(tabular_transition(m, TransitionOrder::z_first));
  const Vector pi_odd = tabular_stationary(tabular_transition(m, TransitionOrder::x_first));

  Vector x_marginal = Vector::Zero(nx);
  Vector z_marginal = Vector::Zero(nz);
  for (Eigen::Index z = 0; z < nz; ++z)
    for (Eigen::Index x = 0; x < nx; ++x) {
      x_marginal(x) += pi_even(z * nx + x);
      z_marginal(z) += pi_even(z * nx + x);
    }

  double max_dev = 0.0;
  for (Eigen::Index z = 0; z < nz; ++z)
    for (Eigen::Index x = 0; x < nx; ++x) {
      const double cond = pi_even(z * nx + x) / z_marginal(z);
      max_dev = std::max(max_dev, std::abs(cond - m.p_x_given_z(z, x)));
    }

  return Prop1Report{total_variation(x_marginal, m.data_dist),
                     total_variation(pi_even, pi_odd), max_dev};
}

TabularModel consistent_tabular_model(Eigen::Index nx, Eigen::Index nz, std::uint64_t seed) {
  RandomStream rng(mix_seed(seed, 0x7ab));
  Matrix joint(nx, nz);  // joint(x, z), entries bounded away from zero
  for (Eigen::Index x = 0; x < nx; ++x)
    for (Eigen::Index z = 0; z < nz; ++z) joint(x, z) = rng.uniform(0.05, 1.0);
  joint /= joint.sum();

  TabularModel m;
  m.data_dist = joint.rowwise().sum();
  Vector z_marginal = joint.colwise().sum();
  m.q_z_given_x.resize(nx, nz);
  m.p_x_given_z.resize(nz, nx);
  for (Eigen::Index x = 0; x < nx; ++x)
    m.q_z_given_x.row(x) = joint.row(x) / m.data_dist(x);
  for (Eigen::Index z = 0; z < nz; ++z)
    m.p_x_given_z.row(z) = joint.col(z).transpose() / z_marginal(z);
  m.validate();
  return m;
}

TabularModel perturb_p_uniform(TabularModel m, double mix) {
  const double u = 1.0 / static_cast<double>(m.n_x());
  m.p_x_given_z = (1.0 - mix) * m.p_x_given_z.array() + mix * u;
  return m;
}

Vector simulate_chain_histogram(const TabularModel& m, long steps, std::uint64_t seed) {
  const Eigen::Index nx = m.n_x(), nz = m.n_z();
  RandomStream rng(mix_seed(seed, 0x51b));

  auto draw_row = [&rng](const Matrix& rows, Eigen::Index row) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      acc += rows(row, j);
      if (u < acc) return j;
    }
    return rows.cols() - 1;
  };

  Vector counts = Vector::Zero(nx * nz);
  Eigen::Index x = 0;
  for (long i = 0; i < steps; ++i) {
    const Eigen::Index z = draw_row(m.q_z_given_x, x);
    x = draw_row(m.p_x_given_z, z);
    counts(z * nx + x) += 1.0;
  }
  return counts / static_cast<double>(steps);
}

double total_variation(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw DimensionError("total_variation: sizes differ, " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace gibbsnet

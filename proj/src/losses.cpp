#include "gibbsnet/losses.hpp"

#include <cmath>

namespace gibbsnet {
namespace {

void check_unit_interval(const Tensor& d, const char* name) {
  if ((d.value.array() <= 0.0).any() || (d.value.array() >= 1.0).any())
    throw ContractError(std::string(name) + ": discriminator values outside (0,1)");
}

Tensor log_odds(const Tensor& d) { return sub(log(d), log(add_scalar(neg(d), 1.0))); }

Tensor boundary_seeking(const Tensor& d) {
  Tensor lo = log_odds(d);
  return mul_scalar(mean(mul(lo, lo)), 0.5);
}

}  // namespace

Tensor disc_loss(const Tensor& d_clamped, const Tensor& d_unclamped) {
  check_unit_interval(d_clamped, "disc_loss");
  check_unit_interval(d_unclamped, "disc_loss");
  Tensor real_term = mean(neg(log(d_clamped)));
  Tensor fake_term = mean(neg(log(add_scalar(neg(d_unclamped), 1.0))));
  return add(real_term, fake_term);
}

Tensor gen_loss(const Tensor& d_unclamped, GeneratorLoss kind) {
  check_unit_interval(d_unclamped, "gen_loss");
  if (kind == GeneratorLoss::non_saturating) return mean(neg(log(d_unclamped)));
  return boundary_seeking(d_unclamped);
}

Tensor clamped_fool_loss(const Tensor& d_clamped, GeneratorLoss kind) {
  check_unit_interval(d_clamped, "clamped_fool_loss");
  if (kind == GeneratorLoss::non_saturating)
    return mean(neg(log(add_scalar(neg(d_clamped), 1.0))));
  return boundary_seeking(d_clamped);
}

Vector importance_weights(const RowVector& d_row) {
  Vector w(d_row.size());
  for (Eigen::Index m = 0; m < d_row.size(); ++m) {
    const double d = d_row(m);
    if (d <= 0.0 || d >= 1.0)
      throw ContractError("importance_weights: discriminator value outside (0,1)");
    w(m) = d / (1.0 - d);
  }
  return w / w.sum();
}

Tensor importance_weighted_label_loss(const Tensor& logits,
                                      const std::vector<std::vector<int>>& sampled_labels,
                                      const Matrix& d_values) {
  const Eigen::Index batch = logits.rows();
  const Eigen::Index k = logits.cols();
  if (static_cast<Eigen::Index>(sampled_labels.size()) != batch ||
      d_values.rows() != batch)
    throw DimensionError("importance_weighted_label_loss: batch sizes disagree");
  const Eigen::Index m_samples = d_values.cols();
  if (m_samples < 2)
    throw ConfigError("importance_weighted_label_loss: need M >= 2 sampled labels, got " +
                      std::to_string(m_samples));

  // Per-example class weights: sum of normalized importance weights of the
  // samples that picked each class. Plain numbers by construction.
  Matrix class_weights = Matrix::Zero(batch, k);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const auto& row_labels = sampled_labels[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row_labels.size()) != m_samples)
      throw DimensionError("importance_weighted_label_loss: label row has wrong sample count");
    Vector w = importance_weights(d_values.row(i));
    for (Eigen::Index m = 0; m < m_samples; ++m) {
      const int label = row_labels[static_cast<std::size_t>(m)];
      if (label < 0 || label >= k)
        throw ContractError("importance_weighted_label_loss: label out of range");
      class_weights(i, label) += w(m);
    }
  }

  Tensor log_probs = log(softmax_rows(logits));
  return neg(mean(sum(mul(Tensor(class_weights), log_probs), 1)));
}

AdamState AdamState::init(const std::vector<const Matrix*>& params, AdamConfig cfg) {
  AdamState st;
  st.cfg = cfg;
  for (const Matrix* p : params) {
    st.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    st.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return st;
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw DimensionError("adam_step: parameter/gradient/state counts disagree");
  state.step_count += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw DimensionError("adam_step: gradient " + shape_str(g) + " vs parameter " +
                           shape_str(p));
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v.array().matrix() + (1.0 - b2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd m_hat = m.array() / corr1;
    const Eigen::ArrayXXd v_hat = v.array() / corr2;
    p.array() -= state.cfg.lr * m_hat / (v_hat.sqrt() + state.cfg.eps);
  }
}

}  // namespace gibbsnet

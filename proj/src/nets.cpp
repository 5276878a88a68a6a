#include "gibbsnet/nets.hpp"

#include <cmath>

namespace gibbsnet {
namespace {

Tensor activate(const Tensor& t, Activation a) {
  switch (a) {
    case Activation::leaky_relu:
      return leaky_relu(t);
    case Activation::relu:
      return relu(t);
    case Activation::tanh:
      return tanh(t);
  }
  throw ContractError("activate: unknown activation");
}

Tensor layer_forward(const LayerVars& layer, const Tensor& input) {
  return add_rowwise(matmul(input, transpose(layer.weight)), layer.bias);
}

Tensor hidden_forward(const NetVars& net, const Tensor& input) {
  Tensor h = input;
  for (std::size_t i = 0; i < net.hidden.size(); ++i)
    h = activate(layer_forward(net.hidden[i], h), net.activation[i]);
  return h;
}

void check_input(const NetVars& net, const Tensor& input, const char* op) {
  if (input.cols() != net.in_dim())
    throw DimensionError(std::string(op) + ": input " + shape_str(input.value) +
                         " does not match network input width " + std::to_string(net.in_dim()));
}

GaussianHead gaussian_head(const Tensor& raw, const Matrix& eps, bool stochastic, double lo,
                           double hi) {
  const Eigen::Index dim = raw.cols() / 2;
  GaussianHead head;
  head.mean = slice_cols(raw, 0, dim);
  // bounded into [lo, hi] by a sigmoid rather than a hard cut: the gradient
  // stays alive at the edges, so a head that drifts into saturation can
  // still recover instead of freezing at the noise floor
  head.log_var = add_scalar(mul_scalar(sigmoid(slice_cols(raw, dim, dim)), hi - lo), lo);
  head.std_dev = exp(mul_scalar(head.log_var, 0.5));
  if (stochastic) {
    if (eps.rows() != raw.rows() || eps.cols() != dim)
      throw DimensionError("gaussian_head: eps " + shape_str(eps) + ", expected " +
                           shape_str(raw.rows(), dim));
    head.sample = add(head.mean, mul(head.std_dev, Tensor(eps)));
  } else {
    head.sample = head.mean;
  }
  return head;
}

}  // namespace

NetVars register_leaves(Tape& tape, const NetParams& p) {
  NetVars v;
  v.role = p.role;
  v.activation = p.activation;
  v.log_var_min = p.log_var_min;
  v.log_var_max = p.log_var_max;
  for (const Layer& l : p.hidden) v.hidden.push_back({tape.leaf(l.weight), tape.leaf(l.bias)});
  v.out = {tape.leaf(p.out.weight), tape.leaf(p.out.bias)};
  if (p.label_out) v.label_out = LayerVars{tape.leaf(p.label_out->weight), tape.leaf(p.label_out->bias)};
  return v;
}

NetVars as_constants(const NetParams& p) {
  NetVars v;
  v.role = p.role;
  v.activation = p.activation;
  v.log_var_min = p.log_var_min;
  v.log_var_max = p.log_var_max;
  for (const Layer& l : p.hidden) v.hidden.push_back({Tensor(l.weight), Tensor(l.bias)});
  v.out = {Tensor(p.out.weight), Tensor(p.out.bias)};
  if (p.label_out) v.label_out = LayerVars{Tensor(p.label_out->weight), Tensor(p.label_out->bias)};
  return v;
}

NetVars detached_view(const NetVars& src) {
  NetVars v;
  v.role = src.role;
  v.activation = src.activation;
  v.log_var_min = src.log_var_min;
  v.log_var_max = src.log_var_max;
  for (const LayerVars& l : src.hidden) v.hidden.push_back({detach(l.weight), detach(l.bias)});
  v.out = {detach(src.out.weight), detach(src.out.bias)};
  if (src.label_out)
    v.label_out = LayerVars{detach(src.label_out->weight), detach(src.label_out->bias)};
  return v;
}

std::vector<Matrix*> param_refs(NetParams& p) {
  std::vector<Matrix*> refs;
  for (Layer& l : p.hidden) {
    refs.push_back(&l.weight);
    refs.push_back(&l.bias);
  }
  refs.push_back(&p.out.weight);
  refs.push_back(&p.out.bias);
  if (p.label_out) {
    refs.push_back(&p.label_out->weight);
    refs.push_back(&p.label_out->bias);
  }
  return refs;
}

std::vector<const Matrix*> param_refs(const NetParams& p) {
  std::vector<const Matrix*> refs;
  for (const auto* m : param_refs(const_cast<NetParams&>(p))) refs.push_back(m);
  return refs;
}

std::vector<Matrix> net_grads(const Tape& tape, const NetVars& v) {
  std::vector<Matrix> grads;
  for (const LayerVars& l : v.hidden) {
    grads.push_back(tape.grad(l.weight));
    grads.push_back(tape.grad(l.bias));
  }
  grads.push_back(tape.grad(v.out.weight));
  grads.push_back(tape.grad(v.out.bias));
  if (v.label_out) {
    grads.push_back(tape.grad(v.label_out->weight));
    grads.push_back(tape.grad(v.label_out->bias));
  }
  return grads;
}

NetParams init_params(const std::vector<Eigen::Index>& sizes, std::uint64_t seed, Role role,
                      Eigen::Index label_classes, double log_var_min, double log_var_max) {
  if (sizes.size() < 2)
    throw ConfigError("init_params: need at least input and output widths, got " +
                      std::to_string(sizes.size()));
  for (Eigen::Index s : sizes)
    if (s < 1) throw ConfigError("init_params: layer width must be positive");

  RandomStream rng(mix_seed(seed, 0x1417, static_cast<std::uint64_t>(role)));
  auto he_layer = [&rng](Eigen::Index fan_in, Eigen::Index fan_out) {
    Layer l;
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    l.weight.resize(fan_out, fan_in);
    for (Eigen::Index i = 0; i < fan_out; ++i)
      for (Eigen::Index j = 0; j < fan_in; ++j) l.weight(i, j) = std * rng.normal();
    l.bias = Matrix::Zero(1, fan_out);
    return l;
  };

  if (!(log_var_min < log_var_max))
    throw ConfigError("init_params: log_var bounds must satisfy min < max");
  NetParams p;
  p.role = role;
  p.log_var_min = log_var_min;
  p.log_var_max = log_var_max;
  for (std::size_t i = 0; i + 2 < sizes.size(); ++i) {
    p.hidden.push_back(he_layer(sizes[i], sizes[i + 1]));
    p.activation.push_back(Activation::leaky_relu);
  }
  p.out = he_layer(sizes[sizes.size() - 2], sizes.back());
  if (label_classes > 0) {
    if (role != Role::decoder)
      throw ConfigError("init_params: label head is only supported on the decoder");
    p.label_out = he_layer(sizes[sizes.size() - 2], label_classes);
  }
  return p;
}

EncodeResult encode(const NetVars& net, const Tensor& x, const Matrix& eps) {
  if (net.role != Role::encoder) throw ContractError("encode: network role is not encoder");
  check_input(net, x, "encode");
  if (net.out_dim() % 2 != 0) throw DimensionError("encode: head width must be even");
  Tensor raw = layer_forward(net.out, hidden_forward(net, x));
  EncodeResult r;
  r.head = gaussian_head(raw, eps, true, net.log_var_min, net.log_var_max);
  r.z = r.head.sample;
  return r;
}

EncodeResult encode(const NetVars& net, const Tensor& x, RandomStream& rng) {
  return encode(net, x, rng.normal_matrix(x.rows(), net.out_dim() / 2));
}

DecodeResult decode(const NetVars& net, const Tensor& z, const Matrix& eps, bool stochastic) {
  if (net.role != Role::decoder) throw ContractError("decode: network role is not decoder");
  check_input(net, z, "decode");
  if (net.out_dim() % 2 != 0) throw DimensionError("decode: head width must be even");
  Tensor h = hidden_forward(net, z);
  Tensor raw = layer_forward(net.out, h);
  DecodeResult r;
  r.head = gaussian_head(raw, eps, stochastic, net.log_var_min, net.log_var_max);
  r.x = r.head.sample;
  if (net.label_out) r.label_logits = layer_forward(*net.label_out, h);
  return r;
}

DecodeResult decode(const NetVars& net, const Tensor& z, RandomStream& rng, bool stochastic) {
  Matrix eps;
  if (stochastic) eps = rng.normal_matrix(z.rows(), net.out_dim() / 2);
  return decode(net, z, eps, stochastic);
}

Tensor discriminate(const NetVars& net, const Tensor& x, const Tensor& z,
                    const std::optional<Tensor>& y_features) {
  if (net.role != Role::discriminator)
    throw ContractError("discriminate: network role is not discriminator");
  if (x.rows() != z.rows())
    throw DimensionError("discriminate: batch sizes differ, " + shape_str(x.value) + " vs " +
                         shape_str(z.value));
  Tensor joint = concat_cols(x, z);
  if (y_features) joint = concat_cols(joint, *y_features);
  check_input(net, joint, "discriminate");
  if (net.out_dim() != 1) throw DimensionError("discriminate: head width must be 1");
  Tensor logit = layer_forward(net.out, hidden_forward(net, joint));
  return clamp(sigmoid(logit), kDiscClamp, 1.0 - kDiscClamp);
}

std::vector<int> sample_labels(const Matrix& logits, RandomStream& rng) {
  std::vector<int> labels(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::ArrayXd row = logits.row(i).array();
    row -= row.maxCoeff();
    Eigen::ArrayXd probs = row.exp();
    probs /= probs.sum();
    const double u = rng.uniform01();
    double acc = 0.0;
    Eigen::Index pick = logits.cols() - 1;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      acc += probs(k);
      if (u < acc) {
        pick = k;
        break;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(pick);
  }
  return labels;
}

Matrix one_hot(const std::vector<int>& labels, Eigen::Index n_classes) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw ContractError("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                          std::to_string(n_classes) + ")");
    m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return m;
}

}  // namespace gibbsnet

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gibbsnet/ops.hpp"

// The three stochastic networks: encoder q(z|x), decoder p(x|z) and the
// joint discriminator D(x, z), plus the decoder's optional discrete label
// head for joint data-attribute modeling. All are plain MLPs; stochastic
// outputs are reparameterized diagonal Gaussians.

namespace gibbsnet {

enum class Role { encoder, decoder, discriminator };
enum class Activation { leaky_relu, relu, tanh };

struct Layer {
  Matrix weight;  // out x in
  Matrix bias;    // 1 x out
};

struct NetParams {
  Role role = Role::encoder;
  std::vector<Layer> hidden;
  std::vector<Activation> activation;  // per hidden layer
  Layer out;                           // linear head
  std::optional<Layer> label_out;      // decoder label logits head
  double log_var_min = -8.0;           // noise-injection bounds of the head
  double log_var_max = 4.0;

  Eigen::Index in_dim() const {
    return hidden.empty() ? out.weight.cols() : hidden.front().weight.cols();
  }
  Eigen::Index out_dim() const { return out.weight.rows(); }
};

// Tape-side view of a network: leaves when training, constants otherwise.
struct LayerVars {
  Tensor weight, bias;
};

struct NetVars {
  Role role = Role::encoder;
  std::vector<LayerVars> hidden;
  std::vector<Activation> activation;
  LayerVars out;
  std::optional<LayerVars> label_out;
  double log_var_min = -8.0;
  double log_var_max = 4.0;

  Eigen::Index in_dim() const {
    return hidden.empty() ? out.weight.cols() : hidden.front().weight.cols();
  }
  Eigen::Index out_dim() const { return out.weight.rows(); }
};

// default bounds of the log-variance heads; every head keeps strictly
// positive noise (ergodicity of the transition operator)
constexpr double kLogVarMin = -8.0;
constexpr double kLogVarMax = 4.0;

NetVars register_leaves(Tape& tape, const NetParams& p);
NetVars as_constants(const NetParams& p);
// value copies with no tape connection, preserving layout
NetVars detached_view(const NetVars& v);

// Canonical parameter order: hidden (W, b)..., out (W, b), label_out (W, b).
std::vector<Matrix*> param_refs(NetParams& p);
std::vector<const Matrix*> param_refs(const NetParams& p);
// Gradients after tape.backward(), aligned with param_refs order.
std::vector<Matrix> net_grads(const Tape& tape, const NetVars& v);

// He-initialized MLP: weights ~ N(0, 2/fan_in), biases zero.
// `sizes` runs input through hidden widths to the output width.
NetParams init_params(const std::vector<Eigen::Index>& sizes, std::uint64_t seed, Role role,
                      Eigen::Index label_classes = 0, double log_var_min = kLogVarMin,
                      double log_var_max = kLogVarMax);

struct GaussianHead {
  Tensor mean;
  Tensor log_var;  // already clamped
  Tensor std_dev;
  Tensor sample;
};

struct EncodeResult {
  Tensor z;
  GaussianHead head;
};

struct DecodeResult {
  Tensor x;
  GaussianHead head;
  std::optional<Tensor> label_logits;
};

// eps is the standard-normal draw; gradients flow through mean and std only.
EncodeResult encode(const NetVars& net, const Tensor& x, const Matrix& eps);
EncodeResult encode(const NetVars& net, const Tensor& x, RandomStream& rng);

DecodeResult decode(const NetVars& net, const Tensor& z, const Matrix& eps,
                    bool stochastic = true);
DecodeResult decode(const NetVars& net, const Tensor& z, RandomStream& rng,
                    bool stochastic = true);

// y_features, when present, is concatenated after (x, z) on the feature axis.
Tensor discriminate(const NetVars& net, const Tensor& x, const Tensor& z,
                    const std::optional<Tensor>& y_features = std::nullopt);

// Hard samples from softmax(logits) rows; one uniform draw per row.
std::vector<int> sample_labels(const Matrix& logits, RandomStream& rng);
Matrix one_hot(const std::vector<int>& labels, Eigen::Index n_classes);

constexpr double kDiscClamp = 1e-12;

}  // namespace gibbsnet

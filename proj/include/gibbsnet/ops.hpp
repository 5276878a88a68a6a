#pragma once

#include "gibbsnet/tensor.hpp"

// Differentiable free functions over Tensor. Every op computes its value
// eagerly and, when an input is tape-connected, records a pullback on that
// tape. Ops on constants are pure value arithmetic. Binary elementwise ops
// accept equal shapes or a 1x1 scalar on either side; nothing fancier.

namespace gibbsnet {

// matrix product [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& t);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard
Tensor neg(const Tensor& t);
Tensor add_scalar(const Tensor& t, double s);
Tensor mul_scalar(const Tensor& t, double s);

Tensor exp(const Tensor& t);
Tensor log(const Tensor& t);  // input clamped at 1e-12 before evaluation
Tensor tanh(const Tensor& t);
Tensor relu(const Tensor& t);
Tensor leaky_relu(const Tensor& t, double slope = 0.2);
Tensor sigmoid(const Tensor& t);
Tensor clamp(const Tensor& t, double lo, double hi);

// [m,n] + [1,n], gradient of the row sums over the batch axis
Tensor add_rowwise(const Tensor& m, const Tensor& row);

Tensor sum(const Tensor& t);
Tensor mean(const Tensor& t);
Tensor sum(const Tensor& t, int axis);   // axis 0: [1,n], axis 1: [m,1]
Tensor mean(const Tensor& t, int axis);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& t, Eigen::Index begin, Eigen::Index len);
Tensor softmax_rows(const Tensor& t);

constexpr double kLogFloor = 1e-12;

}  // namespace gibbsnet

#include "gibbsnet/ops.hpp"

#include <cmath>
#include <utility>

namespace gibbsnet {
namespace {

using Pullback = std::function<Matrix(const Matrix&)>;

Tape* common_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.connected() && b.connected() && a.tape != b.tape)
    throw ContractError(std::string(op) + ": operands live on different tapes");
  if (a.connected()) return a.tape;
  if (b.connected()) return b.tape;
  return nullptr;
}

Tensor record1(const Tensor& a, Matrix out, Pullback pull) {
  if (!a.connected()) return Tensor(std::move(out));
  Tape* tp = a.tape;
  const int an = a.node;
  const int id = tp->add_node(
      [an, pull = std::move(pull)](const Matrix& g, Tape& t) { t.accum_grad(an, pull(g)); },
      out.rows(), out.cols());
  return Tensor(std::move(out), tp, id);
}

Tensor record2(const Tensor& a, const Tensor& b, Matrix out, Pullback pull_a, Pullback pull_b,
               const char* op) {
  Tape* tp = common_tape(a, b, op);
  if (!tp) return Tensor(std::move(out));
  const int an = a.connected() ? a.node : -1;
  const int bn = b.connected() ? b.node : -1;
  const int id = tp->add_node(
      [an, bn, pull_a = std::move(pull_a), pull_b = std::move(pull_b)](const Matrix& g, Tape& t) {
        if (an >= 0) t.accum_grad(an, pull_a(g));
        if (bn >= 0) t.accum_grad(bn, pull_b(g));
      },
      out.rows(), out.cols());
  return Tensor(std::move(out), tp, id);
}

enum class BinShape { equal, a_scalar, b_scalar };

BinShape binary_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return BinShape::equal;
  if (a.is_scalar()) return BinShape::a_scalar;
  if (b.is_scalar()) return BinShape::b_scalar;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.value) + " and " +
                       shape_str(b.value));
}

Matrix sum_to_scalar(const Matrix& g) {
  Matrix s(1, 1);
  s(0, 0) = g.sum();
  return s;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.value) + " x " +
                         shape_str(b.value));
  Matrix out = a.value * b.value;
  const Matrix av = a.value, bv = b.value;
  return record2(
      a, b, std::move(out), [bv](const Matrix& g) { return Matrix(g * bv.transpose()); },
      [av](const Matrix& g) { return Matrix(av.transpose() * g); }, "matmul");
}

Tensor transpose(const Tensor& t) {
  return record1(t, t.value.transpose(), [](const Matrix& g) { return Matrix(g.transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  switch (binary_shape(a, b, "add")) {
    case BinShape::equal:
      return record2(
          a, b, a.value + b.value, [](const Matrix& g) { return g; },
          [](const Matrix& g) { return g; }, "add");
    case BinShape::a_scalar:
      return record2(
          a, b, Matrix((b.value.array() + a.value(0, 0)).matrix()), sum_to_scalar,
          [](const Matrix& g) { return g; }, "add");
    case BinShape::b_scalar:
      return record2(
          a, b, Matrix((a.value.array() + b.value(0, 0)).matrix()),
          [](const Matrix& g) { return g; }, sum_to_scalar, "add");
  }
  throw ContractError("add: unreachable");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  switch (binary_shape(a, b, "sub")) {
    case BinShape::equal:
      return record2(
          a, b, a.value - b.value, [](const Matrix& g) { return g; },
          [](const Matrix& g) { return Matrix(-g); }, "sub");
    case BinShape::a_scalar:
      return record2(
          a, b, Matrix((a.value(0, 0) - b.value.array()).matrix()), sum_to_scalar,
          [](const Matrix& g) { return Matrix(-g); }, "sub");
    case BinShape::b_scalar:
      return record2(
          a, b, Matrix((a.value.array() - b.value(0, 0)).matrix()),
          [](const Matrix& g) { return g; },
          [](const Matrix& g) { return Matrix(-sum_to_scalar(g)); }, "sub");
  }
  throw ContractError("sub: unreachable");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Matrix av = a.value, bv = b.value;
  switch (binary_shape(a, b, "mul")) {
    case BinShape::equal:
      return record2(
          a, b, Matrix(av.cwiseProduct(bv)),
          [bv](const Matrix& g) { return Matrix(g.cwiseProduct(bv)); },
          [av](const Matrix& g) { return Matrix(g.cwiseProduct(av)); }, "mul");
    case BinShape::a_scalar:
      return record2(
          a, b, Matrix(av(0, 0) * bv),
          [bv](const Matrix& g) { return sum_to_scalar(g.cwiseProduct(bv)); },
          [s = av(0, 0)](const Matrix& g) { return Matrix(s * g); }, "mul");
    case BinShape::b_scalar:
      return record2(
          a, b, Matrix(bv(0, 0) * av),
          [s = bv(0, 0)](const Matrix& g) { return Matrix(s * g); },
          [av](const Matrix& g) { return sum_to_scalar(g.cwiseProduct(av)); }, "mul");
  }
  throw ContractError("mul: unreachable");
}

Tensor neg(const Tensor& t) {
  return record1(t, Matrix(-t.value), [](const Matrix& g) { return Matrix(-g); });
}

Tensor add_scalar(const Tensor& t, double s) {
  return record1(t, Matrix((t.value.array() + s).matrix()),
                 [](const Matrix& g) { return g; });
}

Tensor mul_scalar(const Tensor& t, double s) {
  return record1(t, Matrix(s * t.value), [s](const Matrix& g) { return Matrix(s * g); });
}

Tensor exp(const Tensor& t) {
  Matrix out = t.value.array().exp().matrix();
  const Matrix y = out;
  return record1(t, std::move(out),
                 [y](const Matrix& g) { return Matrix(g.cwiseProduct(y)); });
}

Tensor log(const Tensor& t) {
  Matrix out = t.value.array().max(kLogFloor).log().matrix();
  const Matrix x = t.value;
  return record1(t, std::move(out), [x](const Matrix& g) {
    return Matrix((x.array() > kLogFloor).select(g.array() / x.array(), 0.0).matrix());
  });
}

Tensor tanh(const Tensor& t) {
  Matrix out = t.value.array().tanh().matrix();
  const Matrix y = out;
  return record1(t, std::move(out), [y](const Matrix& g) {
    return Matrix((g.array() * (1.0 - y.array().square())).matrix());
  });
}

Tensor relu(const Tensor& t) {
  Matrix out = t.value.array().max(0.0).matrix();
  const Matrix x = t.value;
  return record1(t, std::move(out), [x](const Matrix& g) {
    return Matrix((x.array() > 0.0).select(g, Matrix::Zero(g.rows(), g.cols())));
  });
}

Tensor leaky_relu(const Tensor& t, double slope) {
  Matrix out = (t.value.array() > 0.0).select(t.value, slope * t.value);
  const Matrix x = t.value;
  return record1(t, std::move(out), [x, slope](const Matrix& g) {
    return Matrix((x.array() > 0.0).select(g, slope * g));
  });
}

Tensor sigmoid(const Tensor& t) {
  // stable in both tails
  Matrix out(t.rows(), t.cols());
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const double x = t.value(i, j);
      out(i, j) = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                           : std::exp(x) / (1.0 + std::exp(x));
    }
  const Matrix y = out;
  return record1(t, std::move(out), [y](const Matrix& g) {
    return Matrix((g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp: lo > hi");
  Matrix out = t.value.array().max(lo).min(hi).matrix();
  const Matrix x = t.value;
  return record1(t, std::move(out), [x, lo, hi](const Matrix& g) {
    return Matrix(((x.array() >= lo) && (x.array() <= hi))
                      .select(g, Matrix::Zero(g.rows(), g.cols())));
  });
}

Tensor add_rowwise(const Tensor& m, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != m.cols())
    throw DimensionError("add_rowwise: " + shape_str(m.value) + " + " + shape_str(row.value));
  Matrix out = m.value.rowwise() + row.value.row(0);
  return record2(
      m, row, std::move(out), [](const Matrix& g) { return g; },
      [](const Matrix& g) { return Matrix(g.colwise().sum()); }, "add_rowwise");
}

Tensor sum(const Tensor& t) {
  Matrix out(1, 1);
  out(0, 0) = t.value.sum();
  const Eigen::Index r = t.rows(), c = t.cols();
  return record1(t, std::move(out), [r, c](const Matrix& g) {
    return Matrix(Matrix::Constant(r, c, g(0, 0)));
  });
}

Tensor mean(const Tensor& t) {
  Matrix out(1, 1);
  out(0, 0) = t.value.mean();
  const Eigen::Index r = t.rows(), c = t.cols();
  const double inv = 1.0 / static_cast<double>(r * c);
  return record1(t, std::move(out), [r, c, inv](const Matrix& g) {
    return Matrix(Matrix::Constant(r, c, g(0, 0) * inv));
  });
}

Tensor sum(const Tensor& t, int axis) {
  if (axis != 0 && axis != 1)
    throw DimensionError("sum: axis " + std::to_string(axis) + " out of range for rank-2 tensor");
  const Eigen::Index r = t.rows(), c = t.cols();
  if (axis == 0) {
    Matrix out = t.value.colwise().sum();
    return record1(t, std::move(out),
                   [r](const Matrix& g) { return Matrix(g.replicate(r, 1)); });
  }
  Matrix out = t.value.rowwise().sum();
  return record1(t, std::move(out),
                 [c](const Matrix& g) { return Matrix(g.replicate(1, c)); });
}

Tensor mean(const Tensor& t, int axis) {
  if (axis != 0 && axis != 1)
    throw DimensionError("mean: axis " + std::to_string(axis) + " out of range for rank-2 tensor");
  const Eigen::Index r = t.rows(), c = t.cols();
  if (axis == 0) {
    Matrix out = t.value.colwise().mean();
    const double inv = 1.0 / static_cast<double>(r);
    return record1(t, std::move(out),
                   [r, inv](const Matrix& g) { return Matrix(inv * g.replicate(r, 1)); });
  }
  Matrix out = t.value.rowwise().mean();
  const double inv = 1.0 / static_cast<double>(c);
  return record1(t, std::move(out),
                 [c, inv](const Matrix& g) { return Matrix(inv * g.replicate(1, c)); });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols: row counts differ, " + shape_str(a.value) + " vs " +
                         shape_str(b.value));
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value, b.value;
  const Eigen::Index ac = a.cols(), bc = b.cols();
  return record2(
      a, b, std::move(out), [ac](const Matrix& g) { return Matrix(g.leftCols(ac)); },
      [bc](const Matrix& g) { return Matrix(g.rightCols(bc)); }, "concat_cols");
}

Tensor slice_cols(const Tensor& t, Eigen::Index begin, Eigen::Index len) {
  if (begin < 0 || len < 0 || begin + len > t.cols())
    throw DimensionError("slice_cols: [" + std::to_string(begin) + "," +
                         std::to_string(begin + len) + ") out of " + shape_str(t.value));
  Matrix out = t.value.middleCols(begin, len);
  const Eigen::Index r = t.rows(), c = t.cols();
  return record1(t, std::move(out), [r, c, begin, len](const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    full.middleCols(begin, len) = g;
    return full;
  });
}

Tensor softmax_rows(const Tensor& t) {
  Matrix out(t.rows(), t.cols());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    Eigen::ArrayXd row = t.value.row(i).array();
    row -= row.maxCoeff();
    Eigen::ArrayXd e = row.exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  const Matrix y = out;
  return record1(t, std::move(out), [y](const Matrix& g) {
    Matrix gx(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double dot = g.row(i).dot(y.row(i));
      gx.row(i) = (y.row(i).array() * (g.row(i).array() - dot)).matrix();
    }
    return gx;
  });
}

}  // namespace gibbsnet

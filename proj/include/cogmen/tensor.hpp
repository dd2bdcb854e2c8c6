#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cogmen {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_string(Index rows, Index cols);

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

/// Row-wise softmax with max subtraction.
template <typename Derived>
MatrixX<typename Derived::Scalar> row_softmax(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const Scalar peak = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - peak).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

/// Dense rank-2 array of 64-bit floats with an optional gradient buffer.
/// Vectors are stored as 1 x n rows.
struct Tensor {
  Matrix data;
  Matrix grad;
  bool requires_grad = true;

  Tensor() = default;
  explicit Tensor(Matrix values, bool trainable = true)
      : data(std::move(values)), requires_grad(trainable) {}

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
  Index size() const { return data.size(); }
  std::vector<Index> shape() const { return {data.rows(), data.cols()}; }

  bool has_grad() const { return grad.size() != 0; }
  void zero_grad() { grad.setZero(data.rows(), data.cols()); }
  void accumulate_grad(const Matrix& g);
};

/// Seeded generator. `split` derives an independent child stream, so every
/// stochastic component can own its own reproducible sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  Rng split(std::uint64_t stream) const;
  std::uint64_t seed() const { return seed_; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

class Tape;

namespace detail {
struct NodeAccess;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  Tape* tape = nullptr;

  void accumulate(const Matrix& g) {
    if (grad.size() == 0)
      grad = g;
    else
      grad += g;
  }
};
}  // namespace detail

/// Handle to a value on a tape. Copies share the underlying node.
class Var {
 public:
  Var() = default;

  /// A value that never receives gradients and is not bound to any tape.
  static Var constant(Matrix value);

  const Matrix& value() const { return node_->value; }
  /// Adjoint after Tape::backward; empty if nothing flowed into this value.
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tape* tape() const { return node_ ? node_->tape : nullptr; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  bool valid() const { return static_cast<bool>(node_); }
  double scalar() const;

 private:
  friend class Tape;
  friend struct detail::NodeAccess;
  friend Var make_result(Matrix value, std::initializer_list<const Var*> inputs, const char* op);
  std::shared_ptr<detail::Node> node_;
};

/// Ordered record of executed operations. Adjoints run in exact reverse
/// order; a value consumed k times receives the sum of k contributions.
/// Single-threaded; one forward/backward pass per tape.
class Tape {
 public:
  enum class Mode { record, inference };

  explicit Tape(Mode mode = Mode::record) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::record; }

  /// Leaf that receives a gradient (readable through Var::grad).
  Var variable(Matrix value);
  /// Leaf bound to a model tensor. Its gradient is reported by `gradient`.
  Var parameter(const Tensor& t);

  void backward(const Var& loss);

  /// Gradient accumulated for a bound tensor, summed over every binding.
  /// Empty if the tensor was not bound or received nothing.
  Matrix gradient(const Tensor& t) const;

  std::size_t size() const { return adjoints_.size(); }

  /// Used by operations: register the adjoint of the op that just ran.
  void record(std::function<void()> adjoint) { adjoints_.push_back(std::move(adjoint)); }

 private:
  Mode mode_;
  bool done_ = false;
  std::vector<std::function<void()>> adjoints_;
  std::vector<std::pair<const Tensor*, std::shared_ptr<detail::Node>>> bound_;
};

/// Creates the output node of an op. Throws NumericalError on non-finite
/// values. The result requires a gradient iff some input does and that
/// input's tape is recording.
Var make_result(Matrix value, std::initializer_list<const Var*> inputs, const char* op);

// Differentiable operations. Shapes follow the row-major convention: a batch
// of n items with d features is an n x d matrix.

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// Adds a 1 x c row to every row of x.
Var add_row(const Var& x, const Var& row);
Var scale(const Var& x, double factor);
Var hadamard(const Var& a, const Var& b);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var softmax_rows(const Var& x);
/// Softmax of each row restricted to entries where mask != 0. Rows with no
/// admissible entry produce zeros.
Var masked_softmax_rows(const Var& x, const Matrix& mask);
/// Per-row normalisation; gamma and beta are 1 x d.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& x, Index start, Index width);
/// Inverted dropout: survivors scale by 1 / (1 - p); identity when not training.
Var dropout(const Var& x, double p, bool training, Rng& rng);
Var sum(const Var& x);
/// Mean categorical cross-entropy of integer labels against row logits.
Var cross_entropy(const Var& logits, std::span<const int> labels);
/// Mean element-wise binary cross-entropy of 0/1 targets against logits.
Var binary_cross_entropy(const Var& logits, const Matrix& targets);

/// State shared by the layers during one forward pass.
struct Pass {
  Tape& tape;
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  Var bind(const Tensor& t) const { return tape.parameter(t); }
};

/// Dropout at the pass's rate; identity outside training.
Var dropout(const Var& x, const Pass& pass);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(Index fan_in, Index fan_out, Rng& rng);

}  // namespace cogmen

#include "cogmen/tensor.hpp"

#include <sstream>

namespace cogmen {

std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << '[' << rows << 'x' << cols << ']';
  return os.str();
}

void Tensor::accumulate_grad(const Matrix& g) {
  if (g.rows() != data.rows() || g.cols() != data.cols())
    throw DimensionError("gradient shape " + shape_string(g) + " does not match tensor " +
                         shape_string(data));
  if (!has_grad())
    grad = g;
  else
    grad += g;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double Rng::normal() {
  // Box-Muller; 1 - u keeps the log argument away from zero.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below requires n > 0");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return static_cast<std::size_t>(draw % n);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

Tensor xavier_uniform(Index fan_in, Index fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return Tensor(std::move(m));
}

Var Var::constant(Matrix value) {
  Var v;
  v.node_ = std::make_shared<detail::Node>();
  v.node_->value = std::move(value);
  return v;
}

double Var::scalar() const {
  if (rows() != 1 || cols() != 1)
    throw DimensionError("scalar() on non-scalar value " + shape_string(value()));
  return value()(0, 0);
}

Var Tape::variable(Matrix value) {
  Var v = Var::constant(std::move(value));
  if (recording()) {
    v.node_->requires_grad = true;
    v.node_->tape = this;
  }
  return v;
}

Var Tape::parameter(const Tensor& t) {
  Var v = Var::constant(t.data);
  if (recording() && t.requires_grad) {
    v.node_->requires_grad = true;
    v.node_->tape = this;
    bound_.emplace_back(&t, v.node_);
  }
  return v;
}

void Tape::backward(const Var& loss) {
  if (!loss.valid() || loss.rows() != 1 || loss.cols() != 1)
    throw DimensionError("backward requires a scalar loss, got " +
                         (loss.valid() ? shape_string(loss.value()) : std::string("<empty>")));
  if (!loss.requires_grad()) return;
  if (loss.tape() != this) throw std::logic_error("loss was not recorded on this tape");
  if (done_) throw std::logic_error("backward already ran on this tape");
  done_ = true;
  loss.node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = adjoints_.rbegin(); it != adjoints_.rend(); ++it) (*it)();
}

Matrix Tape::gradient(const Tensor& t) const {
  Matrix total;
  for (const auto& [tensor, node] : bound_) {
    if (tensor != &t || node->grad.size() == 0) continue;
    if (total.size() == 0)
      total = node->grad;
    else
      total += node->grad;
  }
  return total;
}

Var make_result(Matrix value, std::initializer_list<const Var*> inputs, const char* op) {
  if (!value.allFinite())
    throw NumericalError(std::string("non-finite value produced by ") + op);
  Tape* tape = nullptr;
  for (const Var* in : inputs) {
    if (!in->requires_grad()) continue;
    if (tape != nullptr && tape != in->tape())
      throw std::logic_error(std::string(op) + ": inputs recorded on different tapes");
    tape = in->tape();
  }
  Var out = Var::constant(std::move(value));
  if (tape != nullptr && tape->recording()) {
    out.node_->requires_grad = true;
    out.node_->tape = tape;
  }
  return out;
}

}  // namespace cogmen

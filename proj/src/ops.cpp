#include <algorithm>
#include <cmath>
#include <numeric>

#include "cogmen/tensor.hpp"

namespace cogmen {

namespace detail {
struct NodeAccess {
  static std::shared_ptr<Node> node(const Var& v) { return v.node_; }
};
}  // namespace detail

namespace {

using NodePtr = std::shared_ptr<detail::Node>;

NodePtr node_of(const Var& v) { return detail::NodeAccess::node(v); }

// Records `adjoint` if `out` participates in differentiation. The closure is
// skipped when nothing reached the output.
template <typename F>
void on_backward(const Var& out, F&& adjoint) {
  if (!out.requires_grad()) return;
  NodePtr o = node_of(out);
  out.tape()->record([o, f = std::forward<F>(adjoint)]() {
    if (o->grad.size() == 0) return;
    f(o->grad);
  });
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.value()) +
                         " vs " + shape_string(b.value()));
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.value()) + " * " +
                         shape_string(b.value()));
  Var out = make_result(a.value() * b.value(), {&a, &b}, "matmul");
  NodePtr na = node_of(a), nb = node_of(b);
  on_backward(out, [na, nb](const Matrix& g) {
    if (na->requires_grad) na->accumulate(g * nb->value.transpose());
    if (nb->requires_grad) nb->accumulate(na->value.transpose() * g);
  });
  return out;
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols())
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_string(a.value()) +
                         " * " + shape_string(b.value()) + "^T");
  Var out = make_result(a.value() * b.value().transpose(), {&a, &b}, "matmul_nt");
  NodePtr na = node_of(a), nb = node_of(b);
  on_backward(out, [na, nb](const Matrix& g) {
    if (na->requires_grad) na->accumulate(g * nb->value);
    if (nb->requires_grad) nb->accumulate(g.transpose() * na->value);
  });
  return out;
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Var out = make_result(a.value() + b.value(), {&a, &b}, "add");
  NodePtr na = node_of(a), nb = node_of(b);
  on_backward(out, [na, nb](const Matrix& g) {
    if (na->requires_grad) na->accumulate(g);
    if (nb->requires_grad) nb->accumulate(g);
  });
  return out;
}

Var add_row(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols())
    throw DimensionError("add_row: row " + shape_string(row.value()) + " does not broadcast over " +
                         shape_string(x.value()));
  Matrix value = x.value();
  value.rowwise() += row.value().row(0);
  Var out = make_result(std::move(value), {&x, &row}, "add_row");
  NodePtr nx = node_of(x), nr = node_of(row);
  on_backward(out, [nx, nr](const Matrix& g) {
    if (nx->requires_grad) nx->accumulate(g);
    if (nr->requires_grad) nr->accumulate(g.colwise().sum());
  });
  return out;
}

Var scale(const Var& x, double factor) {
  Var out = make_result(x.value() * factor, {&x}, "scale");
  NodePtr nx = node_of(x);
  on_backward(out, [nx, factor](const Matrix& g) { nx->accumulate(g * factor); });
  return out;
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a, b, "hadamard");
  Var out = make_result(a.value().cwiseProduct(b.value()), {&a, &b}, "hadamard");
  NodePtr na = node_of(a), nb = node_of(b);
  on_backward(out, [na, nb](const Matrix& g) {
    if (na->requires_grad) na->accumulate(g.cwiseProduct(nb->value));
    if (nb->requires_grad) nb->accumulate(g.cwiseProduct(na->value));
  });
  return out;
}

Var relu(const Var& x) {
  Var out = make_result(x.value().cwiseMax(0.0), {&x}, "relu");
  NodePtr nx = node_of(x);
  on_backward(out, [nx](const Matrix& g) {
    nx->accumulate((nx->value.array() > 0.0).select(g, 0.0));
  });
  return out;
}

Var sigmoid(const Var& x) {
  Matrix y = x.value().unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  Var out = make_result(std::move(y), {&x}, "sigmoid");
  NodePtr nx = node_of(x), no = node_of(out);
  std::weak_ptr<detail::Node> weak = no;
  on_backward(out, [nx, weak](const Matrix& g) {
    const Matrix& y = weak.lock()->value;
    nx->accumulate(g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
  return out;
}

namespace {

// Shared adjoint of (masked) row softmax: dx = y * (g - <g, y>).
void softmax_adjoint(detail::Node& x, const Matrix& y, const Matrix& g) {
  Matrix dx(y.rows(), y.cols());
  for (Index i = 0; i < y.rows(); ++i) {
    const double dot = g.row(i).dot(y.row(i));
    dx.row(i) = y.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
  }
  x.accumulate(dx);
}

}  // namespace

Var softmax_rows(const Var& x) {
  Var out = make_result(row_softmax(x.value()), {&x}, "softmax_rows");
  NodePtr nx = node_of(x);
  std::weak_ptr<detail::Node> weak = node_of(out);
  on_backward(out, [nx, weak](const Matrix& g) { softmax_adjoint(*nx, weak.lock()->value, g); });
  return out;
}

Var masked_softmax_rows(const Var& x, const Matrix& mask) {
  if (mask.rows() != x.rows() || mask.cols() != x.cols())
    throw DimensionError("masked_softmax_rows: mask " + shape_string(mask) + " vs input " +
                         shape_string(x.value()));
  const Matrix& v = x.value();
  Matrix y = Matrix::Zero(v.rows(), v.cols());
  for (Index i = 0; i < v.rows(); ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < v.cols(); ++j)
      if (mask(i, j) != 0.0) peak = std::max(peak, v(i, j));
    if (!std::isfinite(peak)) continue;
    double total = 0.0;
    for (Index j = 0; j < v.cols(); ++j) {
      if (mask(i, j) == 0.0) continue;
      y(i, j) = std::exp(v(i, j) - peak);
      total += y(i, j);
    }
    y.row(i) /= total;
  }
  Var out = make_result(std::move(y), {&x}, "masked_softmax_rows");
  NodePtr nx = node_of(x);
  std::weak_ptr<detail::Node> weak = node_of(out);
  on_backward(out, [nx, weak](const Matrix& g) { softmax_adjoint(*nx, weak.lock()->value, g); });
  return out;
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Index d = x.cols();
  if (d < 1) throw DimensionError("layer_norm: needs at least one column");
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d)
    throw DimensionError("layer_norm: gamma " + shape_string(gamma.value()) + " / beta " +
                         shape_string(beta.value()) + " do not match width " + std::to_string(d));
  const Matrix& v = x.value();
  Matrix normed(v.rows(), d);
  Eigen::VectorXd inv_std(v.rows());
  for (Index i = 0; i < v.rows(); ++i) {
    const double mean = v.row(i).mean();
    const auto centered = (v.row(i).array() - mean).eval();
    const double var = centered.square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    normed.row(i) = (centered * inv_std(i)).matrix();
  }
  Matrix y = normed.array().rowwise() * gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  Var out = make_result(std::move(y), {&x, &gamma, &beta}, "layer_norm");
  NodePtr nx = node_of(x), ng = node_of(gamma), nb = node_of(beta);
  on_backward(out, [nx, ng, nb, normed = std::move(normed), inv_std](const Matrix& g) {
    if (ng->requires_grad) ng->accumulate(g.cwiseProduct(normed).colwise().sum());
    if (nb->requires_grad) nb->accumulate(g.colwise().sum());
    if (!nx->requires_grad) return;
    Matrix dnorm = g.array().rowwise() * ng->value.row(0).array();
    Matrix dx(g.rows(), g.cols());
    for (Index i = 0; i < g.rows(); ++i) {
      const double mean_d = dnorm.row(i).mean();
      const double mean_dn = dnorm.row(i).dot(normed.row(i)) / static_cast<double>(g.cols());
      dx.row(i) =
          inv_std(i) * (dnorm.row(i).array() - mean_d - normed.row(i).array() * mean_dn).matrix();
    }
    nx->accumulate(dx);
  });
  return out;
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  const Index rows = parts.front().rows();
  Index width = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows)
      throw DimensionError("concat_cols: row count " + std::to_string(p.rows()) + " differs from " +
                           std::to_string(rows));
    width += p.cols();
  }
  Matrix value(rows, width);
  Index at = 0;
  bool any_grad = false;
  Tape* tape = nullptr;
  for (const Var& p : parts) {
    value.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    if (p.requires_grad()) {
      any_grad = true;
      tape = p.tape();
    }
  }
  // make_result takes a fixed list; route gradient tracking through the first
  // differentiable part, the adjoint below handles every part.
  const Var* carrier = &parts.front();
  for (const Var& p : parts)
    if (p.requires_grad()) {
      carrier = &p;
      break;
    }
  Var out = make_result(std::move(value), {carrier}, "concat_cols");
  if (!any_grad || tape == nullptr) return out;
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const Var& p : parts) {
    if (p.requires_grad() && p.tape() != tape)
      throw std::logic_error("concat_cols: inputs recorded on different tapes");
    nodes.push_back(node_of(p));
  }
  on_backward(out, [nodes = std::move(nodes)](const Matrix& g) {
    Index offset = 0;
    for (const NodePtr& n : nodes) {
      if (n->requires_grad) n->accumulate(g.middleCols(offset, n->value.cols()));
      offset += n->value.cols();
    }
  });
  return out;
}

Var slice_cols(const Var& x, Index start, Index width) {
  if (start < 0 || width < 0 || start + width > x.cols())
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") outside " + shape_string(x.value()));
  Var out = make_result(x.value().middleCols(start, width), {&x}, "slice_cols");
  NodePtr nx = node_of(x);
  on_backward(out, [nx, start, width](const Matrix& g) {
    Matrix full = Matrix::Zero(nx->value.rows(), nx->value.cols());
    full.middleCols(start, width) = g;
    nx->accumulate(full);
  });
  return out;
}

Var dropout(const Var& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0))
    throw std::invalid_argument("dropout: probability " + std::to_string(p) + " outside [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < p ? 0.0 : keep_scale;
  Var out = make_result(x.value().cwiseProduct(mask), {&x}, "dropout");
  NodePtr nx = node_of(x);
  on_backward(out, [nx, mask = std::move(mask)](const Matrix& g) {
    nx->accumulate(g.cwiseProduct(mask));
  });
  return out;
}

Var dropout(const Var& x, const Pass& pass) {
  if (!pass.training || pass.dropout == 0.0) return x;
  if (pass.rng == nullptr) throw std::logic_error("dropout in training needs a generator");
  return dropout(x, pass.dropout, true, *pass.rng);
}

Var sum(const Var& x) {
  Var out = make_result(Matrix::Constant(1, 1, x.value().sum()), {&x}, "sum");
  NodePtr nx = node_of(x);
  on_backward(out, [nx](const Matrix& g) {
    nx->accumulate(Matrix::Constant(nx->value.rows(), nx->value.cols(), g(0, 0)));
  });
  return out;
}

Var cross_entropy(const Var& logits, std::span<const int> labels) {
  const Matrix& z = logits.value();
  if (static_cast<Index>(labels.size()) != z.rows())
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(z.rows()) + " rows");
  if (z.rows() == 0) throw DimensionError("cross_entropy: empty batch");
  for (int y : labels)
    if (y < 0 || y >= z.cols())
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(z.cols()) + ")");
  const Matrix probs = row_softmax(z);
  double total = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    const double peak = z.row(i).maxCoeff();
    const double lse = peak + std::log((z.row(i).array() - peak).exp().sum());
    total += lse - z(i, labels[static_cast<std::size_t>(i)]);
  }
  const double n = static_cast<double>(z.rows());
  Var out = make_result(Matrix::Constant(1, 1, total / n), {&logits}, "cross_entropy");
  NodePtr nz = node_of(logits);
  std::vector<int> gold(labels.begin(), labels.end());
  on_backward(out, [nz, probs, gold = std::move(gold), n](const Matrix& g) {
    Matrix dz = probs;
    for (std::size_t i = 0; i < gold.size(); ++i) dz(static_cast<Index>(i), gold[i]) -= 1.0;
    nz->accumulate(dz * (g(0, 0) / n));
  });
  return out;
}

Var binary_cross_entropy(const Var& logits, const Matrix& targets) {
  const Matrix& z = logits.value();
  if (targets.rows() != z.rows() || targets.cols() != z.cols())
    throw DimensionError("binary_cross_entropy: targets " + shape_string(targets) + " vs logits " +
                         shape_string(z));
  if (z.size() == 0) throw DimensionError("binary_cross_entropy: empty batch");
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    const double v = z.data()[i];
    const double t = targets.data()[i];
    if (t != 0.0 && t != 1.0)
      throw std::out_of_range("binary_cross_entropy: target " + std::to_string(t) + " is not 0/1");
    total += std::max(v, 0.0) - v * t + std::log1p(std::exp(-std::abs(v)));
  }
  const double count = static_cast<double>(z.size());
  Var out = make_result(Matrix::Constant(1, 1, total / count), {&logits}, "binary_cross_entropy");
  NodePtr nz = node_of(logits);
  on_backward(out, [nz, targets, count](const Matrix& g) {
    Matrix dz = nz->value.unaryExpr([](double v) {
      if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
      const double e = std::exp(v);
      return e / (1.0 + e);
    });
    dz -= targets;
    nz->accumulate(dz * (g(0, 0) / count));
  });
  return out;
}

}  // namespace cogmen

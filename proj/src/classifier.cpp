#include "cogmen/classifier.hpp"

namespace cogmen {

namespace {

template <typename Named, typename Params>
void collect_classifier(const std::string& prefix, Named& out, Params& p) {
  out.emplace_back(prefix + "w1", &p.w1);
  out.emplace_back(prefix + "b1", &p.b1);
  out.emplace_back(prefix + "w2", &p.w2);
  out.emplace_back(prefix + "b2", &p.b2);
}

}  // namespace

void ClassifierParams::collect(const std::string& prefix, NamedTensors& out) {
  collect_classifier(prefix, out, *this);
}

void ClassifierParams::collect(const std::string& prefix, ConstNamedTensors& out) const {
  collect_classifier(prefix, out, *this);
}

ClassifierParams make_classifier_params(Index input_dim, Index hidden_width, int num_classes,
                                        TaskMode mode, Rng& rng) {
  if (input_dim < 1 || num_classes < 1)
    throw std::invalid_argument("classifier needs input_dim >= 1 and at least one class");
  const Index hidden = hidden_width > 0 ? hidden_width : (input_dim + 1) / 2;
  ClassifierParams p;
  p.w1 = xavier_uniform(input_dim, hidden, rng);
  p.b1 = Tensor(Matrix::Zero(1, hidden));
  p.w2 = xavier_uniform(hidden, num_classes, rng);
  p.b2 = Tensor(Matrix::Zero(1, num_classes));
  p.mode = mode;
  return p;
}

Var classifier_logits(const Var& h, const ClassifierParams& params, const Pass& pass) {
  if (h.cols() != params.w1.rows())
    throw DimensionError("classifier: input width " + std::to_string(h.cols()) + " vs " +
                         std::to_string(params.w1.rows()));
  const Var hidden = relu(add_row(matmul(h, pass.bind(params.w1)), pass.bind(params.b1)));
  return add_row(matmul(hidden, pass.bind(params.w2)), pass.bind(params.b2));
}

Classification classify_logits(const Matrix& logits, TaskMode mode, double threshold) {
  Classification out;
  if (mode == TaskMode::single) {
    out.probs = row_softmax(logits);
    out.labels.resize(static_cast<std::size_t>(logits.rows()));
    for (Index i = 0; i < logits.rows(); ++i) {
      Index best = 0;
      // Strict comparison keeps the lowest index on ties.
      for (Index c = 1; c < out.probs.cols(); ++c)
        if (out.probs(i, c) > out.probs(i, best)) best = c;
      out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  } else {
    out.probs = logits.unaryExpr([](double v) {
      if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
      const double e = std::exp(v);
      return e / (1.0 + e);
    });
    out.label_bits = (out.probs.array() >= threshold).cast<double>();
  }
  return out;
}

Classification classify(const Matrix& h, const ClassifierParams& params, double threshold) {
  Tape tape(Tape::Mode::inference);
  const Pass pass{tape};
  return classify_logits(classifier_logits(Var::constant(h), params, pass).value(), params.mode,
                         threshold);
}

Var classification_loss(const Var& logits, std::span<const int> labels) {
  return cross_entropy(logits, labels);
}

Var classification_loss(const Var& logits, const Matrix& targets) {
  return binary_cross_entropy(logits, targets);
}

}  // namespace cogmen

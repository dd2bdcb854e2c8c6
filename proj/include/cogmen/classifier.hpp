#pragma once

#include <span>
#include <string>
#include <vector>

#include "cogmen/dataset.hpp"
#include "cogmen/serialize.hpp"
#include "cogmen/tensor.hpp"

namespace cogmen {

struct ClassifierParams {
  Tensor w1;  // d'' x h
  Tensor b1;  // 1 x h
  Tensor w2;  // h x C
  Tensor b2;  // 1 x C
  TaskMode mode = TaskMode::single;

  int num_classes() const { return static_cast<int>(w2.cols()); }
  void collect(const std::string& prefix, NamedTensors& out);
  void collect(const std::string& prefix, ConstNamedTensors& out) const;
};

/// hidden_width 0 selects ceil(input_dim / 2).
ClassifierParams make_classifier_params(Index input_dim, Index hidden_width, int num_classes,
                                        TaskMode mode, Rng& rng);

/// logits = ReLU(H W1 + b1) W2 + b2
Var classifier_logits(const Var& h, const ClassifierParams& params, const Pass& pass);

struct Classification {
  /// Softmax rows (single) or element-wise logistic (multi).
  Matrix probs;
  /// Single mode: argmax per row, lowest index wins ties.
  std::vector<int> labels;
  /// Multi mode: probs >= threshold as 0/1.
  Matrix label_bits;
};

Classification classify_logits(const Matrix& logits, TaskMode mode, double threshold = 0.5);
Classification classify(const Matrix& h, const ClassifierParams& params, double threshold = 0.5);

/// Single: mean cross-entropy from logits. Multi: mean per-class binary
/// cross-entropy against `targets`.
Var classification_loss(const Var& logits, std::span<const int> labels);
Var classification_loss(const Var& logits, const Matrix& targets);

}  // namespace cogmen

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogmen/dataset.hpp"

namespace cogmen {

using CountMatrix = MatrixX<std::int64_t>;

/// confusion(g, p) counts gold g predicted as p.
CountMatrix confusion_matrix(std::span<const int> gold, std::span<const int> pred, int num_classes);

struct F1Scores {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> per_class;
  std::vector<std::int64_t> support;
  /// Per-class F1 averaged with gold-support weights.
  double weighted = 0.0;
};

/// Precision, recall or F1 with a zero denominator count as 0.
F1Scores weighted_f1(std::span<const int> gold, std::span<const int> pred, int num_classes);

double accuracy(std::span<const int> gold, std::span<const int> pred);

enum class ShiftLevel { utterance, speaker };

std::string to_string(ShiftLevel level);
ShiftLevel parse_shift_level(const std::string& text);

struct ShiftSplit {
  double shift_accuracy = 0.0;
  double non_shift_accuracy = 0.0;
  std::size_t shift_count = 0;
  std::size_t non_shift_count = 0;
};

/// An utterance is a shift case when its gold label differs from the
/// reference utterance's gold label: the previous utterance (utterance level)
/// or the same speaker's previous utterance (speaker level). Utterances
/// without a reference are non-shift. An empty bucket reports accuracy 0.
ShiftSplit shift_split(std::span<const Dialogue* const> dialogues,
                       std::span<const std::vector<int>> predictions, ShiftLevel level);

/// Per class, F1 of the 0/1 outcome averaged over outcomes {0, 1} with their
/// gold supports as weights.
std::vector<double> multilabel_f1(const Matrix& gold, const Matrix& pred);

struct EvalReport {
  TaskMode mode = TaskMode::single;
  std::vector<std::string> label_names;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::int64_t> support;
  double weighted_f1 = 0.0;
  CountMatrix confusion;
  ShiftLevel shift_level = ShiftLevel::utterance;
  ShiftSplit shift;

  nlohmann::json to_json() const;
  /// Aligned table: one column per class F1, then Acc. and weighted F1.
  std::string to_table() const;
};

/// Single-label report over dialogues with aligned per-dialogue predictions.
EvalReport evaluate_single(std::span<const Dialogue* const> dialogues,
                           std::span<const std::vector<int>> predictions,
                           const std::vector<std::string>& label_names, ShiftLevel level);

/// Multi-label report: per-class binary weighted F1, accuracy as exact-match
/// ratio, weighted_f1 as the mean of the per-class values.
EvalReport evaluate_multi(std::span<const Dialogue* const> dialogues,
                          std::span<const Matrix> predictions,
                          const std::vector<std::string>& label_names);

}  // namespace cogmen

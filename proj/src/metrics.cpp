#include "cogmen/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cogmen {

CountMatrix confusion_matrix(std::span<const int> gold, std::span<const int> pred, int num_classes) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("confusion_matrix: " + std::to_string(gold.size()) + " gold vs " +
                                std::to_string(pred.size()) + " predicted labels");
  CountMatrix m = CountMatrix::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes)
      throw std::out_of_range("confusion_matrix: label outside [0, " + std::to_string(num_classes) +
                              ")");
    ++m(gold[i], pred[i]);
  }
  return m;
}

F1Scores weighted_f1(std::span<const int> gold, std::span<const int> pred, int num_classes) {
  const CountMatrix cm = confusion_matrix(gold, pred, num_classes);
  F1Scores s;
  const auto total = static_cast<double>(gold.size());
  for (int c = 0; c < num_classes; ++c) {
    const auto tp = static_cast<double>(cm(c, c));
    const auto predicted = static_cast<double>(cm.col(c).sum());
    const auto actual = static_cast<double>(cm.row(c).sum());
    const double precision = predicted > 0.0 ? tp / predicted : 0.0;
    const double recall = actual > 0.0 ? tp / actual : 0.0;
    const double f1 =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    s.precision.push_back(precision);
    s.recall.push_back(recall);
    s.per_class.push_back(f1);
    s.support.push_back(cm.row(c).sum());
    if (total > 0.0) s.weighted += f1 * actual / total;
  }
  return s;
}

double accuracy(std::span<const int> gold, std::span<const int> pred) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("accuracy: " + std::to_string(gold.size()) + " gold vs " +
                                std::to_string(pred.size()) + " predicted labels");
  if (gold.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == pred[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::string to_string(ShiftLevel level) {
  return level == ShiftLevel::utterance ? "utterance" : "speaker";
}

ShiftLevel parse_shift_level(const std::string& text) {
  if (text == "utterance") return ShiftLevel::utterance;
  if (text == "speaker") return ShiftLevel::speaker;
  throw std::invalid_argument("unknown shift level '" + text + "' (expected utterance|speaker)");
}

ShiftSplit shift_split(std::span<const Dialogue* const> dialogues,
                       std::span<const std::vector<int>> predictions, ShiftLevel level) {
  if (dialogues.size() != predictions.size())
    throw std::invalid_argument("shift_split: " + std::to_string(dialogues.size()) +
                                " dialogues vs " + std::to_string(predictions.size()) +
                                " prediction lists");
  std::size_t shift_hits = 0, non_shift_hits = 0;
  ShiftSplit out;
  for (std::size_t k = 0; k < dialogues.size(); ++k) {
    const Dialogue& d = *dialogues[k];
    const auto& pred = predictions[k];
    if (pred.size() != d.size())
      throw std::invalid_argument("shift_split: dialogue " + d.id + " has " +
                                  std::to_string(d.size()) + " utterances but " +
                                  std::to_string(pred.size()) + " predictions");
    std::vector<int> last(static_cast<std::size_t>(d.num_speakers), -1);
    int previous = -1;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Utterance& u = d.utterances[i];
      int& ref = level == ShiftLevel::utterance ? previous : last[static_cast<std::size_t>(u.speaker)];
      const bool shift = ref >= 0 && ref != u.label;
      const bool hit = pred[i] == u.label;
      if (shift) {
        ++out.shift_count;
        shift_hits += hit ? 1 : 0;
      } else {
        ++out.non_shift_count;
        non_shift_hits += hit ? 1 : 0;
      }
      ref = u.label;
    }
  }
  if (out.shift_count > 0)
    out.shift_accuracy = static_cast<double>(shift_hits) / static_cast<double>(out.shift_count);
  if (out.non_shift_count > 0)
    out.non_shift_accuracy =
        static_cast<double>(non_shift_hits) / static_cast<double>(out.non_shift_count);
  return out;
}

std::vector<double> multilabel_f1(const Matrix& gold, const Matrix& pred) {
  if (gold.rows() != pred.rows() || gold.cols() != pred.cols())
    throw std::invalid_argument("multilabel_f1: gold " + shape_string(gold) + " vs pred " +
                                shape_string(pred));
  std::vector<double> out;
  for (Index c = 0; c < gold.cols(); ++c) {
    std::vector<int> g(static_cast<std::size_t>(gold.rows())), p(g.size());
    for (Index i = 0; i < gold.rows(); ++i) {
      g[static_cast<std::size_t>(i)] = gold(i, c) != 0.0 ? 1 : 0;
      p[static_cast<std::size_t>(i)] = pred(i, c) != 0.0 ? 1 : 0;
    }
    out.push_back(weighted_f1(g, p, 2).weighted);
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json doc;
  doc["task_mode"] = cogmen::to_string(mode);
  doc["label_names"] = label_names;
  doc["total"] = total;
  doc["accuracy"] = accuracy;
  doc["per_class_f1"] = per_class_f1;
  doc["weighted_f1"] = weighted_f1;
  if (mode == TaskMode::single) {
    doc["support"] = support;
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < confusion.rows(); ++r) {
      std::vector<std::int64_t> row(confusion.row(r).data(),
                                    confusion.row(r).data() + confusion.cols());
      rows.push_back(row);
    }
    doc["confusion"] = rows;
    doc["shift"] = {{"level", cogmen::to_string(shift_level)},
                    {"shift_accuracy", shift.shift_accuracy},
                    {"non_shift_accuracy", shift.non_shift_accuracy},
                    {"shift_count", shift.shift_count},
                    {"non_shift_count", shift.non_shift_count}};
  }
  return doc;
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char cell[64];
  const auto column = [&](const std::string& text) {
    std::snprintf(cell, sizeof cell, "%10s", text.substr(0, 10).c_str());
    os << cell;
  };
  const auto number = [&](double v) {
    std::snprintf(cell, sizeof cell, "%10.2f", 100.0 * v);
    os << cell;
  };
  for (const auto& name : label_names) column(name);
  column("Acc.");
  column("wF1");
  os << '\n';
  for (double f : per_class_f1) number(f);
  number(accuracy);
  number(weighted_f1);
  os << '\n';
  if (mode == TaskMode::single) {
    std::snprintf(cell, sizeof cell, "%.2f", 100.0 * shift.shift_accuracy);
    os << "shift (" << cogmen::to_string(shift_level) << "): " << cell << "% of "
       << shift.shift_count;
    std::snprintf(cell, sizeof cell, "%.2f", 100.0 * shift.non_shift_accuracy);
    os << ", non-shift: " << cell << "% of " << shift.non_shift_count << '\n';
  }
  return os.str();
}

EvalReport evaluate_single(std::span<const Dialogue* const> dialogues,
                           std::span<const std::vector<int>> predictions,
                           const std::vector<std::string>& label_names, ShiftLevel level) {
  if (dialogues.size() != predictions.size())
    throw std::invalid_argument("evaluate: dialogue and prediction counts differ");
  std::vector<int> gold, pred;
  for (std::size_t k = 0; k < dialogues.size(); ++k) {
    const Dialogue& d = *dialogues[k];
    if (predictions[k].size() != d.size())
      throw std::invalid_argument("evaluate: misaligned predictions for dialogue " + d.id);
    for (std::size_t i = 0; i < d.size(); ++i) {
      gold.push_back(d.utterances[i].label);
      pred.push_back(predictions[k][i]);
    }
  }
  EvalReport r;
  r.mode = TaskMode::single;
  r.label_names = label_names;
  r.total = gold.size();
  const int classes = static_cast<int>(label_names.size());
  const F1Scores f1 = weighted_f1(gold, pred, classes);
  r.accuracy = gold.empty() ? 0.0 : accuracy(gold, pred);
  r.per_class_f1 = f1.per_class;
  r.support = f1.support;
  r.weighted_f1 = f1.weighted;
  r.confusion = confusion_matrix(gold, pred, classes);
  r.shift_level = level;
  r.shift = shift_split(dialogues, predictions, level);
  return r;
}

EvalReport evaluate_multi(std::span<const Dialogue* const> dialogues,
                          std::span<const Matrix> predictions,
                          const std::vector<std::string>& label_names) {
  if (dialogues.size() != predictions.size())
    throw std::invalid_argument("evaluate: dialogue and prediction counts differ");
  const auto classes = static_cast<Index>(label_names.size());
  std::size_t total = 0;
  for (const Dialogue* d : dialogues) total += d->size();
  Matrix gold(static_cast<Index>(total), classes), pred(static_cast<Index>(total), classes);
  Index row = 0;
  for (std::size_t k = 0; k < dialogues.size(); ++k) {
    const Dialogue& d = *dialogues[k];
    if (predictions[k].rows() != static_cast<Index>(d.size()) || predictions[k].cols() != classes)
      throw std::invalid_argument("evaluate: misaligned predictions for dialogue " + d.id);
    for (std::size_t i = 0; i < d.size(); ++i, ++row) {
      for (Index c = 0; c < classes; ++c)
        gold(row, c) = d.utterances[i].labels[static_cast<std::size_t>(c)];
      pred.row(row) = predictions[k].row(static_cast<Index>(i));
    }
  }
  EvalReport r;
  r.mode = TaskMode::multi;
  r.label_names = label_names;
  r.total = total;
  r.per_class_f1 = multilabel_f1(gold, pred);
  double mean = 0.0;
  for (double f : r.per_class_f1) mean += f;
  r.weighted_f1 = r.per_class_f1.empty() ? 0.0 : mean / static_cast<double>(r.per_class_f1.size());
  std::size_t exact = 0;
  for (Index i = 0; i < gold.rows(); ++i) exact += gold.row(i) == pred.row(i) ? 1 : 0;
  r.accuracy = total > 0 ? static_cast<double>(exact) / static_cast<double>(total) : 0.0;
  return r;
}

}  // namespace cogmen

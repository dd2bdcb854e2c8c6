#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cogmen/training.hpp"

namespace cogmen {

enum class StudyKind { ablation, context, window };

std::string to_string(StudyKind kind);
StudyKind parse_study_kind(const std::string& text);

struct StudyRow {
  /// One entry per key column, e.g. {"no_gnn", "atv"}.
  std::vector<std::string> key;
  /// Test weighted F1, one per seed in StudyTable::seeds order.
  std::vector<double> scores;

  double median() const;
  double mean() const;
};

struct StudyTable {
  std::string study;
  std::vector<std::string> key_columns;
  std::vector<std::uint64_t> seeds;
  std::vector<StudyRow> rows;

  /// Header: key columns, seed_<s> per seed, mean, median.
  void write_csv(std::ostream& out) const;
  std::string to_text() const;
};

/// Called after each finished cell (row index, seed index).
using CellCallback = std::function<void(std::size_t, std::size_t, double)>;

/// Every cell retrains from scratch with config.seed = seed and is scored by
/// weighted F1 on the test split (valid if the corpus has no test dialogues).
StudyTable run_ablation(const Corpus& corpus, const TrainConfig& base,
                        const std::vector<Ablation>& ablations,
                        const std::vector<ModalitySet>& modality_sets,
                        const std::vector<std::uint64_t>& seeds, const CellCallback& on_cell = {});

/// n = kUnbounded keeps whole dialogues.
StudyTable run_context_sweep(const Corpus& corpus, const TrainConfig& base,
                             const std::vector<int>& n_values,
                             const std::vector<std::uint64_t>& seeds,
                             const CellCallback& on_cell = {});

StudyTable run_window_sweep(const Corpus& corpus, const TrainConfig& base,
                            const std::vector<std::pair<int, int>>& windows,
                            const std::vector<std::uint64_t>& seeds,
                            const CellCallback& on_cell = {});

/// Score used by every study cell.
double study_score(const Corpus& corpus, const TrainConfig& config);

enum class EmbeddingStage { before_gnn, after_gnn };

std::string to_string(EmbeddingStage stage);
EmbeddingStage parse_embedding_stage(const std::string& text);

/// CSV rows (dialogue_id, utterance_idx, gold_label, v0..v{d-1}) for every
/// utterance of `split`. Multi-label gold is written as 0/1 flags joined by ';'.
void dump_embeddings(const Corpus& corpus, const ModelParams& params, const TrainConfig& config,
                     EmbeddingStage stage, Split split, std::ostream& out);

/// "{study}_{YYYYmmdd-HHMMSS}.csv" in UTC.
std::string study_file_name(const std::string& study);

}  // namespace cogmen

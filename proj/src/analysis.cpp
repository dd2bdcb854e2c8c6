#include "cogmen/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cogmen {

std::string to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::ablation: return "ablation";
    case StudyKind::context: return "context";
    case StudyKind::window: return "window";
  }
  return "?";
}

StudyKind parse_study_kind(const std::string& text) {
  if (text == "ablation") return StudyKind::ablation;
  if (text == "context") return StudyKind::context;
  if (text == "window") return StudyKind::window;
  throw std::invalid_argument("unknown study kind '" + text + "' (expected ablation|context|window)");
}

double StudyRow::median() const {
  if (scores.empty()) return 0.0;
  std::vector<double> s = scores;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double StudyRow::mean() const {
  if (scores.empty()) return 0.0;
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

void StudyTable::write_csv(std::ostream& out) const {
  for (const auto& k : key_columns) out << k << ',';
  for (auto s : seeds) out << "seed_" << s << ',';
  out << "mean,median\n";
  for (const auto& row : rows) {
    for (const auto& k : row.key) out << k << ',';
    for (double v : row.scores) out << format_double(v) << ',';
    out << format_double(row.mean()) << ',' << format_double(row.median()) << '\n';
  }
}

std::string StudyTable::to_text() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = key_columns;
  for (auto s : seeds) header.push_back("seed " + std::to_string(s));
  header.push_back("mean");
  header.push_back("median");
  cells.push_back(header);
  char buf[32];
  const auto pct = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return std::string(buf);
  };
  for (const auto& row : rows) {
    std::vector<std::string> line = row.key;
    for (double v : row.scores) line.push_back(pct(v));
    line.push_back(pct(row.mean()));
    line.push_back(pct(row.median()));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream os;
  os << study << " (test weighted F1, %)\n";
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) os << "  ";
      os << std::string(width[c] - line[c].size(), ' ') << line[c];
    }
    os << '\n';
  }
  return os.str();
}

double study_score(const Corpus& corpus, const TrainConfig& config) {
  const TrainResult r = train(corpus, config);
  const Split split = corpus.select(Split::test).empty() ? Split::valid : Split::test;
  return split_score(corpus, split, r.params, config);
}

namespace {

void check_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("study needs at least one seed");
}

void fill_row(StudyTable& table, std::vector<std::string> key, const Corpus& corpus,
              TrainConfig config, const CellCallback& on_cell) {
  StudyRow row;
  row.key = std::move(key);
  for (std::size_t s = 0; s < table.seeds.size(); ++s) {
    config.seed = table.seeds[s];
    row.scores.push_back(study_score(corpus, config));
    if (on_cell) on_cell(table.rows.size(), s, row.scores.back());
  }
  table.rows.push_back(std::move(row));
}

std::string window_label(int w) { return w == kUnbounded ? "inf" : std::to_string(w); }

}  // namespace

StudyTable run_ablation(const Corpus& corpus, const TrainConfig& base,
                        const std::vector<Ablation>& ablations,
                        const std::vector<ModalitySet>& modality_sets,
                        const std::vector<std::uint64_t>& seeds, const CellCallback& on_cell) {
  check_seeds(seeds);
  if (ablations.empty() || modality_sets.empty()) throw std::invalid_argument("empty ablation grid");
  StudyTable table{"ablation", {"ablation", "modalities"}, seeds, {}};
  for (Ablation a : ablations) {
    for (const ModalitySet& m : modality_sets) {
      TrainConfig config = base;
      config.ablation = a;
      config.modalities = m;
      fill_row(table, {to_string(a), m.to_string()}, corpus, config, on_cell);
    }
  }
  return table;
}

StudyTable run_context_sweep(const Corpus& corpus, const TrainConfig& base,
                             const std::vector<int>& n_values,
                             const std::vector<std::uint64_t>& seeds, const CellCallback& on_cell) {
  check_seeds(seeds);
  if (n_values.empty()) throw std::invalid_argument("empty context grid");
  StudyTable table{"context", {"context"}, seeds, {}};
  for (int n : n_values) {
    if (n != kUnbounded && n < 1) throw std::invalid_argument("context length must be >= 1 or inf");
    const Corpus truncated = n == kUnbounded ? corpus : truncate_context(corpus, n);
    fill_row(table, {window_label(n)}, truncated, base, on_cell);
  }
  return table;
}

StudyTable run_window_sweep(const Corpus& corpus, const TrainConfig& base,
                            const std::vector<std::pair<int, int>>& windows,
                            const std::vector<std::uint64_t>& seeds, const CellCallback& on_cell) {
  check_seeds(seeds);
  if (windows.empty()) throw std::invalid_argument("empty window grid");
  StudyTable table{"window", {"past", "future"}, seeds, {}};
  for (const auto& [p, f] : windows) {
    if (p < kUnbounded || f < kUnbounded) throw std::invalid_argument("negative window");
    TrainConfig config = base;
    config.window_past = p;
    config.window_future = f;
    fill_row(table, {window_label(p), window_label(f)}, corpus, config, on_cell);
  }
  return table;
}

std::string to_string(EmbeddingStage stage) {
  return stage == EmbeddingStage::before_gnn ? "before_gnn" : "after_gnn";
}

EmbeddingStage parse_embedding_stage(const std::string& text) {
  if (text == "before_gnn") return EmbeddingStage::before_gnn;
  if (text == "after_gnn") return EmbeddingStage::after_gnn;
  throw std::invalid_argument("unknown stage '" + text + "' (expected before_gnn|after_gnn)");
}

void dump_embeddings(const Corpus& corpus, const ModelParams& params, const TrainConfig& config,
                     EmbeddingStage stage, Split split, std::ostream& out) {
  bool header = false;
  for (const Dialogue* d : corpus.select(split)) {
    ForwardTrace trace;
    forward_dialogue(*d, params, config, &trace);
    const Matrix& h = stage == EmbeddingStage::before_gnn ? trace.encoded : trace.graph_output;
    if (!header) {
      out << "dialogue_id,utterance_idx,gold_label";
      for (Index c = 0; c < h.cols(); ++c) out << ",v" << c;
      out << '\n';
      header = true;
    }
    for (std::size_t i = 0; i < d->size(); ++i) {
      const Utterance& u = d->utterances[i];
      out << d->id << ',' << i << ',';
      if (corpus.mode == TaskMode::single) {
        out << u.label;
      } else {
        for (std::size_t k = 0; k < u.labels.size(); ++k) out << (k > 0 ? ";" : "") << u.labels[k];
      }
      for (Index c = 0; c < h.cols(); ++c) out << ',' << format_double(h(static_cast<Index>(i), c));
      out << '\n';
    }
  }
}

std::string study_file_name(const std::string& study) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return study + "_" + buf + ".csv";
}

}  // namespace cogmen

#include "cogmen/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace cogmen {

int relation_type_id(int src_speaker, int dst_speaker, Direction direction, int num_speakers) {
  if (num_speakers < 1) throw std::out_of_range("relation_type_id: num_speakers must be >= 1");
  if (src_speaker < 0 || src_speaker >= num_speakers || dst_speaker < 0 ||
      dst_speaker >= num_speakers)
    throw std::out_of_range("relation_type_id: speaker (" + std::to_string(src_speaker) + ", " +
                            std::to_string(dst_speaker) + ") outside [0, " +
                            std::to_string(num_speakers) + ")");
  return static_cast<int>(direction) * num_speakers * num_speakers + src_speaker * num_speakers +
         dst_speaker;
}

int relation_type_id(const RelationType& type, int num_speakers) {
  return relation_type_id(type.src_speaker, type.dst_speaker, type.direction, num_speakers);
}

RelationType relation_from_id(int id, int num_speakers) {
  if (id < 0 || id >= relation_count(num_speakers))
    throw std::out_of_range("relation id " + std::to_string(id) + " outside [0, " +
                            std::to_string(relation_count(num_speakers)) + ")");
  const int square = num_speakers * num_speakers;
  RelationType t;
  t.direction = id >= square ? Direction::future : Direction::past;
  t.src_speaker = (id % square) / num_speakers;
  t.dst_speaker = id % num_speakers;
  return t;
}

Matrix ConversationGraph::neighbor_mask() const {
  Matrix mask = Matrix::Zero(num_nodes, num_nodes);
  for (const Edge& e : edges) mask(e.dst, e.src) = 1.0;
  return mask;
}

std::string to_string(EdgeMode mode) {
  return mode == EdgeMode::both_directions ? "both_directions" : "single_direction";
}

EdgeMode parse_edge_mode(const std::string& text) {
  if (text == "both_directions") return EdgeMode::both_directions;
  if (text == "single_direction") return EdgeMode::single_direction;
  throw std::invalid_argument("unknown edge_mode '" + text +
                              "' (expected both_directions|single_direction)");
}

ConversationGraph build_graph(std::span<const int> speakers, int num_speakers,
                              const GraphOptions& options) {
  if (options.past < kUnbounded || options.future < kUnbounded)
    throw std::invalid_argument("window sizes must be >= 0 or unbounded");
  const auto n = static_cast<Index>(speakers.size());
  const Index past = options.past == kUnbounded ? n : options.past;
  const Index future = options.future == kUnbounded ? n : options.future;
  const auto spk = [&](Index i) { return speakers[static_cast<std::size_t>(i)]; };
  const auto type = [&](Index from, Index to, Direction dir) {
    return relation_type_id(spk(from), spk(to), dir, num_speakers);
  };

  ConversationGraph g;
  g.num_nodes = n;
  g.relation_count = relation_count(num_speakers);
  for (Index i = 0; i < n; ++i) {
    if (options.self_loops) g.edges.push_back({i, i, type(i, i, Direction::past)});
    const Index lo = std::max<Index>(0, i - past);
    const Index hi = std::min<Index>(n - 1, i + future);
    for (Index j = lo; j <= hi; ++j) {
      if (j == i) continue;
      if (options.mode == EdgeMode::both_directions) {
        // i sends into every j of its own window; Past when the sender is earlier.
        const Direction dir = i < j ? Direction::past : Direction::future;
        g.edges.push_back({i, j, type(i, j, dir)});
      } else if (j < i) {
        g.edges.push_back({j, i, type(j, i, Direction::past)});
      } else {
        g.edges.push_back({i, j, type(i, j, Direction::future)});
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

ConversationGraph build_graph(const Dialogue& dialogue, const GraphOptions& options) {
  const auto speakers = dialogue.speakers();
  return build_graph(speakers, dialogue.num_speakers, options);
}

ConversationGraph collapse_relations(const ConversationGraph& graph) {
  ConversationGraph out = graph;
  // Edge count is preserved. In single_direction mode a Past/Future pair on
  // the same (src, dst) becomes a repeated edge and is counted twice.
  for (Edge& e : out.edges) e.type = 0;
  out.relation_count = 1;
  return out;
}

nlohmann::json graph_to_json(const ConversationGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : graph.edges) edges.push_back({e.src, e.dst, e.type});
  return {{"n", graph.num_nodes}, {"edges", std::move(edges)}, {"relation_count", graph.relation_count}};
}

TransitionStats transition_stats(const Corpus& corpus, TransitionLevel level) {
  if (corpus.mode != TaskMode::single)
    throw std::invalid_argument("transition_stats requires a single-label corpus");
  const int c = corpus.num_classes();
  TransitionStats stats;
  stats.counts = Matrix::Zero(c, c);
  for (const auto& d : corpus.dialogues) {
    std::vector<int> last(static_cast<std::size_t>(d.num_speakers), -1);
    int previous = -1;
    for (const auto& u : d.utterances) {
      int& ref = level == TransitionLevel::utterance ? previous
                                                     : last[static_cast<std::size_t>(u.speaker)];
      if (ref >= 0) stats.counts(ref, u.label) += 1.0;
      ref = u.label;
    }
  }
  stats.normalized = stats.counts;
  for (Index r = 0; r < c; ++r) {
    const double total = stats.counts.row(r).sum();
    if (total > 0.0) stats.normalized.row(r) /= total;
  }
  return stats;
}

}  // namespace cogmen

#pragma once

#include <compare>
#include <span>
#include <vector>

#include <json.hpp>

#include "cogmen/dataset.hpp"

namespace cogmen {

enum class Direction : int { past = 0, future = 1 };

/// (sending speaker, receiving speaker, temporal direction).
struct RelationType {
  int src_speaker = 0;
  int dst_speaker = 0;
  Direction direction = Direction::past;
  bool operator==(const RelationType&) const = default;
};

/// 2 * M^2 relation types for M speakers.
constexpr int relation_count(int num_speakers) { return 2 * num_speakers * num_speakers; }

/// id = direction * M^2 + src_speaker * M + dst_speaker, Past = 0, Future = 1.
int relation_type_id(int src_speaker, int dst_speaker, Direction direction, int num_speakers);
int relation_type_id(const RelationType& type, int num_speakers);
RelationType relation_from_id(int id, int num_speakers);

/// Directed edge carrying messages from `src` into `dst`.
struct Edge {
  Index src = 0;
  Index dst = 0;
  int type = 0;
  auto operator<=>(const Edge&) const = default;
};

struct ConversationGraph {
  Index num_nodes = 0;
  std::vector<Edge> edges;
  int relation_count = 0;

  /// In-neighbour indicator: mask(i, j) = 1 iff some edge j -> i exists.
  Matrix neighbor_mask() const;
  bool operator==(const ConversationGraph&) const = default;
};

/// Window size meaning "every utterance in the dialogue".
inline constexpr int kUnbounded = -1;

enum class EdgeMode {
  /// Every node u sends into each v in [u-P, u+F], typed Past when u is the
  /// earlier of the two and Future otherwise. Messages flow both ways in time.
  both_directions,
  /// Each window pair is materialised from the earlier node into the later
  /// one: j < i gives j -> i (Past), j > i gives i -> j (Future).
  single_direction,
};

std::string to_string(EdgeMode mode);
EdgeMode parse_edge_mode(const std::string& text);

struct GraphOptions {
  int past = 10;
  int future = 10;
  EdgeMode mode = EdgeMode::both_directions;
  /// Adds (i -> i) typed (speaker, speaker, Past) per node.
  bool self_loops = true;
};

/// Structure depends only on the speaker sequence, the windows, and the
/// speaker count that sizes the relation space.
ConversationGraph build_graph(std::span<const int> speakers, int num_speakers,
                              const GraphOptions& options);
ConversationGraph build_graph(const Dialogue& dialogue, const GraphOptions& options);

/// Same edges, every relation mapped to type 0.
ConversationGraph collapse_relations(const ConversationGraph& graph);

/// {"n": int, "edges": [[src, dst, type], ...], "relation_count": int}
nlohmann::json graph_to_json(const ConversationGraph& graph);

enum class TransitionLevel { utterance, speaker };

struct TransitionStats {
  /// counts(a, b): label a followed by label b.
  Matrix counts;
  /// Rows of `counts` scaled to sum to 1 (zero rows stay zero).
  Matrix normalized;
};

/// Utterance level counts consecutive utterances regardless of speaker;
/// speaker level counts consecutive utterances of the same speaker.
TransitionStats transition_stats(const Corpus& corpus, TransitionLevel level);

}  // namespace cogmen

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "cogmen/dataset.hpp"
#include "cogmen/graph.hpp"

namespace cogmen {

enum class Ablation { full, no_gnn, no_relations };

std::string to_string(Ablation ablation);
Ablation parse_ablation(const std::string& text);

/// Every knob of a training run. The flat key/value form (see `set` and
/// `to_map`) is what config files, the CLI and checkpoints use.
struct TrainConfig {
  double learning_rate = 1e-4;
  double dropout = 0.1;
  int gnn_heads = 7;
  /// Encoder depth.
  int seq_context_layers = 4;
  int encoder_heads = 4;
  int window_past = 10;
  int window_future = 10;
  int epochs = 50;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::full;
  ModalitySet modalities;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 10;
  /// Dialogues per optimizer step.
  int accumulate = 1;
  EdgeMode edge_mode = EdgeMode::both_directions;
  bool self_loops = true;
  /// ReLU between the RGCN and graph-transformer layers.
  bool gnn_relu = false;
  int rgcn_layers = 1;
  int gt_layers = 1;
  /// Width of the graph layers; 0 keeps the fused feature width.
  Index graph_dim = 0;
  /// 0 selects ceil(graph width / 2).
  Index classifier_hidden = 0;
  /// 0 selects 4 x feature width.
  Index ffn_width = 0;
  double threshold = 0.5;
  double layer_norm_eps = 1e-5;

  /// Throws std::invalid_argument on an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
  static TrainConfig from_map(const std::map<std::string, std::string>& values);
  /// Sorted "key = value" lines.
  std::string to_text() const;
  std::uint64_t fingerprint() const;
  void validate() const;

  GraphOptions graph_options() const;
};

/// Flat "key = value" file; '#' starts a comment.
TrainConfig read_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});

std::string format_double(double value);

}  // namespace cogmen

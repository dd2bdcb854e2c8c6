#pragma once

#include <span>
#include <vector>

#include "cogmen/classifier.hpp"
#include "cogmen/config.hpp"
#include "cogmen/encoder.hpp"
#include "cogmen/gnn.hpp"

namespace cogmen {

/// Shape facts a model is built for.
struct ModelSpec {
  Index input_dim = 0;
  int num_classes = 0;
  TaskMode mode = TaskMode::single;
  /// Speaker count that sizes the relation space (the corpus maximum).
  int num_speakers = 1;
};

ModelSpec model_spec(const Corpus& corpus, const TrainConfig& config);

/// Encoder -> RGCN -> graph transformer -> classifier. The graph layers are
/// absent under the no_gnn ablation; no_relations keeps a single relation.
struct ModelParams {
  ModelSpec spec;
  EncoderParams encoder;
  std::vector<RgcnParams> rgcn;
  std::vector<GraphTransformerParams> graph_transformer;
  ClassifierParams classifier;

  NamedTensors named();
  ConstNamedTensors named() const;
  std::size_t parameter_count() const;
};

ModelParams init_model(const ModelSpec& spec, const TrainConfig& config, Rng& rng);

/// Graph used by the model for a speaker sequence, with the ablation applied.
ConversationGraph model_graph(std::span<const int> speakers, const ModelSpec& spec,
                              const TrainConfig& config);

/// Intermediate values of one forward pass.
struct ForwardTrace {
  Matrix encoded;
  Matrix graph_output;
  ConversationGraph graph;
};

Var forward_logits(const Matrix& features, std::span<const int> speakers, const ModelParams& params,
                   const TrainConfig& config, const Pass& pass, ForwardTrace* trace = nullptr);

/// Inference-mode forward of one dialogue. Deterministic.
Classification forward_dialogue(const Dialogue& dialogue, const ModelParams& params,
                                 const TrainConfig& config, ForwardTrace* trace = nullptr);

/// Same, on an explicit feature matrix (e.g. with rows masked out).
Classification forward_features(const Matrix& features, std::span<const int> speakers,
                                const ModelParams& params, const TrainConfig& config,
                                ForwardTrace* trace = nullptr);

}  // namespace cogmen

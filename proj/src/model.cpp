#include "cogmen/model.hpp"

namespace cogmen {

ModelSpec model_spec(const Corpus& corpus, const TrainConfig& config) {
  ModelSpec spec;
  spec.input_dim = corpus.dims.width(config.modalities);
  if (spec.input_dim == 0)
    throw std::invalid_argument("modalities '" + config.modalities.to_string() +
                                "' select no features in this corpus");
  spec.num_classes = corpus.num_classes();
  spec.mode = corpus.mode;
  spec.num_speakers = corpus.max_speakers();
  return spec;
}

NamedTensors ModelParams::named() {
  NamedTensors out;
  encoder.collect("encoder.", out);
  for (std::size_t i = 0; i < rgcn.size(); ++i) rgcn[i].collect("rgcn." + std::to_string(i) + ".", out);
  for (std::size_t i = 0; i < graph_transformer.size(); ++i)
    graph_transformer[i].collect("graph_transformer." + std::to_string(i) + ".", out);
  classifier.collect("classifier.", out);
  return out;
}

ConstNamedTensors ModelParams::named() const {
  ConstNamedTensors out;
  encoder.collect("encoder.", out);
  for (std::size_t i = 0; i < rgcn.size(); ++i) rgcn[i].collect("rgcn." + std::to_string(i) + ".", out);
  for (std::size_t i = 0; i < graph_transformer.size(); ++i)
    graph_transformer[i].collect("graph_transformer." + std::to_string(i) + ".", out);
  classifier.collect("classifier.", out);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += static_cast<std::size_t>(t->size());
  return n;
}

ModelParams init_model(const ModelSpec& spec, const TrainConfig& config, Rng& rng) {
  config.validate();
  ModelParams p;
  p.spec = spec;
  p.encoder = make_encoder_params(spec.input_dim, config.seq_context_layers, config.encoder_heads,
                                  config.ffn_width, rng, config.layer_norm_eps);
  Index width = spec.input_dim;
  if (config.ablation != Ablation::no_gnn) {
    const Index graph_dim = config.graph_dim > 0 ? config.graph_dim : spec.input_dim;
    const int relations =
        config.ablation == Ablation::no_relations ? 1 : relation_count(spec.num_speakers);
    for (int l = 0; l < config.rgcn_layers; ++l) {
      p.rgcn.push_back(make_rgcn_params(width, graph_dim, relations, rng));
      width = graph_dim;
    }
    for (int l = 0; l < config.gt_layers; ++l)
      p.graph_transformer.push_back(make_graph_transformer_params(width, graph_dim, config.gnn_heads, rng));
  }
  p.classifier = make_classifier_params(width, config.classifier_hidden, spec.num_classes, spec.mode, rng);
  return p;
}

ConversationGraph model_graph(std::span<const int> speakers, const ModelSpec& spec,
                              const TrainConfig& config) {
  ConversationGraph g = build_graph(speakers, spec.num_speakers, config.graph_options());
  if (config.ablation == Ablation::no_relations) g = collapse_relations(g);
  return g;
}

Var forward_logits(const Matrix& features, std::span<const int> speakers, const ModelParams& params,
                   const TrainConfig& config, const Pass& pass, ForwardTrace* trace) {
  if (static_cast<Index>(speakers.size()) != features.rows())
    throw DimensionError("forward: " + std::to_string(speakers.size()) + " speakers for " +
                         std::to_string(features.rows()) + " utterances");
  Var h = encode(Var::constant(features), params.encoder, pass);
  if (trace != nullptr) trace->encoded = h.value();
  if (config.ablation == Ablation::no_gnn || params.rgcn.empty()) {
    h = bypass_gnn(h);
  } else {
    const ConversationGraph graph = model_graph(speakers, params.spec, config);
    for (const auto& layer : params.rgcn) h = rgcn_forward(h, graph, layer, pass);
    if (config.gnn_relu) h = relu(h);
    for (const auto& layer : params.graph_transformer)
      h = graph_transformer_forward(h, graph, layer, pass);
    if (trace != nullptr) trace->graph = graph;
  }
  if (trace != nullptr) trace->graph_output = h.value();
  return classifier_logits(h, params.classifier, pass);
}

Classification forward_features(const Matrix& features, std::span<const int> speakers,
                                const ModelParams& params, const TrainConfig& config,
                                ForwardTrace* trace) {
  Tape tape(Tape::Mode::inference);
  const Pass pass{tape};
  const Var logits = forward_logits(features, speakers, params, config, pass, trace);
  return classify_logits(logits.value(), params.spec.mode, config.threshold);
}

Classification forward_dialogue(const Dialogue& dialogue, const ModelParams& params,
                                const TrainConfig& config, ForwardTrace* trace) {
  const auto speakers = dialogue.speakers();
  return forward_features(fuse_dialogue(dialogue, config.modalities), speakers, params, config, trace);
}

}  // namespace cogmen

#include "cogmen/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "cogmen/serialize.hpp"

namespace cogmen {

std::string to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::full:
      return "full";
    case Ablation::no_gnn:
      return "no_gnn";
    case Ablation::no_relations:
      return "no_relations";
  }
  return "full";
}

Ablation parse_ablation(const std::string& text) {
  if (text == "full") return Ablation::full;
  if (text == "no_gnn") return Ablation::no_gnn;
  if (text == "no_relations") return Ablation::no_relations;
  throw std::invalid_argument("unknown ablation '" + text + "' (expected full|no_gnn|no_relations)");
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw std::invalid_argument("config key " + key + ": '" + v + "' is not a number");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw std::invalid_argument("config key " + key + ": '" + v + "' is not an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("config key " + key + ": '" + v + "' is not a boolean");
}

int to_window(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "unbounded") return kUnbounded;
  const int w = to_int<int>(key, v);
  if (w < kUnbounded) throw std::invalid_argument("config key " + key + ": negative window");
  return w;
}

std::string window_text(int w) { return w == kUnbounded ? "inf" : std::to_string(w); }

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "learning_rate") learning_rate = to_double(key, v);
  else if (key == "dropout") dropout = to_double(key, v);
  else if (key == "gnn_heads") gnn_heads = to_int<int>(key, v);
  else if (key == "seq_context_layers") seq_context_layers = to_int<int>(key, v);
  else if (key == "encoder_heads") encoder_heads = to_int<int>(key, v);
  else if (key == "window_past") window_past = to_window(key, v);
  else if (key == "window_future") window_future = to_window(key, v);
  else if (key == "epochs") epochs = to_int<int>(key, v);
  else if (key == "seed") seed = to_int<std::uint64_t>(key, v);
  else if (key == "ablation") ablation = parse_ablation(v);
  else if (key == "modalities") modalities = ModalitySet::parse(v);
  else if (key == "beta1") beta1 = to_double(key, v);
  else if (key == "beta2") beta2 = to_double(key, v);
  else if (key == "adam_eps") adam_eps = to_double(key, v);
  else if (key == "patience") patience = to_int<int>(key, v);
  else if (key == "accumulate") accumulate = to_int<int>(key, v);
  else if (key == "edge_mode") edge_mode = parse_edge_mode(v);
  else if (key == "self_loops") self_loops = to_bool(key, v);
  else if (key == "gnn_relu") gnn_relu = to_bool(key, v);
  else if (key == "rgcn_layers") rgcn_layers = to_int<int>(key, v);
  else if (key == "gt_layers") gt_layers = to_int<int>(key, v);
  else if (key == "graph_dim") graph_dim = to_int<Index>(key, v);
  else if (key == "classifier_hidden") classifier_hidden = to_int<Index>(key, v);
  else if (key == "ffn_width") ffn_width = to_int<Index>(key, v);
  else if (key == "threshold") threshold = to_double(key, v);
  else if (key == "layer_norm_eps") layer_norm_eps = to_double(key, v);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"learning_rate", format_double(learning_rate)},
      {"dropout", format_double(dropout)},
      {"gnn_heads", std::to_string(gnn_heads)},
      {"seq_context_layers", std::to_string(seq_context_layers)},
      {"encoder_heads", std::to_string(encoder_heads)},
      {"window_past", window_text(window_past)},
      {"window_future", window_text(window_future)},
      {"epochs", std::to_string(epochs)},
      {"seed", std::to_string(seed)},
      {"ablation", to_string(ablation)},
      {"modalities", modalities.to_string()},
      {"beta1", format_double(beta1)},
      {"beta2", format_double(beta2)},
      {"adam_eps", format_double(adam_eps)},
      {"patience", std::to_string(patience)},
      {"accumulate", std::to_string(accumulate)},
      {"edge_mode", to_string(edge_mode)},
      {"self_loops", self_loops ? "true" : "false"},
      {"gnn_relu", gnn_relu ? "true" : "false"},
      {"rgcn_layers", std::to_string(rgcn_layers)},
      {"gt_layers", std::to_string(gt_layers)},
      {"graph_dim", std::to_string(graph_dim)},
      {"classifier_hidden", std::to_string(classifier_hidden)},
      {"ffn_width", std::to_string(ffn_width)},
      {"threshold", format_double(threshold)},
      {"layer_norm_eps", format_double(layer_norm_eps)},
  };
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& values) {
  TrainConfig c;
  for (const auto& [k, v] : values) c.set(k, v);
  return c;
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : to_map()) os << k << " = " << v << '\n';
  return os.str();
}

std::uint64_t TrainConfig::fingerprint() const { return fnv1a64(to_text()); }

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (gnn_heads < 1) fail("gnn_heads must be >= 1");
  if (seq_context_layers < 0) fail("seq_context_layers must be >= 0");
  if (encoder_heads < 1) fail("encoder_heads must be >= 1");
  if (epochs < 0) fail("epochs must be >= 0");
  if (patience < 1) fail("patience must be >= 1");
  if (accumulate < 1) fail("accumulate must be >= 1");
  if (rgcn_layers < 1 || gt_layers < 1) fail("rgcn_layers and gt_layers must be >= 1");
  if (graph_dim < 0 || classifier_hidden < 0 || ffn_width < 0) fail("widths must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (!(layer_norm_eps > 0.0)) fail("layer_norm_eps must be > 0");
}

GraphOptions TrainConfig::graph_options() const {
  GraphOptions g;
  g.past = window_past;
  g.future = window_future;
  g.mode = edge_mode;
  g.self_loops = self_loops;
  return g;
}

TrainConfig read_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  return read_config(in, std::move(base));
}

}  // namespace cogmen

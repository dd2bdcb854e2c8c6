// cogmen command-line driver.
//
// Exit codes: 0 success, 1 configuration / corpus / usage error, 2 numerical abort.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cogmen/analysis.hpp"

namespace fs = std::filesystem;
using namespace cogmen;

namespace {

constexpr const char* kOutEnv = "COGMEN_OUT";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return env;
  return "runs";
}

fs::path prepare_out(const std::string& flag) {
  const fs::path out = resolve_out(flag);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw UsageError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) s += (i > 1 ? " " : "") + std::string(argv[i]);
  return s;
}

/// Config file (optional), then --set key=value overrides, then --seed.
TrainConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides,
                           const std::optional<std::uint64_t>& seed) {
  TrainConfig config = path.empty() ? TrainConfig{} : load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed) config.seed = *seed;
  config.validate();
  return config;
}

void write_manifest(const fs::path& out, const std::string& command, const std::string& args,
                    const TrainConfig* config, const std::string& corpus_path,
                    const std::string& corpus_fp, const nlohmann::json& artifacts) {
  nlohmann::json m;
  m["tool"] = "cogmen";
  m["version"] = COGMEN_VERSION;
  m["command"] = command;
  m["arguments"] = args;
  if (config != nullptr) {
    m["config"] = config->to_map();
    m["config_fingerprint"] = hex64(config->fingerprint());
    m["seed"] = config->seed;
  }
  if (!corpus_path.empty()) {
    m["corpus"] = corpus_path;
    m["corpus_fingerprint"] = corpus_fp;
  }
  m["artifacts"] = artifacts;
  write_text(out / ("manifest_" + command + ".json"), m.dump(2) + "\n");
}

const Dialogue& find_dialogue(const Corpus& corpus, const std::string& id) {
  const Dialogue* d = corpus.find(id);
  if (d == nullptr) throw UsageError("unknown dialogue id '" + id + "'");
  return *d;
}

Checkpoint load_matching_checkpoint(const std::string& path, const Corpus& corpus) {
  Checkpoint ck = load_checkpoint(path);
  const std::string fp = corpus_fingerprint(corpus);
  if (ck.corpus_fingerprint != fp)
    throw UsageError("corpus fingerprint " + fp + " does not match checkpoint fingerprint " +
                     ck.corpus_fingerprint);
  return ck;
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

int parse_window(const std::string& text) {
  if (text == "inf") return kUnbounded;
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || v < 0) throw UsageError("bad window value '" + text + "'");
  return v;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(text)) {
    try {
      seeds.push_back(std::stoull(s));
    } catch (const std::exception&) {
      throw UsageError("bad seed '" + s + "'");
    }
  }
  if (seeds.empty()) throw UsageError("--seeds needs at least one value");
  return seeds;
}

std::string direction_name(Direction d) { return d == Direction::past ? "past" : "future"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"COGMEN: contextualized graph models for emotion recognition in conversation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", COGMEN_VERSION);

  std::string corpus_path, config_path, out_flag, checkpoint_path, dialogue_id;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    cmd->add_option("--out", out_flag, std::string("Output directory (default $") + kOutEnv + " or ./runs)");
    if (needs_config) {
      cmd->add_option("--config", config_path, "Flat key = value config file");
      cmd->add_option("--set", overrides, "Override a config key: key=value")->take_all();
      cmd->add_option("--seed", seed, "Random seed");
    }
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, history and manifest");
  train_cmd->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
  add_common(train_cmd, true);
  bool quiet = false;
  train_cmd->add_flag("--quiet", quiet, "No per-epoch output");

  std::string split_name = "test", shift_level = "utterance";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--corpus", corpus_path)->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path)->required();
  eval_cmd->add_option("--split", split_name, "train|valid|test");
  eval_cmd->add_option("--shift-level", shift_level, "utterance|speaker");
  add_common(eval_cmd, false);

  std::string past = "10", future = "10", edge_mode = "both_directions";
  bool no_self_loops = false;
  auto* graph_cmd = app.add_subcommand("graph", "Export one dialogue's relation graph as JSON");
  graph_cmd->add_option("--corpus", corpus_path)->required();
  graph_cmd->add_option("--dialogue-id", dialogue_id)->required();
  graph_cmd->add_option("--past", past, "Past window (integer or inf)");
  graph_cmd->add_option("--future", future, "Future window (integer or inf)");
  graph_cmd->add_option("--edge-mode", edge_mode, "both_directions|single_direction");
  graph_cmd->add_flag("--no-self-loops", no_self_loops);
  add_common(graph_cmd, false);

  auto* mask_cmd = app.add_subcommand("mask", "Per-utterance masking F1 series for one dialogue");
  mask_cmd->add_option("--corpus", corpus_path)->required();
  mask_cmd->add_option("--checkpoint", checkpoint_path)->required();
  mask_cmd->add_option("--dialogue-id", dialogue_id)->required();
  add_common(mask_cmd, false);

  std::string kind, grid, modalities = "atv", seeds_text = "0,1,2";
  auto* study_cmd = app.add_subcommand("study", "Ablation, context-truncation or window sweep");
  study_cmd->add_option("--corpus", corpus_path)->required();
  study_cmd->add_option("--kind", kind, "ablation|context|window")->required();
  study_cmd->add_option("--grid", grid,
                        "ablation: full,no_gnn,no_relations; context: inf,10,3; window: 0:0,4:4,inf:inf")
      ->required();
  study_cmd->add_option("--modalities", modalities, "Ablation only: comma-separated sets, e.g. atv,at,t");
  study_cmd->add_option("--seeds", seeds_text, "Comma-separated seeds");
  add_common(study_cmd, true);

  SynthSpec synth;
  std::string dependency = "none", synth_name = "synth.jsonl";
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
  synth_cmd->add_option("--dependency", dependency, "none|neighbor");
  synth_cmd->add_option("--dialogues", synth.num_dialogues);
  synth_cmd->add_option("--utterances", synth.utterances_per_dialogue);
  synth_cmd->add_option("--speakers", synth.num_speakers);
  synth_cmd->add_option("--classes", synth.num_classes);
  synth_cmd->add_option("--noise", synth.noise);
  std::string dims_text;
  synth_cmd->add_option("--dims", dims_text, "Feature widths audio,text,video (default 8,16,8)");
  synth_cmd->add_option("--valid-fraction", synth.valid_fraction);
  synth_cmd->add_option("--test-fraction", synth.test_fraction);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--name", synth_name, "File name inside the output directory");
  add_common(synth_cmd, false);

  std::string level = "utterance";
  auto* trans_cmd = app.add_subcommand("transitions", "Label transition counts");
  trans_cmd->add_option("--corpus", corpus_path)->required();
  trans_cmd->add_option("--level", level, "utterance|speaker");

  std::string stage = "after_gnn";
  auto* embed_cmd = app.add_subcommand("embed", "Dump utterance embeddings before or after the graph layers");
  embed_cmd->add_option("--corpus", corpus_path)->required();
  embed_cmd->add_option("--checkpoint", checkpoint_path)->required();
  embed_cmd->add_option("--stage", stage, "before_gnn|after_gnn");
  embed_cmd->add_option("--split", split_name, "train|valid|test");
  add_common(embed_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string args = join_args(argc, argv);

  try {
    if (*train_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      const TrainConfig config = resolve_config(config_path, overrides, seed);
      const fs::path out = prepare_out(out_flag);
      const TrainResult r = train(corpus, config, [&](const EpochRecord& e) {
        if (!quiet)
          std::cout << "epoch " << e.epoch << "  loss " << format_double(e.train_loss) << "  valid_wf1 "
                    << format_double(e.valid_wf1) << '\n';
      });
      Checkpoint ck{config, r.params, r.optimizer, r.best_epoch, r.best_valid_wf1,
                    corpus_fingerprint(corpus)};
      save_checkpoint(ck, (out / "checkpoint.json").string());
      std::ostringstream history;
      write_history_csv(history, r.history);
      write_text(out / "history.csv", history.str());
      write_manifest(out, "train", args, &config, corpus_path, ck.corpus_fingerprint,
                     {{"checkpoint", (out / "checkpoint.json").string()},
                      {"history", (out / "history.csv").string()}});
      std::cout << "best epoch " << r.best_epoch << ", valid weighted F1 "
                << format_double(r.best_valid_wf1) << '\n';
    } else if (*eval_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      const Checkpoint ck = load_matching_checkpoint(checkpoint_path, corpus);
      const Split split = parse_split(split_name);
      const EvalReport report = evaluate(corpus, split, ck.params, ck.config, parse_shift_level(shift_level));
      const fs::path out = prepare_out(out_flag);
      const fs::path json_path = out / ("eval_" + split_name + ".json");
      write_text(json_path, report.to_json().dump(2) + "\n");
      write_manifest(out, "eval", args, &ck.config, corpus_path, ck.corpus_fingerprint,
                     {{"report", json_path.string()}, {"checkpoint", checkpoint_path}});
      std::cout << report.to_table();
    } else if (*graph_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      const Dialogue& d = find_dialogue(corpus, dialogue_id);
      GraphOptions opts;
      opts.past = parse_window(past);
      opts.future = parse_window(future);
      opts.mode = parse_edge_mode(edge_mode);
      opts.self_loops = !no_self_loops;
      const int speakers = std::max(d.num_speakers, corpus.max_speakers());
      const auto spk = d.speakers();
      const ConversationGraph g = build_graph(spk, speakers, opts);
      nlohmann::json doc = graph_to_json(g);
      doc["dialogue_id"] = d.id;
      doc["speakers"] = spk;
      nlohmann::json relations = nlohmann::json::array();
      for (const Edge& e : g.edges) {
        const RelationType t = relation_from_id(e.type, speakers);
        relations.push_back({{"src", e.src},
                             {"dst", e.dst},
                             {"src_speaker", t.src_speaker},
                             {"dst_speaker", t.dst_speaker},
                             {"direction", direction_name(t.direction)}});
      }
      doc["relations"] = std::move(relations);
      const fs::path out = prepare_out(out_flag);
      const fs::path path = out / ("graph_" + d.id + ".json");
      write_text(path, doc.dump(2) + "\n");
      write_manifest(out, "graph", args, nullptr, corpus_path, corpus_fingerprint(corpus),
                     {{"graph", path.string()}});
      std::cout << doc.dump(2) << '\n';
    } else if (*mask_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      const Checkpoint ck = load_matching_checkpoint(checkpoint_path, corpus);
      const Dialogue& d = find_dialogue(corpus, dialogue_id);
      const MaskImportance m = mask_importance(d, ck.params, ck.config);
      std::ostringstream csv;
      csv << "masked_utterance,weighted_f1\nnone," << format_double(m.baseline) << '\n';
      for (std::size_t k = 0; k < m.masked.size(); ++k) csv << k << ',' << format_double(m.masked[k]) << '\n';
      const fs::path out = prepare_out(out_flag);
      const fs::path path = out / ("mask_" + d.id + ".csv");
      write_text(path, csv.str());
      write_manifest(out, "mask", args, &ck.config, corpus_path, ck.corpus_fingerprint,
                     {{"series", path.string()}, {"checkpoint", checkpoint_path}});
      std::cout << csv.str();
    } else if (*study_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      const TrainConfig config = resolve_config(config_path, overrides, seed);
      const auto seeds = parse_seeds(seeds_text);
      const StudyKind k = parse_study_kind(kind);
      const auto progress = [](std::size_t row, std::size_t s, double score) {
        std::cerr << "cell " << row << " seed#" << s << ": " << format_double(score) << '\n';
      };
      StudyTable table;
      if (k == StudyKind::ablation) {
        std::vector<Ablation> ablations;
        for (const auto& a : split_list(grid)) ablations.push_back(parse_ablation(a));
        std::vector<ModalitySet> sets;
        for (const auto& m : split_list(modalities)) sets.push_back(ModalitySet::parse(m));
        table = run_ablation(corpus, config, ablations, sets, seeds, progress);
      } else if (k == StudyKind::context) {
        std::vector<int> ns;
        for (const auto& n : split_list(grid)) ns.push_back(parse_window(n));
        table = run_context_sweep(corpus, config, ns, seeds, progress);
      } else {
        std::vector<std::pair<int, int>> windows;
        for (const auto& pf : split_list(grid)) {
          const auto parts = split_list(pf, ':');
          if (parts.size() != 2) throw UsageError("window grid entries look like P:F, got '" + pf + "'");
          windows.emplace_back(parse_window(parts[0]), parse_window(parts[1]));
        }
        table = run_window_sweep(corpus, config, windows, seeds, progress);
      }
      const fs::path out = prepare_out(out_flag);
      const fs::path path = out / study_file_name(table.study);
      std::ostringstream csv;
      table.write_csv(csv);
      write_text(path, csv.str());
      write_manifest(out, "study", args, &config, corpus_path, corpus_fingerprint(corpus),
                     {{"table", path.string()}});
      std::cout << table.to_text();
    } else if (*synth_cmd) {
      if (dependency == "none") synth.dependency = Dependency::none;
      else if (dependency == "neighbor") synth.dependency = Dependency::neighbor;
      else throw UsageError("unknown dependency '" + dependency + "' (expected none|neighbor)");
      if (!dims_text.empty()) {
        const auto parts = split_list(dims_text);
        if (parts.size() != 3) throw UsageError("--dims expects three comma-separated widths");
        try {
          synth.dims = {std::stol(parts[0]), std::stol(parts[1]), std::stol(parts[2])};
        } catch (const std::exception&) {
          throw UsageError("bad --dims '" + dims_text + "'");
        }
      }
      const Corpus corpus = synth_corpus(synth);
      const fs::path out = prepare_out(out_flag);
      const fs::path path = out / synth_name;
      save_corpus(corpus, path.string());
      write_manifest(out, "synth", args, nullptr, path.string(), corpus_fingerprint(corpus),
                     {{"corpus", path.string()}});
      std::cout << path.string() << '\n';
    } else if (*trans_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      TransitionLevel lv;
      if (level == "utterance") lv = TransitionLevel::utterance;
      else if (level == "speaker") lv = TransitionLevel::speaker;
      else throw UsageError("unknown level '" + level + "' (expected utterance|speaker)");
      const TransitionStats s = transition_stats(corpus, lv);
      nlohmann::json doc;
      doc["level"] = level;
      doc["label_names"] = corpus.label_names;
      doc["counts"] = matrix_to_json(s.counts);
      doc["normalized"] = matrix_to_json(s.normalized);
      std::cout << doc.dump(2) << '\n';
    } else if (*embed_cmd) {
      const Corpus corpus = load_corpus(corpus_path);
      const Checkpoint ck = load_matching_checkpoint(checkpoint_path, corpus);
      const EmbeddingStage st = parse_embedding_stage(stage);
      std::ostringstream csv;
      dump_embeddings(corpus, ck.params, ck.config, st, parse_split(split_name), csv);
      const fs::path out = prepare_out(out_flag);
      const fs::path path = out / ("embeddings_" + stage + "_" + split_name + ".csv");
      write_text(path, csv.str());
      write_manifest(out, "embed", args, &ck.config, corpus_path, ck.corpus_fingerprint,
                     {{"embeddings", path.string()}, {"checkpoint", checkpoint_path}});
      std::cout << path.string() << '\n';
    }
  } catch (const TrainingAborted& e) {
    std::cerr << "error: numerical abort: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical abort: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

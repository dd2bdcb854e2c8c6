#include "cogmen/training.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace cogmen {

void Adam::step(const NamedTensors& params, double grad_scale) {
  if (state_.m.empty()) {
    for (const auto& [name, t] : params) {
      state_.m.push_back(Matrix::Zero(t->rows(), t->cols()));
      state_.v.push_back(Matrix::Zero(t->rows(), t->cols()));
      state_.steps.push_back(0);
    }
  }
  if (state_.m.size() != params.size())
    throw std::logic_error("optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = *params[i].second;
    if (!t.has_grad() || !t.requires_grad) continue;
    const Matrix g = t.grad * grad_scale;
    Matrix& m = state_.m[i];
    Matrix& v = state_.v[i];
    const auto step = ++state_.steps[i];
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step));
    t.data.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    t.grad.resize(0, 0);
  }
}

Var dialogue_loss(const Dialogue& dialogue, const ModelParams& params, const TrainConfig& config,
                  const Pass& pass) {
  const auto speakers = dialogue.speakers();
  const Var logits =
      forward_logits(fuse_dialogue(dialogue, config.modalities), speakers, params, config, pass);
  if (params.spec.mode == TaskMode::single) {
    std::vector<int> gold;
    gold.reserve(dialogue.size());
    for (const auto& u : dialogue.utterances) gold.push_back(u.label);
    return classification_loss(logits, gold);
  }
  Matrix targets(static_cast<Index>(dialogue.size()), params.spec.num_classes);
  for (std::size_t i = 0; i < dialogue.size(); ++i)
    for (int c = 0; c < params.spec.num_classes; ++c)
      targets(static_cast<Index>(i), c) = dialogue.utterances[i].labels[static_cast<std::size_t>(c)];
  return classification_loss(logits, targets);
}

Predictions predict(std::span<const Dialogue* const> dialogues, const ModelParams& params,
                    const TrainConfig& config) {
  Predictions p;
  for (const Dialogue* d : dialogues) {
    Classification c = forward_dialogue(*d, params, config);
    p.dialogues.push_back(d);
    p.labels.push_back(std::move(c.labels));
    p.label_bits.push_back(std::move(c.label_bits));
    p.probs.push_back(std::move(c.probs));
  }
  return p;
}

EvalReport evaluate(const Corpus& corpus, Split split, const ModelParams& params,
                    const TrainConfig& config, ShiftLevel level) {
  const auto dialogues = corpus.select(split);
  const Predictions p = predict(dialogues, params, config);
  if (corpus.mode == TaskMode::single)
    return evaluate_single(p.dialogues, p.labels, corpus.label_names, level);
  return evaluate_multi(p.dialogues, p.label_bits, corpus.label_names);
}

double split_score(const Corpus& corpus, Split split, const ModelParams& params,
                   const TrainConfig& config) {
  return evaluate(corpus, split, params, config).weighted_f1;
}

TrainResult train(const Corpus& corpus, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto train_set = corpus.select(Split::train);
  const auto valid_set = corpus.select(Split::valid);
  if (train_set.empty()) throw std::invalid_argument("corpus has no train dialogues");
  if (valid_set.empty()) throw std::invalid_argument("corpus has no valid dialogues");

  const Rng root(config.seed);
  Rng init_rng = root.split(1);
  Rng dropout_rng = root.split(2);
  Rng order_rng = root.split(3);

  TrainResult result;
  ModelParams params = init_model(model_spec(corpus, config), config, init_rng);
  NamedTensors named = params.named();
  Adam adam(config.learning_rate, config.beta1, config.beta2, config.adam_eps);

  result.params = params;
  result.best_valid_wf1 = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_total = 0.0;
    int pending = 0;
    for (std::size_t idx : order) {
      const Dialogue& d = *train_set[idx];
      Tape tape;
      const Pass pass{tape, true, config.dropout, &dropout_rng};
      double loss_value = 0.0;
      try {
        const Var loss = dialogue_loss(d, params, config, pass);
        loss_value = loss.scalar();
        if (!std::isfinite(loss_value)) throw NumericalError("non-finite loss");
        tape.backward(loss);
      } catch (const NumericalError& e) {
        throw TrainingAborted("epoch " + std::to_string(epoch) + ", dialogue " + d.id + ": " +
                              e.what());
      }
      for (const auto& [name, t] : named) {
        const Matrix g = tape.gradient(*t);
        if (g.size() != 0) t->accumulate_grad(g);
      }
      loss_total += loss_value;
      if (++pending == config.accumulate) {
        adam.step(named, 1.0 / pending);
        pending = 0;
      }
    }
    if (pending > 0) adam.step(named, 1.0 / pending);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_total / static_cast<double>(order.size());
    record.valid_wf1 = split_score(corpus, Split::valid, params, config);
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    const bool better = record.valid_wf1 > result.best_valid_wf1 ||
                        (record.valid_wf1 == result.best_valid_wf1 && record.train_loss < best_loss);
    if (better) {
      result.params = params;
      result.optimizer = adam.state();
      result.best_epoch = epoch;
      result.best_valid_wf1 = record.valid_wf1;
      best_loss = record.train_loss;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  if (result.best_epoch == 0) result.best_valid_wf1 = split_score(corpus, Split::valid, params, config);
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,valid_wf1\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.valid_wf1) << '\n';
}

std::string corpus_fingerprint(const Corpus& corpus) {
  std::ostringstream os;
  write_corpus(corpus, os);
  return hex64(fnv1a64(os.str()));
}

nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json doc;
  doc["magic"] = kCheckpointMagic;
  doc["version"] = kCheckpointVersion;
  doc["config"] = c.config.to_map();
  doc["config_fingerprint"] = hex64(c.config.fingerprint());
  doc["corpus_fingerprint"] = c.corpus_fingerprint;
  doc["epoch"] = c.epoch;
  doc["valid_wf1"] = c.valid_wf1;
  doc["spec"] = {{"input_dim", c.params.spec.input_dim},
                 {"num_classes", c.params.spec.num_classes},
                 {"task_mode", to_string(c.params.spec.mode)},
                 {"num_speakers", c.params.spec.num_speakers}};
  doc["params"] = tensors_to_json(c.params.named());
  nlohmann::json opt = nlohmann::json::object();
  const auto names = c.params.named();
  if (!c.optimizer.m.empty()) {
    if (c.optimizer.m.size() != names.size())
      throw std::logic_error("optimizer state does not match the parameter list");
    for (std::size_t i = 0; i < names.size(); ++i)
      opt[names[i].first] = {{"m", matrix_to_json(c.optimizer.m[i])},
                             {"v", matrix_to_json(c.optimizer.v[i])},
                             {"step", c.optimizer.steps[i]}};
  }
  doc["optimizer"] = std::move(opt);
  return doc;
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  if (doc.value("magic", std::string()) != kCheckpointMagic)
    throw std::runtime_error("not a checkpoint (bad magic)");
  if (doc.value("version", -1) != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version");
  Checkpoint c;
  c.config = TrainConfig::from_map(doc.at("config").get<std::map<std::string, std::string>>());
  c.corpus_fingerprint = doc.at("corpus_fingerprint").get<std::string>();
  c.epoch = doc.at("epoch").get<int>();
  c.valid_wf1 = doc.at("valid_wf1").get<double>();
  const auto& s = doc.at("spec");
  ModelSpec spec;
  spec.input_dim = s.at("input_dim").get<Index>();
  spec.num_classes = s.at("num_classes").get<int>();
  spec.mode = s.at("task_mode").get<std::string>() == "multi" ? TaskMode::multi : TaskMode::single;
  spec.num_speakers = s.at("num_speakers").get<int>();
  Rng scratch(0);
  c.params = init_model(spec, c.config, scratch);
  tensors_from_json(doc.at("params"), c.params.named());
  const auto& opt = doc.at("optimizer");
  if (!opt.empty()) {
    for (const auto& [name, t] : c.params.named()) {
      const auto& entry = opt.at(name);
      c.optimizer.m.push_back(matrix_from_json(entry.at("m")));
      c.optimizer.v.push_back(matrix_from_json(entry.at("v")));
      c.optimizer.steps.push_back(entry.at("step").get<std::int64_t>());
    }
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << checkpoint_to_json(checkpoint).dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

namespace {

double dialogue_score(const Dialogue& d, const Classification& c, const ModelSpec& spec) {
  if (spec.mode == TaskMode::single) {
    std::vector<int> gold;
    for (const auto& u : d.utterances) gold.push_back(u.label);
    return weighted_f1(gold, c.labels, spec.num_classes).weighted;
  }
  Matrix gold(static_cast<Index>(d.size()), spec.num_classes);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (int k = 0; k < spec.num_classes; ++k)
      gold(static_cast<Index>(i), k) = d.utterances[i].labels[static_cast<std::size_t>(k)];
  const auto per_class = multilabel_f1(gold, c.label_bits);
  double mean = 0.0;
  for (double f : per_class) mean += f;
  return mean / static_cast<double>(per_class.size());
}

}  // namespace

MaskImportance mask_importance(const Dialogue& dialogue, const ModelParams& params,
                               const TrainConfig& config) {
  const Matrix features = fuse_dialogue(dialogue, config.modalities);
  const auto speakers = dialogue.speakers();
  MaskImportance out;
  out.baseline = dialogue_score(dialogue, forward_features(features, speakers, params, config),
                                params.spec);
  for (Index k = 0; k < features.rows(); ++k) {
    Matrix masked = features;
    masked.row(k).setZero();
    out.masked.push_back(
        dialogue_score(dialogue, forward_features(masked, speakers, params, config), params.spec));
  }
  return out;
}

}  // namespace cogmen

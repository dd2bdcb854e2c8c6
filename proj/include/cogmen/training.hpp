#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogmen/metrics.hpp"
#include "cogmen/model.hpp"

namespace cogmen {

/// Adaptive-moment optimizer state. Moments and step counts are kept per
/// tensor; a tensor with no gradient in a step is left untouched.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::vector<std::int64_t> steps;
};

class Adam {
 public:
  Adam(double learning_rate, double beta1, double beta2, double eps)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies grad * grad_scale to every tensor holding a gradient, then
  /// clears the gradients.
  void step(const NamedTensors& params, double grad_scale = 1.0);

  const AdamState& state() const { return state_; }
  void set_state(AdamState s) { state_ = std::move(s); }

 private:
  double lr_, beta1_, beta2_, eps_;
  AdamState state_;
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_wf1 = 0.0;
};

struct TrainResult {
  /// Parameters of the best validation epoch.
  ModelParams params;
  AdamState optimizer;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_valid_wf1 = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// One dialogue per forward pass, `accumulate` dialogues per optimizer step,
/// dialogue order reshuffled every epoch. Keeps the epoch with the highest
/// validation weighted F1 (ties go to the lower training loss) and stops after
/// `patience` epochs without improvement. Throws TrainingAborted on a
/// non-finite loss, naming the dialogue.
TrainResult train(const Corpus& corpus, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean loss of one dialogue, as used for the gradient step.
Var dialogue_loss(const Dialogue& dialogue, const ModelParams& params, const TrainConfig& config,
                  const Pass& pass);

struct Predictions {
  std::vector<const Dialogue*> dialogues;
  std::vector<std::vector<int>> labels;  // single mode
  std::vector<Matrix> label_bits;        // multi mode
  std::vector<Matrix> probs;
};

Predictions predict(std::span<const Dialogue* const> dialogues, const ModelParams& params,
                    const TrainConfig& config);

EvalReport evaluate(const Corpus& corpus, Split split, const ModelParams& params,
                    const TrainConfig& config, ShiftLevel level = ShiftLevel::utterance);

/// Weighted F1 (single) or mean per-class F1 (multi) over a split.
double split_score(const Corpus& corpus, Split split, const ModelParams& params,
                   const TrainConfig& config);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

/// Hex FNV-1a of the corpus in its canonical JSONL form.
std::string corpus_fingerprint(const Corpus& corpus);

struct Checkpoint {
  TrainConfig config;
  ModelParams params;
  AdamState optimizer;
  int epoch = 0;
  double valid_wf1 = 0.0;
  std::string corpus_fingerprint;
};

inline constexpr const char* kCheckpointMagic = "cogmen.checkpoint";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct MaskImportance {
  double baseline = 0.0;
  /// masked[k]: dialogue score with utterance k's fused features zeroed.
  std::vector<double> masked;
};

/// Zeroes one utterance's fused feature vector at a time (node and edges stay)
/// and scores the dialogue's predictions against gold.
MaskImportance mask_importance(const Dialogue& dialogue, const ModelParams& params,
                               const TrainConfig& config);

}  // namespace cogmen

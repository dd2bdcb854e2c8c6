#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cogmen/tensor.hpp"

namespace cogmen {

enum class TaskMode { single, multi };
enum class Split { train, valid, test };

std::string to_string(TaskMode mode);
std::string to_string(Split split);
Split parse_split(const std::string& text);

/// Subset of {audio, text, video}. Fusion order is always a, t, v.
struct ModalitySet {
  bool audio = true;
  bool text = true;
  bool video = true;

  /// Accepts any arrangement of the letters a/t/v, e.g. "atv", "ta", "v".
  static ModalitySet parse(const std::string& letters);
  std::string to_string() const;
  bool empty() const { return !audio && !text && !video; }
  bool operator==(const ModalitySet&) const = default;
};

struct ModalityDims {
  Index audio = 0;
  Index text = 0;
  Index video = 0;

  Index width(const ModalitySet& active) const {
    return (active.audio ? audio : 0) + (active.text ? text : 0) + (active.video ? video : 0);
  }
  bool operator==(const ModalityDims&) const = default;
};

struct Utterance {
  int speaker = 0;
  std::optional<RowVector> audio;
  std::optional<RowVector> text;
  std::optional<RowVector> video;
  /// Single-label mode.
  int label = 0;
  /// Multi-label mode: one 0/1 entry per class.
  std::vector<int> labels;
  std::optional<std::string> raw_text;
};

/// Exact equality, including feature values bit for bit.
bool operator==(const Utterance& a, const Utterance& b);

struct Dialogue {
  std::string id;
  int num_speakers = 1;
  Split split = Split::train;
  std::vector<Utterance> utterances;

  std::size_t size() const { return utterances.size(); }
  std::vector<int> speakers() const;
  bool operator==(const Dialogue&) const = default;
};

struct Corpus {
  std::vector<std::string> label_names;
  ModalityDims dims;
  TaskMode mode = TaskMode::single;
  std::vector<Dialogue> dialogues;

  int num_classes() const { return static_cast<int>(label_names.size()); }
  int max_speakers() const;
  std::size_t utterance_count() const;
  std::vector<const Dialogue*> select(Split split) const;
  const Dialogue* find(const std::string& dialogue_id) const;
  bool operator==(const Corpus&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingModalityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

RowVector fuse_features(const Utterance& u, const ModalitySet& active);
/// n x d matrix of fused features, one row per utterance.
Matrix fuse_dialogue(const Dialogue& d, const ModalitySet& active);

/// Checks every corpus invariant; throws CorpusError naming the offender.
void validate(const Corpus& corpus);

/// JSONL: a header line {"label_names", "dims": {"a","t","v"}, "task_mode"}
/// followed by one dialogue object per line.
Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::string& path);
void write_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::string& path);

enum class Dependency { none, neighbor };

struct SynthSpec {
  int num_dialogues = 200;
  int utterances_per_dialogue = 8;
  int num_speakers = 2;
  int num_classes = 4;
  ModalityDims dims{8, 16, 8};
  Dependency dependency = Dependency::none;
  std::uint64_t seed = 0;
  double noise = 0.3;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
};

/// Gaussian clusters, one per class, per modality. In `none` mode an
/// utterance's label is its own cluster; in `neighbor` mode it is the cluster
/// of the previous utterance (the first utterance keeps its own). Speakers
/// take turns round-robin from a random starting speaker.
Corpus synth_corpus(const SynthSpec& spec);

/// Splits each dialogue into consecutive chunks of at most n utterances.
/// A dialogue no longer than n is kept as is.
Corpus truncate_context(const Corpus& corpus, int n);

}  // namespace cogmen

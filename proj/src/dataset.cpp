#include "cogmen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace cogmen {

using nlohmann::json;

std::string to_string(TaskMode mode) { return mode == TaskMode::single ? "single" : "multi"; }

std::string to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::valid:
      return "valid";
    case Split::test:
      return "test";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "valid") return Split::valid;
  if (text == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + text + "' (expected train|valid|test)");
}

ModalitySet ModalitySet::parse(const std::string& letters) {
  ModalitySet set{false, false, false};
  for (char c : letters) {
    switch (c) {
      case 'a':
        set.audio = true;
        break;
      case 't':
        set.text = true;
        break;
      case 'v':
        set.video = true;
        break;
      default:
        throw std::invalid_argument("unknown modality '" + std::string(1, c) + "' in '" + letters +
                                    "'");
    }
  }
  if (set.empty()) throw std::invalid_argument("empty modality set");
  return set;
}

std::string ModalitySet::to_string() const {
  std::string s;
  if (audio) s += 'a';
  if (text) s += 't';
  if (video) s += 'v';
  return s;
}

namespace {
bool same_vector(const std::optional<RowVector>& a, const std::optional<RowVector>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->size() == b->size() && std::equal(a->data(), a->data() + a->size(), b->data());
}
}  // namespace

bool operator==(const Utterance& a, const Utterance& b) {
  return a.speaker == b.speaker && a.label == b.label && a.labels == b.labels &&
         a.raw_text == b.raw_text && same_vector(a.audio, b.audio) && same_vector(a.text, b.text) &&
         same_vector(a.video, b.video);
}

std::vector<int> Dialogue::speakers() const {
  std::vector<int> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(u.speaker);
  return out;
}

int Corpus::max_speakers() const {
  int m = 1;
  for (const auto& d : dialogues) m = std::max(m, d.num_speakers);
  return m;
}

std::size_t Corpus::utterance_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogues) n += d.size();
  return n;
}

std::vector<const Dialogue*> Corpus::select(Split split) const {
  std::vector<const Dialogue*> out;
  for (const auto& d : dialogues)
    if (d.split == split) out.push_back(&d);
  return out;
}

const Dialogue* Corpus::find(const std::string& dialogue_id) const {
  for (const auto& d : dialogues)
    if (d.id == dialogue_id) return &d;
  return nullptr;
}

RowVector fuse_features(const Utterance& u, const ModalitySet& active) {
  if (active.empty()) throw MissingModalityError("no active modality");
  const auto need = [](const std::optional<RowVector>& v, const char* name) -> const RowVector& {
    if (!v) throw MissingModalityError(std::string("utterance lacks requested modality ") + name);
    return *v;
  };
  Index width = 0;
  if (active.audio) width += need(u.audio, "audio").size();
  if (active.text) width += need(u.text, "text").size();
  if (active.video) width += need(u.video, "video").size();
  RowVector out(width);
  Index at = 0;
  for (const auto& [on, part] : {std::pair{active.audio, &u.audio}, std::pair{active.text, &u.text},
                                 std::pair{active.video, &u.video}}) {
    if (!on) continue;
    out.segment(at, (*part)->size()) = **part;
    at += (*part)->size();
  }
  return out;
}

Matrix fuse_dialogue(const Dialogue& d, const ModalitySet& active) {
  if (d.utterances.empty()) throw CorpusError("dialogue " + d.id + " is empty");
  RowVector first = fuse_features(d.utterances.front(), active);
  Matrix x(static_cast<Index>(d.size()), first.size());
  x.row(0) = first;
  for (std::size_t i = 1; i < d.size(); ++i) {
    RowVector row = fuse_features(d.utterances[i], active);
    if (row.size() != x.cols())
      throw DimensionError("dialogue " + d.id + " utterance " + std::to_string(i) +
                           ": fused width " + std::to_string(row.size()) + " vs " +
                           std::to_string(x.cols()));
    x.row(static_cast<Index>(i)) = row;
  }
  return x;
}

namespace {

std::string where(const Dialogue& d, std::size_t i) {
  return "dialogue " + d.id + " utterance " + std::to_string(i);
}

void check_modality(const std::optional<RowVector>& v, Index dim, const char* name,
                    const Dialogue& d, std::size_t i) {
  if (dim == 0) {
    if (v) throw CorpusError(where(d, i) + ": " + name + " present but corpus declares no " + name);
    return;
  }
  if (!v) throw CorpusError(where(d, i) + ": missing " + name + " features");
  if (v->size() != dim)
    throw CorpusError(where(d, i) + ": " + name + " dimension " + std::to_string(v->size()) +
                      " does not match corpus dimension " + std::to_string(dim));
  if (!v->allFinite()) throw CorpusError(where(d, i) + ": non-finite " + name + " features");
}

}  // namespace

namespace {

void validate_header(const Corpus& corpus) {
  if (corpus.label_names.empty()) throw CorpusError("corpus declares no labels");
  if (corpus.dims.audio < 0 || corpus.dims.text < 0 || corpus.dims.video < 0)
    throw CorpusError("negative modality dimension");
  if (corpus.dims.audio + corpus.dims.text + corpus.dims.video == 0)
    throw CorpusError("corpus declares no modality");
}

void validate_dialogue(const Corpus& corpus, const Dialogue& d) {
  const int classes = corpus.num_classes();
  if (d.utterances.empty()) throw CorpusError("dialogue " + d.id + " has no utterances");
  if (d.num_speakers < 1) throw CorpusError("dialogue " + d.id + " has num_speakers < 1");
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Utterance& u = d.utterances[i];
    if (u.speaker < 0 || u.speaker >= d.num_speakers)
      throw CorpusError(where(d, i) + ": unknown speaker index " + std::to_string(u.speaker) +
                        " (num_speakers " + std::to_string(d.num_speakers) + ")");
    check_modality(u.audio, corpus.dims.audio, "audio", d, i);
    check_modality(u.text, corpus.dims.text, "text", d, i);
    check_modality(u.video, corpus.dims.video, "video", d, i);
    if (corpus.mode == TaskMode::single) {
      if (u.label < 0 || u.label >= classes)
        throw CorpusError(where(d, i) + ": label " + std::to_string(u.label) + " outside [0, " +
                          std::to_string(classes) + ")");
    } else {
      if (static_cast<int>(u.labels.size()) != classes)
        throw CorpusError(where(d, i) + ": multi-label vector has " +
                          std::to_string(u.labels.size()) + " entries, expected " +
                          std::to_string(classes));
      for (int b : u.labels)
        if (b != 0 && b != 1) throw CorpusError(where(d, i) + ": multi-label entries must be 0/1");
    }
  }
}

}  // namespace

void validate(const Corpus& corpus) {
  validate_header(corpus);
  for (const auto& d : corpus.dialogues) validate_dialogue(corpus, d);
}

namespace {

std::optional<RowVector> read_vector(const json& u, const char* key) {
  if (!u.contains(key) || u.at(key).is_null()) return std::nullopt;
  const auto values = u.at(key).get<std::vector<double>>();
  RowVector v(static_cast<Index>(values.size()));
  std::copy(values.begin(), values.end(), v.data());
  return v;
}

void write_vector(json& u, const char* key, const std::optional<RowVector>& v) {
  if (v) u[key] = std::vector<double>(v->data(), v->data() + v->size());
}

Dialogue parse_dialogue(const json& doc, TaskMode mode) {
  Dialogue d;
  d.id = doc.at("dialogue_id").get<std::string>();
  d.num_speakers = doc.at("num_speakers").get<int>();
  d.split = parse_split(doc.value("split", std::string("train")));
  for (const auto& u : doc.at("utterances")) {
    Utterance utt;
    utt.speaker = u.at("speaker").get<int>();
    if (mode == TaskMode::single)
      utt.label = u.at("label").get<int>();
    else
      utt.labels = u.at("label").get<std::vector<int>>();
    utt.audio = read_vector(u, "audio");
    utt.text = read_vector(u, "text");
    utt.video = read_vector(u, "video");
    if (u.contains("raw_text")) utt.raw_text = u.at("raw_text").get<std::string>();
    d.utterances.push_back(std::move(utt));
  }
  return d;
}

}  // namespace

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json doc = json::parse(line);
      if (!have_header) {
        corpus.label_names = doc.at("label_names").get<std::vector<std::string>>();
        const auto& dims = doc.at("dims");
        corpus.dims = {dims.value("a", Index{0}), dims.value("t", Index{0}), dims.value("v", Index{0})};
        const auto mode = doc.value("task_mode", std::string("single"));
        if (mode != "single" && mode != "multi")
          throw CorpusError("task_mode must be single or multi, got " + mode);
        corpus.mode = mode == "single" ? TaskMode::single : TaskMode::multi;
        validate_header(corpus);
        have_header = true;
      } else {
        corpus.dialogues.push_back(parse_dialogue(doc, corpus.mode));
        validate_dialogue(corpus, corpus.dialogues.back());
      }
    } catch (const CorpusError& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw CorpusError("corpus has no header line");
  return corpus;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path);
  try {
    return read_corpus(in);
  } catch (const CorpusError& e) {
    throw CorpusError(path + ": " + e.what());
  }
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  json header;
  header["label_names"] = corpus.label_names;
  header["dims"] = {{"a", corpus.dims.audio}, {"t", corpus.dims.text}, {"v", corpus.dims.video}};
  header["task_mode"] = to_string(corpus.mode);
  out << header.dump() << '\n';
  for (const auto& d : corpus.dialogues) {
    json doc;
    doc["dialogue_id"] = d.id;
    doc["num_speakers"] = d.num_speakers;
    doc["split"] = to_string(d.split);
    json& utts = doc["utterances"] = json::array();
    for (const auto& u : d.utterances) {
      json j;
      j["speaker"] = u.speaker;
      if (corpus.mode == TaskMode::single)
        j["label"] = u.label;
      else
        j["label"] = u.labels;
      write_vector(j, "audio", u.audio);
      write_vector(j, "text", u.text);
      write_vector(j, "video", u.video);
      if (u.raw_text) j["raw_text"] = *u.raw_text;
      utts.push_back(std::move(j));
    }
    out << doc.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file " + path);
  write_corpus(corpus, out);
}

Corpus synth_corpus(const SynthSpec& spec) {
  if (spec.num_dialogues < 1 || spec.utterances_per_dialogue < 1 || spec.num_speakers < 1 ||
      spec.num_classes < 1)
    throw std::invalid_argument("synth_corpus: sizes must be positive");
  Rng rng(spec.seed);
  Rng centroid_rng = rng.split(1);
  Rng sample_rng = rng.split(2);

  const auto centroids = [&](Index dim) {
    Matrix c(spec.num_classes, dim);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = centroid_rng.normal();
    return c;
  };
  const Matrix audio_c = centroids(spec.dims.audio);
  const Matrix text_c = centroids(spec.dims.text);
  const Matrix video_c = centroids(spec.dims.video);
  const auto sample = [&](const Matrix& c, int cls) -> std::optional<RowVector> {
    if (c.cols() == 0) return std::nullopt;
    RowVector v = c.row(cls);
    for (Index i = 0; i < v.size(); ++i) v(i) += spec.noise * sample_rng.normal();
    return v;
  };

  Corpus corpus;
  for (int c = 0; c < spec.num_classes; ++c) corpus.label_names.push_back("c" + std::to_string(c));
  corpus.dims = spec.dims;
  corpus.mode = TaskMode::single;

  const int n_test = static_cast<int>(spec.num_dialogues * spec.test_fraction);
  const int n_valid = static_cast<int>(spec.num_dialogues * spec.valid_fraction);
  const int n_train = spec.num_dialogues - n_test - n_valid;
  for (int k = 0; k < spec.num_dialogues; ++k) {
    Dialogue d;
    char id[32];
    std::snprintf(id, sizeof id, "synth_%04d", k);
    d.id = id;
    d.num_speakers = spec.num_speakers;
    d.split = k < n_train ? Split::train : (k < n_train + n_valid ? Split::valid : Split::test);
    const int start = static_cast<int>(sample_rng.below(static_cast<std::size_t>(spec.num_speakers)));
    int previous_cluster = -1;
    for (int i = 0; i < spec.utterances_per_dialogue; ++i) {
      const int cluster =
          static_cast<int>(sample_rng.below(static_cast<std::size_t>(spec.num_classes)));
      Utterance u;
      u.speaker = (start + i) % spec.num_speakers;
      u.audio = sample(audio_c, cluster);
      u.text = sample(text_c, cluster);
      u.video = sample(video_c, cluster);
      u.label = (spec.dependency == Dependency::neighbor && previous_cluster >= 0) ? previous_cluster
                                                                                  : cluster;
      previous_cluster = cluster;
      d.utterances.push_back(std::move(u));
    }
    corpus.dialogues.push_back(std::move(d));
  }
  validate(corpus);
  return corpus;
}

Corpus truncate_context(const Corpus& corpus, int n) {
  if (n < 1) throw std::invalid_argument("truncate_context: n must be >= 1");
  Corpus out = corpus;
  out.dialogues.clear();
  const auto chunk = static_cast<std::size_t>(n);
  for (const auto& d : corpus.dialogues) {
    if (d.size() <= chunk) {
      out.dialogues.push_back(d);
      continue;
    }
    for (std::size_t start = 0, part = 0; start < d.size(); start += chunk, ++part) {
      Dialogue piece;
      piece.id = d.id + "#" + std::to_string(part);
      piece.num_speakers = d.num_speakers;
      piece.split = d.split;
      const std::size_t stop = std::min(d.size(), start + chunk);
      piece.utterances.assign(d.utterances.begin() + static_cast<std::ptrdiff_t>(start),
                              d.utterances.begin() + static_cast<std::ptrdiff_t>(stop));
      out.dialogues.push_back(std::move(piece));
    }
  }
  return out;
}

}  // namespace cogmen

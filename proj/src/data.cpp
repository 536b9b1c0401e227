#include "rnnlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace rnnlab {

using nlohmann::json;

void Dataset::validate() const {
  if (train.empty() || val.empty() || test.empty())
    throw std::invalid_argument("Dataset: every split must be non-empty");
  auto check_split = [&](const std::vector<Sequence>& split, const char* which) {
    for (const Sequence& seq : split) {
      if (seq.inputs.empty())
        throw std::invalid_argument(std::string("Dataset: empty sequence in ") + which);
      const size_t T = seq.inputs.size();
      if (task == TaskKind::FramewiseClassification) {
        if (seq.class_targets.size() != T)
          throw std::invalid_argument("Dataset: class targets misaligned");
      } else if (seq.binary_targets.size() != T) {
        throw std::invalid_argument("Dataset: binary targets misaligned");
      }
      for (const Vector& x : seq.inputs)
        if (static_cast<int>(x.size()) != n_inputs)
          throw std::invalid_argument("Dataset: input width mismatch");
    }
  };
  check_split(train, "train");
  check_split(val, "val");
  check_split(test, "test");
}

namespace {

int line_of_byte(const std::string& text, size_t byte) {
  return 1 + static_cast<int>(std::count(text.begin(),
                                         text.begin() + std::min(byte, text.size()), '\n'));
}

Sequence pianoroll_sequence(const json& frames, int n_pitches, const std::string& split,
                            size_t seq_index) {
  const std::string where = "split '" + split + "', sequence " + std::to_string(seq_index);
  if (!frames.is_array() || frames.empty())
    throw std::runtime_error("pianoroll: empty or non-list sequence at " + where);
  if (frames.size() < 2)
    throw std::runtime_error("pianoroll: need at least 2 frames for next-step targets at " +
                             where);
  std::vector<Vector> full;
  for (size_t f = 0; f < frames.size(); ++f) {
    Vector frame(static_cast<size_t>(n_pitches), 0.0);
    for (const json& p : frames[f]) {
      const long pitch = p.get<long>();
      if (pitch < 0 || pitch >= n_pitches)
        throw std::runtime_error("pianoroll: pitch index " + std::to_string(pitch) +
                                 " out of range [0," + std::to_string(n_pitches) + ") at " +
                                 where + ", frame " + std::to_string(f));
      frame[static_cast<size_t>(pitch)] = 1.0;
    }
    full.push_back(std::move(frame));
  }
  Sequence seq;
  seq.inputs.assign(full.begin(), full.end() - 1);
  seq.binary_targets.assign(full.begin() + 1, full.end());
  return seq;
}

}  // namespace

Dataset load_pianoroll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("pianoroll: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("pianoroll: " + path + ": line " +
                             std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
  }

  try {
    Dataset ds;
    ds.name = doc.at("name").get<std::string>();
    ds.task = TaskKind::NextStepPrediction;
    const int n_pitches = doc.at("n_pitches").get<int>();
    if (n_pitches < 1) throw std::runtime_error("pianoroll: n_pitches must be >= 1");
    ds.n_inputs = ds.n_outputs = n_pitches;
    const json& splits = doc.at("splits");
    const std::pair<const char*, std::vector<Sequence>*> order[] = {
        {"train", &ds.train}, {"valid", &ds.val}, {"test", &ds.test}};
    for (auto& [key, out] : order) {
      const json& seqs = splits.at(key);
      for (size_t s = 0; s < seqs.size(); ++s)
        out->push_back(pianoroll_sequence(seqs[s], n_pitches, key, s));
    }
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw std::runtime_error("pianoroll: " + path + ": " + e.what());
  }
}

void save_pianoroll(const Dataset& dataset, const std::string& path) {
  if (dataset.task != TaskKind::NextStepPrediction)
    throw std::invalid_argument("save_pianoroll: next-step datasets only");
  auto split_json = [&](const std::vector<Sequence>& split) {
    json seqs = json::array();
    for (const Sequence& seq : split) {
      json frames = json::array();
      auto active = [](const Vector& frame) {
        json idx = json::array();
        for (size_t p = 0; p < frame.size(); ++p)
          if (frame[p] > 0.5) idx.push_back(p);
        return idx;
      };
      for (const Vector& x : seq.inputs) frames.push_back(active(x));
      frames.push_back(active(seq.binary_targets.back()));
      seqs.push_back(std::move(frames));
    }
    return seqs;
  };
  json doc;
  doc["name"] = dataset.name;
  doc["n_pitches"] = dataset.n_inputs;
  doc["splits"]["train"] = split_json(dataset.train);
  doc["splits"]["valid"] = split_json(dataset.val);
  doc["splits"]["test"] = split_json(dataset.test);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("pianoroll: cannot write " + path);
  out << doc.dump() << "\n";
}

namespace {

void split_70_15_15(std::vector<Sequence> all, Dataset& ds);

}  // namespace

Dataset generate_synthetic_pianoroll(Rng& rng, int n_sequences, int n_pitches, int seq_len) {
  if (n_sequences < 1 || n_pitches < 12 || seq_len < 2)
    throw std::invalid_argument("generate_synthetic_pianoroll: bad sizes");
  Dataset ds;
  ds.name = "synthetic-pianoroll";
  ds.task = TaskKind::NextStepPrediction;
  ds.n_inputs = ds.n_outputs = n_pitches;

  // A fixed 8-chord cycle of triads; the next chord is deterministic given
  // the current one, so next-step prediction has structure to learn.
  constexpr int kRoots[] = {0, 2, 4, 5, 7, 9, 11, 5};
  constexpr int kCycle = 8;
  auto frame_for = [&](int phase, bool ornament, int extra) {
    Vector frame(static_cast<size_t>(n_pitches), 0.0);
    const int root = kRoots[phase % kCycle] % n_pitches;
    frame[static_cast<size_t>(root)] = 1.0;
    frame[static_cast<size_t>((root + 4) % n_pitches)] = 1.0;
    frame[static_cast<size_t>((root + 7) % n_pitches)] = 1.0;
    if (ornament) frame[static_cast<size_t>(extra)] = 1.0;
    return frame;
  };

  std::vector<Sequence> all;
  for (int s = 0; s < n_sequences; ++s) {
    const int phase0 = static_cast<int>(rng.next_below(kCycle));
    std::vector<Vector> frames;
    for (int t = 0; t < seq_len; ++t) {
      const bool ornament = rng.uniform() < 0.1;
      const int extra = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_pitches)));
      frames.push_back(frame_for(phase0 + t, ornament, extra));
    }
    Sequence seq;
    seq.inputs.assign(frames.begin(), frames.end() - 1);
    seq.binary_targets.assign(frames.begin() + 1, frames.end());
    all.push_back(std::move(seq));
  }
  if (n_sequences == 1) {
    ds.train = ds.val = ds.test = all;
    return ds;
  }
  split_70_15_15(std::move(all), ds);
  ds.validate();
  return ds;
}

Dataset load_dataset_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("dataset: " + path + ": line " +
                             std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
  }
  try {
    Dataset ds;
    ds.name = doc.at("name").get<std::string>();
    ds.task = task_from_name(doc.at("task").get<std::string>());
    ds.n_inputs = doc.at("n_inputs").get<int>();
    ds.n_outputs = doc.at("n_outputs").get<int>();
    const json& splits = doc.at("splits");
    const std::pair<const char*, std::vector<Sequence>*> order[] = {
        {"train", &ds.train}, {"valid", &ds.val}, {"test", &ds.test}};
    for (auto& [key, out] : order)
      for (const json& js : splits.at(key)) {
        Sequence seq;
        for (const json& x : js.at("inputs")) seq.inputs.push_back(x.get<Vector>());
        if (ds.task == TaskKind::FramewiseClassification)
          seq.class_targets = js.at("class_targets").get<std::vector<int>>();
        else
          for (const json& t : js.at("binary_targets"))
            seq.binary_targets.push_back(t.get<Vector>());
        out->push_back(std::move(seq));
      }
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw std::runtime_error("dataset: " + path + ": " + e.what());
  }
}

void save_dataset_json(const Dataset& dataset, const std::string& path) {
  auto split_json = [&](const std::vector<Sequence>& split) {
    json seqs = json::array();
    for (const Sequence& seq : split) {
      json js;
      js["inputs"] = seq.inputs;
      if (dataset.task == TaskKind::FramewiseClassification)
        js["class_targets"] = seq.class_targets;
      else
        js["binary_targets"] = seq.binary_targets;
      seqs.push_back(std::move(js));
    }
    return seqs;
  };
  json doc;
  doc["schema_version"] = 1;
  doc["name"] = dataset.name;
  doc["task"] = task_name(dataset.task);
  doc["n_inputs"] = dataset.n_inputs;
  doc["n_outputs"] = dataset.n_outputs;
  doc["splits"]["train"] = split_json(dataset.train);
  doc["splits"]["valid"] = split_json(dataset.val);
  doc["splits"]["test"] = split_json(dataset.test);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  out << doc.dump() << "\n";
}

const std::vector<char>& reber_alphabet() {
  static const std::vector<char> alphabet = {'B', 'T', 'P', 'S', 'X', 'V', 'E'};
  return alphabet;
}

namespace {

enum ReberSym : int { B = 0, T = 1, P = 2, S = 3, X = 4, V = 5, E = 6 };

// Walks the embedded Reber grammar. Emits symbols one at a time and exposes
// the set of grammar-legal successors after each emission.
class ReberWalker {
 public:
  explicit ReberWalker(Rng& rng) : rng_(rng) {}

  // Legal next symbols in the current state.
  std::vector<int> legal() const {
    switch (state_) {
      case State::OuterStart: return {B};
      case State::OuterBranch: return {T, P};
      case State::InnerStart: return {B};
      case State::Inner:
        switch (node_) {
          case 1: return {T, P};
          case 2: return {S, X};
          case 3: return {T, V};
          case 4: return {X, S};
          case 5: return {P, V};
          case 6: return {E};
        }
        break;
      case State::OuterClose: return {branch_};
      case State::OuterEnd: return {E};
      case State::Done: return {};
    }
    return {};
  }

  // Picks a legal symbol uniformly, advances, returns it.
  int step() {
    const std::vector<int> options = legal();
    const int sym = options[rng_.next_below(options.size())];
    advance(sym);
    return sym;
  }

  bool done() const { return state_ == State::Done; }
  void reset() { state_ = State::OuterStart; }

 private:
  enum class State { OuterStart, OuterBranch, InnerStart, Inner, OuterClose, OuterEnd, Done };

  void advance(int sym) {
    switch (state_) {
      case State::OuterStart: state_ = State::OuterBranch; return;
      case State::OuterBranch:
        branch_ = sym;
        state_ = State::InnerStart;
        return;
      case State::InnerStart:
        state_ = State::Inner;
        node_ = 1;
        return;
      case State::Inner:
        switch (node_) {
          case 1: node_ = sym == T ? 2 : 3; return;
          case 2: node_ = sym == S ? 2 : 4; return;
          case 3: node_ = sym == T ? 3 : 5; return;
          case 4: node_ = sym == X ? 3 : 6; return;
          case 5: node_ = sym == P ? 4 : 6; return;
          case 6: state_ = State::OuterClose; return;
        }
        return;
      case State::OuterClose: state_ = State::OuterEnd; return;
      case State::OuterEnd: state_ = State::Done; return;
      case State::Done: return;
    }
  }

  Rng& rng_;
  State state_ = State::OuterStart;
  int node_ = 0;
  int branch_ = T;
};

Vector one_hot(int sym) {
  Vector v(static_cast<size_t>(kReberSymbols), 0.0);
  v[static_cast<size_t>(sym)] = 1.0;
  return v;
}

Sequence reber_sequence(Rng& rng, int episodes) {
  ReberWalker walker(rng);
  std::vector<int> symbols;
  std::vector<std::vector<int>> next_sets;
  for (int e = 0; e < episodes; ++e) {
    walker.reset();
    while (!walker.done()) {
      symbols.push_back(walker.step());
      std::vector<int> legal = walker.legal();
      if (legal.empty() && e + 1 < episodes) legal = {B};  // next episode follows
      next_sets.push_back(std::move(legal));
    }
  }
  Sequence seq;
  for (size_t t = 0; t + 1 < symbols.size(); ++t) {
    seq.inputs.push_back(one_hot(symbols[t]));
    Vector target(static_cast<size_t>(kReberSymbols), 0.0);
    for (int sym : next_sets[t]) target[static_cast<size_t>(sym)] = 1.0;
    seq.binary_targets.push_back(std::move(target));
  }
  return seq;
}

void split_70_15_15(std::vector<Sequence> all, Dataset& ds) {
  const int n = static_cast<int>(all.size());
  const int n_val = std::max(1, static_cast<int>(std::llround(0.15 * n)));
  const int n_test = n_val;
  const int n_train = n - n_val - n_test;
  if (n_train < 1) throw std::invalid_argument("dataset too small to split 70/15/15");
  auto it = all.begin();
  ds.train.assign(it, it + n_train);
  ds.val.assign(it + n_train, it + n_train + n_val);
  ds.test.assign(it + n_train + n_val, all.end());
}

}  // namespace

Dataset generate_embedded_reber(Rng& rng, int n_sequences, bool continual,
                                int episodes_per_sequence) {
  if (n_sequences < 1) throw std::invalid_argument("generate_embedded_reber: n_sequences >= 1");
  if (continual && episodes_per_sequence < 2)
    throw std::invalid_argument("generate_embedded_reber: continual needs >= 2 episodes");
  Dataset ds;
  ds.name = continual ? "reber-continual" : "reber";
  ds.task = TaskKind::NextStepPrediction;
  ds.n_inputs = ds.n_outputs = kReberSymbols;
  std::vector<Sequence> all;
  for (int s = 0; s < n_sequences; ++s)
    all.push_back(reber_sequence(rng, continual ? episodes_per_sequence : 1));
  if (n_sequences == 1) {
    ds.train = ds.val = ds.test = all;
    return ds;
  }
  split_70_15_15(std::move(all), ds);
  ds.validate();
  return ds;
}

StandardizationStats standardize(Dataset& dataset) {
  const size_t M = static_cast<size_t>(dataset.n_inputs);
  StandardizationStats stats;
  stats.mean.assign(M, 0.0);
  stats.std.assign(M, 0.0);

  long n = 0;
  for (const Sequence& seq : dataset.train)
    for (const Vector& x : seq.inputs) {
      for (size_t j = 0; j < M; ++j) stats.mean[j] += x[j];
      ++n;
    }
  if (n == 0) throw std::invalid_argument("standardize: empty training split");
  for (size_t j = 0; j < M; ++j) stats.mean[j] /= static_cast<double>(n);
  for (const Sequence& seq : dataset.train)
    for (const Vector& x : seq.inputs)
      for (size_t j = 0; j < M; ++j) {
        const double d = x[j] - stats.mean[j];
        stats.std[j] += d * d;
      }
  for (size_t j = 0; j < M; ++j) {
    stats.std[j] = std::sqrt(stats.std[j] / static_cast<double>(n));
    if (stats.std[j] < 1e-12) {
      stats.std[j] = 1.0;
      stats.constant_features.push_back(static_cast<int>(j));
    }
  }

  for (std::vector<Sequence>* split : {&dataset.train, &dataset.val, &dataset.test})
    for (Sequence& seq : *split)
      for (Vector& x : seq.inputs)
        for (size_t j = 0; j < M; ++j) x[j] = (x[j] - stats.mean[j]) / stats.std[j];
  return stats;
}

Dataset generate_frame_classification(Rng& rng, int n_sequences, int n_features,
                                      int n_classes) {
  if (n_sequences < 1 || n_features < 1 || n_classes < 2)
    throw std::invalid_argument("generate_frame_classification: bad sizes");
  if (n_features < n_classes)
    throw std::invalid_argument("generate_frame_classification: need n_features >= n_classes");
  Dataset ds;
  ds.name = "frames";
  ds.task = TaskKind::FramewiseClassification;
  ds.n_inputs = n_features;
  ds.n_outputs = n_classes;
  std::vector<Sequence> all;
  for (int s = 0; s < n_sequences; ++s) {
    const int cls = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(n_classes - 1)));
    Sequence seq;
    for (int t = 0; t < kFrameTaskLength; ++t) {
      Vector x(static_cast<size_t>(n_features), 0.0);
      if (t == 0) {
        x[static_cast<size_t>(cls)] = 1.0;
      } else {
        for (double& v : x) v = rng.normal(0.0, 1.0);
      }
      seq.inputs.push_back(std::move(x));
      seq.class_targets.push_back(t < kFrameTaskSignalDelay ? 0 : cls);
    }
    all.push_back(std::move(seq));
  }
  if (n_sequences == 1) {
    ds.train = ds.val = ds.test = all;
    return ds;
  }
  split_70_15_15(std::move(all), ds);
  ds.validate();
  return ds;
}

}  // namespace rnnlab

#pragma once

#include <string>
#include <vector>

#include "rnnlab/network.hpp"

namespace rnnlab {

/// A named task with train/val/test splits, ready for training.
///
/// Next-step sequences store frames 0..T-2 as inputs and frames 1..T-1 as
/// binary targets (the last frame is never consumed as an input).
struct Dataset {
  std::string name;
  TaskKind task = TaskKind::NextStepPrediction;
  int n_inputs = 0;   // M
  int n_outputs = 0;  // K
  std::vector<Sequence> train, val, test;

  void validate() const;
};

/// Piano-roll container: JSON document with fields
///   {name, n_pitches, splits: {train|valid|test: [[active pitch indices per
///   frame] per sequence]}}.
/// Frames become binary vectors of width n_pitches; next-step targets are
/// derived on load.
Dataset load_pianoroll(const std::string& path);

/// Writes a next-step dataset back to the container format (active-pitch
/// index lists). Inverse of load_pianoroll.
void save_pianoroll(const Dataset& dataset, const std::string& path);

/// Synthetic polyphonic data in the piano-roll container's shape: each
/// sequence walks a fixed cycle of triads (random starting phase, occasional
/// ornament notes), so the next-step structure is learnable from context.
/// Splits 70/15/15 by sequence count.
Dataset generate_synthetic_pianoroll(Rng& rng, int n_sequences, int n_pitches = 24,
                                     int seq_len = 40);

/// General dataset container for tasks the active-pitch format cannot hold
/// (real-valued inputs, class labels, multi-label targets): JSON document
///   {schema_version, name, task, n_inputs, n_outputs,
///    splits: {train|valid|test: [{inputs, class_targets | binary_targets}]}}.
Dataset load_dataset_json(const std::string& path);
void save_dataset_json(const Dataset& dataset, const std::string& path);

// Embedded Reber grammar symbols, in input/target encoding order.
inline constexpr int kReberSymbols = 7;
const std::vector<char>& reber_alphabet();  // B T P S X V E

/// Generates embedded Reber grammar strings as one-hot sequences with
/// multi-label targets marking every grammar-legal next symbol (trained with
/// the sigmoid head). With continual=true each sequence concatenates
/// episodes_per_sequence episodes back to back with no state reset between
/// them; the target after a final E is the next episode's B.
/// Splits 70/15/15 by sequence count.
Dataset generate_embedded_reber(Rng& rng, int n_sequences, bool continual,
                                int episodes_per_sequence = 8);

struct StandardizationStats {
  Vector mean;
  Vector std;                       // constant features forced to 1
  std::vector<int> constant_features;
};

/// Standardizes every split with mean/std computed on the training split
/// only. Constant features get std 1 (their values become 0).
StandardizationStats standardize(Dataset& dataset);

/// Synthetic framewise-classification task where the label is recoverable
/// only from temporal context. Each sequence has 10 frames: frame 0 is the
/// clean one-hot signal of a class s drawn uniformly from 1..K-1, frames
/// 1..9 are i.i.d. Normal(0,1) noise. Labels: class 0 for frames 0..4, s
/// for frames 5..9. Splits 70/15/15 by sequence count.
Dataset generate_frame_classification(Rng& rng, int n_sequences, int n_features,
                                      int n_classes);

inline constexpr int kFrameTaskLength = 10;
inline constexpr int kFrameTaskSignalDelay = 5;

}  // namespace rnnlab

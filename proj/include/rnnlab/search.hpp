#pragma once

#include <string>
#include <vector>

#include "rnnlab/data.hpp"
#include "rnnlab/numerics.hpp"
#include "rnnlab/training.hpp"

namespace rnnlab {

inline constexpr int kTrialLogSchemaVersion = 1;

/// Sampling ranges for random search. Defaults match the search protocol:
/// n_blocks log-uniform in [20,200] (rounded), learning rate log-uniform in
/// [1e-6,1e-2], momentum = 1 - u with u log-uniform in [0.01,1], input noise
/// std uniform in [0,1].
struct HyperRanges {
  int n_blocks_min = 20;
  int n_blocks_max = 200;
  double learning_rate_min = 1e-6;
  double learning_rate_max = 1e-2;
  double momentum_u_min = 0.01;
  double momentum_u_max = 1.0;
  double noise_min = 0.0;
  double noise_max = 1.0;
};

struct HyperSample {
  int n_blocks = 0;
  double learning_rate = 0.0;
  double momentum = 0.0;
  double input_noise_std = 0.0;
  bool clip_gradients = false;     // sampled only when booleans are included
  bool nesterov_momentum = true;   // always true here; kept for the record
};

HyperSample sample_hyperparameters(Rng& rng, bool include_booleans = false,
                                   const HyperRanges& ranges = {});

/// One line of the trial log.
struct TrialRecord {
  int schema_version = kTrialLogSchemaVersion;
  std::string dataset;
  std::string variant;
  int trial_index = 0;
  uint64_t seed = 0;
  HyperSample hyper;
  double val_metric = 0.0;
  double test_metric = 0.0;
  double wall_time_s = 0.0;
  int epochs_run = 0;
  bool diverged = false;
};

std::string trial_to_json(const TrialRecord& record);
TrialRecord trial_from_json(const std::string& line);

/// Parses a JSON-lines trial log; blank lines are skipped.
std::vector<TrialRecord> load_trial_log(const std::string& path);

struct SearchConfig {
  int n_trials = 200;
  int parallelism = 1;
  uint64_t base_seed = 0;
  HyperRanges ranges;
  bool include_booleans = false;
  int max_epochs = 150;
  int patience = 15;
};

/// Runs (or resumes) a random search for one variant on one dataset,
/// appending a TrialRecord line to log_path as each trial finishes.
/// Existing records for (dataset, variant, trial_index) are skipped, so a
/// killed search completes the missing indices on rerun. Trial i's
/// hyperparameters depend only on base_seed and i, never on scheduling.
std::vector<TrialRecord> run_search(const Dataset& dataset, const std::string& variant,
                                    const SearchConfig& config, const std::string& log_path);

/// The ceil(fraction * n) records with the best (lowest) validation metric;
/// ties broken by lower trial index.
std::vector<TrialRecord> select_top_fraction(std::vector<TrialRecord> trials,
                                             double fraction);

}  // namespace rnnlab

#include "rnnlab/search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace rnnlab {

using nlohmann::json;

HyperSample sample_hyperparameters(Rng& rng, bool include_booleans,
                                   const HyperRanges& ranges) {
  HyperSample s;
  s.n_blocks = static_cast<int>(std::llround(
      std::exp(rng.uniform(std::log(ranges.n_blocks_min), std::log(ranges.n_blocks_max)))));
  s.n_blocks = std::clamp(s.n_blocks, ranges.n_blocks_min, ranges.n_blocks_max);
  s.learning_rate = std::exp(
      rng.uniform(std::log(ranges.learning_rate_min), std::log(ranges.learning_rate_max)));
  s.momentum =
      1.0 - std::exp(rng.uniform(std::log(ranges.momentum_u_min), std::log(ranges.momentum_u_max)));
  s.input_noise_std = rng.uniform(ranges.noise_min, ranges.noise_max);
  if (include_booleans) {
    s.nesterov_momentum = rng.uniform() < 0.5;
    s.clip_gradients = rng.uniform() < 0.5;
  }
  return s;
}

std::string trial_to_json(const TrialRecord& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["dataset"] = r.dataset;
  j["variant"] = r.variant;
  j["trial_index"] = r.trial_index;
  j["seed"] = r.seed;
  j["n_blocks"] = r.hyper.n_blocks;
  j["learning_rate"] = r.hyper.learning_rate;
  j["momentum"] = r.hyper.momentum;
  j["input_noise_std"] = r.hyper.input_noise_std;
  j["clip_gradients"] = r.hyper.clip_gradients;
  j["val_metric"] = r.val_metric;
  j["test_metric"] = r.test_metric;
  j["wall_time_s"] = r.wall_time_s;
  j["epochs_run"] = r.epochs_run;
  j["diverged"] = r.diverged;
  return j.dump();
}

TrialRecord trial_from_json(const std::string& line) {
  TrialRecord r;
  try {
    json j = json::parse(line);
    r.schema_version = j.at("schema_version").get<int>();
    r.dataset = j.at("dataset").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.trial_index = j.at("trial_index").get<int>();
    r.seed = j.at("seed").get<uint64_t>();
    r.hyper.n_blocks = j.at("n_blocks").get<int>();
    r.hyper.learning_rate = j.at("learning_rate").get<double>();
    r.hyper.momentum = j.at("momentum").get<double>();
    r.hyper.input_noise_std = j.at("input_noise_std").get<double>();
    r.hyper.clip_gradients = j.at("clip_gradients").get<bool>();
    r.val_metric = j.at("val_metric").get<double>();
    r.test_metric = j.at("test_metric").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.epochs_run = j.at("epochs_run").get<int>();
    r.diverged = j.at("diverged").get<bool>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("trial log: bad record: ") + e.what());
  }
  return r;
}

std::vector<TrialRecord> load_trial_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trial log: cannot open " + path);
  std::vector<TrialRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(trial_from_json(line));
  }
  return records;
}

namespace {

TrialRecord run_one_trial(const Dataset& dataset, const std::string& variant,
                          const SearchConfig& config, int index) {
  Rng root(config.base_seed);
  Rng trial_rng = root.derived(static_cast<uint64_t>(index));
  TrialRecord record;
  record.dataset = dataset.name;
  record.variant = variant;
  record.trial_index = index;
  record.seed = trial_rng.seed();
  record.hyper = sample_hyperparameters(trial_rng, config.include_booleans, config.ranges);

  NetworkConfig net;
  net.task = dataset.task;
  net.bidirectional = dataset.task == TaskKind::FramewiseClassification;
  net.hidden_size = record.hyper.n_blocks;
  net.n_inputs = dataset.n_inputs;
  net.n_outputs = dataset.n_outputs;
  net.variant = VariantSpec::preset(variant);

  TrainConfig tc;
  tc.learning_rate = record.hyper.learning_rate;
  tc.momentum = record.hyper.momentum;
  tc.input_noise_std = record.hyper.input_noise_std;
  tc.clip = record.hyper.clip_gradients;
  tc.max_epochs = config.max_epochs;
  tc.patience = config.patience;
  tc.seed = record.seed;

  TrainResult result = train(dataset, net, tc);
  record.val_metric = result.best_val_metric;
  record.test_metric = result.test_metric_at_best_val;
  record.wall_time_s = result.wall_time_seconds;
  record.epochs_run = result.epochs_run;
  record.diverged = result.diverged;
  return record;
}

}  // namespace

std::vector<TrialRecord> run_search(const Dataset& dataset, const std::string& variant,
                                    const SearchConfig& config, const std::string& log_path) {
  if (config.n_trials < 1) throw std::invalid_argument("run_search: n_trials >= 1");

  std::vector<TrialRecord> done;
  std::set<int> have;
  if (std::ifstream probe(log_path); probe.good()) {
    for (TrialRecord& r : load_trial_log(log_path))
      if (r.dataset == dataset.name && r.variant == variant && r.trial_index < config.n_trials) {
        have.insert(r.trial_index);
        done.push_back(std::move(r));
      }
  }

  std::vector<int> todo;
  for (int i = 0; i < config.n_trials; ++i)
    if (!have.count(i)) todo.push_back(i);

  std::ofstream log(log_path, std::ios::app);
  if (!log) throw std::runtime_error("run_search: cannot append to " + log_path);

  std::mutex mu;
  size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      int index;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= todo.size()) return;
        index = todo[next++];
      }
      TrialRecord record = run_one_trial(dataset, variant, config, index);
      {
        std::lock_guard<std::mutex> lock(mu);
        log << trial_to_json(record) << "\n";
        log.flush();
        if (!log) throw std::runtime_error("run_search: log write failed");
        done.push_back(std::move(record));
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(config.parallelism,
                                                  static_cast<int>(todo.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::sort(done.begin(), done.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.trial_index < b.trial_index; });
  return done;
}

std::vector<TrialRecord> select_top_fraction(std::vector<TrialRecord> trials, double fraction) {
  if (trials.empty()) throw std::invalid_argument("select_top_fraction: empty input");
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("select_top_fraction: fraction in (0,1]");
  std::sort(trials.begin(), trials.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (a.val_metric != b.val_metric) return a.val_metric < b.val_metric;
    return a.trial_index < b.trial_index;
  });
  const size_t keep = static_cast<size_t>(
      std::ceil(fraction * static_cast<double>(trials.size())));
  trials.resize(std::min(keep, trials.size()));
  return trials;
}

}  // namespace rnnlab

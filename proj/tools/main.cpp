// Command-line front end: dataset generation, training, random search,
// gradient checking and analysis, with machine-readable JSON outputs.
// Every artifact embeds schema_version, the fully resolved config and all
// seeds, so a printed config reproduces the artifact.
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rnnlab/data.hpp"
#include "rnnlab/fanova.hpp"
#include "rnnlab/gradcheck.hpp"
#include "rnnlab/network.hpp"
#include "rnnlab/search.hpp"
#include "rnnlab/stats.hpp"
#include "rnnlab/training.hpp"

using nlohmann::json;
using namespace rnnlab;

namespace {

constexpr int kArtifactSchemaVersion = 1;

void emit(const json& doc, const std::string& out_path) {
  std::cout << doc.dump(2) << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << doc.dump(2) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Dataset resolution shared by train and search.

struct DataSpec {
  std::string data_path;
  std::string generate;
  int n_sequences = 100;
  uint64_t data_seed = 0;
  int episodes = 8;     // reber-continual
  int n_features = 8;   // frames
  int n_classes = 4;    // frames
  int n_pitches = 24;   // pianoroll
  int seq_len = 40;     // pianoroll
};

void add_data_flags(CLI::App* cmd, DataSpec& spec) {
  auto* data = cmd->add_option("--data", spec.data_path, "Dataset file (JSON)");
  auto* gen = cmd->add_option("--generate", spec.generate, "Generate a dataset in-process")
                  ->check(CLI::IsMember({"reber", "reber-continual", "frames", "pianoroll"}));
  data->excludes(gen);
  gen->excludes(data);
  cmd->add_option("--n-sequences", spec.n_sequences, "Sequences to generate")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--data-seed", spec.data_seed, "Generator seed");
  cmd->add_option("--episodes", spec.episodes, "Episodes per continual sequence");
  cmd->add_option("--n-features", spec.n_features, "Input width (frames task)");
  cmd->add_option("--n-classes", spec.n_classes, "Classes (frames task)");
  cmd->add_option("--n-pitches", spec.n_pitches, "Pitch range (pianoroll task)");
  cmd->add_option("--seq-len", spec.seq_len, "Frames per sequence (pianoroll task)");
}

Dataset make_dataset(const DataSpec& spec) {
  Rng rng(spec.data_seed);
  if (spec.generate == "reber") return generate_embedded_reber(rng, spec.n_sequences, false);
  if (spec.generate == "reber-continual")
    return generate_embedded_reber(rng, spec.n_sequences, true, spec.episodes);
  if (spec.generate == "frames")
    return generate_frame_classification(rng, spec.n_sequences, spec.n_features,
                                         spec.n_classes);
  return generate_synthetic_pianoroll(rng, spec.n_sequences, spec.n_pitches, spec.seq_len);
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("dataset: " + path + ": " + e.what());
  }
  return doc.contains("n_pitches") ? load_pianoroll(path) : load_dataset_json(path);
}

Dataset resolve_dataset(const DataSpec& spec, CLI::App* cmd) {
  if (spec.data_path.empty() && spec.generate.empty())
    throw CLI::RequiredError(cmd->get_name() + ": one of --data / --generate");
  if (!spec.data_path.empty()) return load_dataset_file(spec.data_path);
  return make_dataset(spec);
}

json data_config_json(const DataSpec& spec) {
  json j;
  if (!spec.data_path.empty()) {
    j["data"] = spec.data_path;
    return j;
  }
  j["generate"] = spec.generate;
  j["n_sequences"] = spec.n_sequences;
  j["data_seed"] = spec.data_seed;
  if (spec.generate == "reber-continual") j["episodes"] = spec.episodes;
  if (spec.generate == "frames") {
    j["n_features"] = spec.n_features;
    j["n_classes"] = spec.n_classes;
  }
  if (spec.generate == "pianoroll") {
    j["n_pitches"] = spec.n_pitches;
    j["seq_len"] = spec.seq_len;
  }
  return j;
}

NetworkConfig network_config_for(const Dataset& ds, const std::string& variant, int n_blocks) {
  NetworkConfig net;
  net.task = ds.task;
  net.bidirectional = ds.task == TaskKind::FramewiseClassification;
  net.hidden_size = n_blocks;
  net.n_inputs = ds.n_inputs;
  net.n_outputs = ds.n_outputs;
  net.variant = VariantSpec::preset(variant);
  return net;
}

// Weight container: {schema_version, variant, n_blocks, n_inputs, n_outputs,
// task, bidirectional, blocks: [{name, rows, cols, values(row-major)}]}.
void save_weights(NetworkWeights& weights, const NetworkConfig& net, const std::string& path) {
  json doc;
  doc["schema_version"] = kArtifactSchemaVersion;
  doc["task"] = task_name(net.task);
  doc["bidirectional"] = net.bidirectional;
  doc["n_blocks"] = net.hidden_size;
  doc["n_inputs"] = net.n_inputs;
  doc["n_outputs"] = net.n_outputs;
  json blocks = json::array();
  for (const NamedBlock& b : network_named_blocks(weights)) {
    json jb;
    jb["name"] = b.name;
    jb["rows"] = b.rows;
    jb["cols"] = b.cols;
    jb["values"] = std::vector<double>(b.values.begin(), b.values.end());
    blocks.push_back(std::move(jb));
  }
  doc["blocks"] = std::move(blocks);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Commands. Each returns the process exit code.

int cmd_gradcheck(const std::string& variant, const std::string& task_sel,
                  const GradCheckSizes& sizes, uint64_t seed, double tolerance, double eps,
                  const std::string& out_path) {
  std::vector<std::string> variants =
      variant == "all" ? VariantSpec::preset_names() : std::vector<std::string>{variant};
  std::vector<TaskKind> tasks;
  if (task_sel != "prediction") tasks.push_back(TaskKind::FramewiseClassification);
  if (task_sel != "classification") tasks.push_back(TaskKind::NextStepPrediction);

  json doc;
  doc["schema_version"] = kArtifactSchemaVersion;
  doc["config"] = {{"variant", variant},       {"task", task_sel},
                   {"seed", seed},             {"tolerance", tolerance},
                   {"eps", eps},               {"n_blocks", sizes.n_blocks},
                   {"n_inputs", sizes.n_inputs}, {"n_outputs", sizes.n_outputs},
                   {"seq_len", sizes.seq_len}, {"n_sequences", sizes.n_sequences}};
  bool all_pass = true;
  json reports = json::array();
  for (const std::string& v : variants)
    for (TaskKind task : tasks) {
      const GradCheckReport r = check_variant(v, task, sizes, seed, tolerance, eps);
      all_pass = all_pass && r.pass;
      json jr;
      jr["variant"] = r.variant;
      jr["task"] = task_name(r.task);
      jr["max_relative_error"] = r.max_relative_error;
      jr["pass"] = r.pass;
      json blocks = json::array();
      for (const auto& b : r.blocks)
        blocks.push_back({{"block", b.block}, {"max_relative_error", b.max_relative_error}});
      jr["blocks"] = std::move(blocks);
      reports.push_back(std::move(jr));
    }
  doc["reports"] = std::move(reports);
  doc["all_pass"] = all_pass;
  emit(doc, out_path);
  return all_pass ? 0 : 1;
}

int cmd_gen_data(const DataSpec& spec, const std::string& out_path) {
  Dataset ds = make_dataset(spec);
  if (spec.generate == "pianoroll")
    save_pianoroll(ds, out_path);
  else
    save_dataset_json(ds, out_path);
  json doc;
  doc["schema_version"] = kArtifactSchemaVersion;
  doc["config"] = data_config_json(spec);
  doc["out"] = out_path;
  doc["name"] = ds.name;
  doc["task"] = task_name(ds.task);
  doc["n_inputs"] = ds.n_inputs;
  doc["n_outputs"] = ds.n_outputs;
  doc["split_sizes"] = {{"train", ds.train.size()},
                        {"valid", ds.val.size()},
                        {"test", ds.test.size()}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_train(CLI::App* cmd, const DataSpec& spec, const std::string& variant,
              int n_blocks, const TrainConfig& train_config, const std::string& out_path,
              const std::string& weights_path, const std::string& log_path) {
  Dataset ds = resolve_dataset(spec, cmd);
  const NetworkConfig net = network_config_for(ds, variant, n_blocks);
  TrainResult result = train(ds, net, train_config);

  json doc;
  doc["schema_version"] = kArtifactSchemaVersion;
  json cfg = data_config_json(spec);
  cfg["dataset"] = ds.name;
  cfg["variant"] = variant;
  cfg["n_blocks"] = n_blocks;
  cfg["learning_rate"] = train_config.learning_rate;
  cfg["applied_learning_rate"] = train_config.effective_learning_rate();
  cfg["momentum"] = train_config.momentum;
  cfg["input_noise_std"] = train_config.input_noise_std;
  cfg["clip_gradients"] = train_config.clip;
  cfg["max_epochs"] = train_config.max_epochs;
  cfg["patience"] = train_config.patience;
  cfg["seed"] = train_config.seed;
  doc["config"] = std::move(cfg);
  doc["epochs_run"] = result.epochs_run;
  doc["best_val_epoch"] = result.best_val_epoch;
  doc["best_val_loss"] = result.best_val_loss;
  doc["best_val_metric"] = result.best_val_metric;
  doc["test_loss"] = result.test_loss_at_best_val;
  doc["test_metric"] = result.test_metric_at_best_val;
  doc["wall_time_s"] = result.wall_time_seconds;
  doc["diverged"] = result.diverged;
  json curves = json::array();
  for (const EpochPoint& p : result.curves)
    curves.push_back({{"train_loss", p.train_loss},
                      {"train_metric", p.train_metric},
                      {"val_loss", p.val_loss},
                      {"val_metric", p.val_metric}});
  doc["curves"] = std::move(curves);
  emit(doc, out_path);

  if (!log_path.empty()) {
    TrialRecord rec;
    rec.dataset = ds.name;
    rec.variant = variant;
    rec.trial_index = 0;
    rec.seed = train_config.seed;
    rec.hyper.n_blocks = n_blocks;
    rec.hyper.learning_rate = train_config.learning_rate;
    rec.hyper.momentum = train_config.momentum;
    rec.hyper.input_noise_std = train_config.input_noise_std;
    rec.hyper.clip_gradients = train_config.clip;
    rec.val_metric = result.best_val_metric;
    rec.test_metric = result.test_metric_at_best_val;
    rec.wall_time_s = result.wall_time_seconds;
    rec.epochs_run = result.epochs_run;
    rec.diverged = result.diverged;
    std::ofstream log(log_path, std::ios::app);
    if (!log) throw std::runtime_error("cannot write " + log_path);
    log << trial_to_json(rec) << "\n";
  }
  if (!weights_path.empty()) save_weights(result.best_weights, net, weights_path);
  return result.diverged ? 1 : 0;
}

int cmd_search(CLI::App* cmd, const DataSpec& spec, const std::string& variant,
               const SearchConfig& config, const std::string& log_path,
               const std::string& out_path) {
  Dataset ds = resolve_dataset(spec, cmd);
  const std::vector<TrialRecord> records = run_search(ds, variant, config, log_path);

  json doc;
  doc["schema_version"] = kArtifactSchemaVersion;
  json cfg = data_config_json(spec);
  cfg["dataset"] = ds.name;
  cfg["variant"] = variant;
  cfg["n_trials"] = config.n_trials;
  cfg["parallelism"] = config.parallelism;
  cfg["base_seed"] = config.base_seed;
  cfg["include_booleans"] = config.include_booleans;
  cfg["max_epochs"] = config.max_epochs;
  cfg["patience"] = config.patience;
  cfg["log"] = log_path;
  doc["config"] = std::move(cfg);
  doc["n_trials"] = records.size();
  int n_diverged = 0;
  const TrialRecord* best = nullptr;
  for (const TrialRecord& r : records) {
    n_diverged += r.diverged ? 1 : 0;
    if (!best || r.val_metric < best->val_metric) best = &r;
  }
  doc["n_diverged"] = n_diverged;
  if (best)
    doc["best"] = {{"trial_index", best->trial_index},
                   {"val_metric", best->val_metric},
                   {"test_metric", best->test_metric}};
  emit(doc, out_path);
  return 0;
}

int cmd_analyze(const std::vector<std::string>& log_specs, const std::string& baseline,
                double top_fraction, const std::string& task_sel, int n_inputs, int n_outputs,
                const std::string& out_path) {
  std::map<std::string, std::vector<TrialRecord>> logs;
  json cfg_logs = json::object();
  for (const std::string& spec : log_specs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
      throw CLI::ValidationError("--log expects NAME=PATH, got '" + spec + "'");
    const std::string name = spec.substr(0, eq), path = spec.substr(eq + 1);
    logs[name] = load_trial_log(path);
    cfg_logs[name] = path;
  }
  const TaskKind task = task_sel == "classification" ? TaskKind::FramewiseClassification
                                                     : TaskKind::NextStepPrediction;
  const ComparisonTable table =
      compare_variants(logs, baseline, top_fraction, task, n_inputs, n_outputs);

  json doc;
  doc["schema_version"] = kArtifactSchemaVersion;
  doc["config"] = {{"logs", cfg_logs},       {"baseline", baseline},
                   {"top_fraction", top_fraction}, {"task", task_sel},
                   {"n_inputs", n_inputs},   {"n_outputs", n_outputs}};
  json rows = json::array();
  for (const VariantSummary& r : table.rows) {
    json jr;
    jr["variant"] = r.variant;
    jr["present"] = r.present;
    jr["is_baseline"] = r.is_baseline;
    if (r.present) {
      jr["n_top"] = r.n_top;
      jr["mean"] = r.mean;
      jr["quartiles"] = {{"min", r.box.min},
                         {"q1", r.box.q1},
                         {"median", r.box.median},
                         {"q3", r.box.q3},
                         {"max", r.box.max}};
      jr["mean_params"] = r.mean_params;
      if (!r.is_baseline) {
        jr["p_value"] = r.p_value;
        jr["adjusted_p"] = r.adjusted_p;
        jr["significant"] = r.significant;
      }
    }
    rows.push_back(std::move(jr));
  }
  doc["rows"] = std::move(rows);
  emit(doc, out_path);
  return 0;
}

int cmd_fanova(const std::string& log_path, bool drop_diverged, const ForestConfig& config,
               const HyperRanges& ranges, int grid_points, const std::string& out_path) {
  const std::vector<TrialRecord> trials = load_trial_log(log_path);
  const FanovaInput input = fanova_from_trials(trials, ranges, drop_diverged);
  if (input.points.size() < 2)
    throw std::runtime_error("fanova: fewer than 2 usable trials in " + log_path);
  Forest forest = fit_forest(input.points, input.responses, input.box, config);
  forest.axis_names = input.axis_names;
  const VarianceDecomposition vd = decompose_variance(forest);

  json doc;
  doc["schema_version"] = kArtifactSchemaVersion;
  doc["config"] = {{"log", log_path},
                   {"drop_diverged", drop_diverged},
                   {"n_trees", config.n_trees},
                   {"min_leaf", config.min_leaf},
                   {"bootstrap", config.bootstrap},
                   {"seed", config.seed},
                   {"grid_points", grid_points}};
  doc["n_points"] = input.points.size();
  doc["axes"] = input.axis_names;
  doc["total_variance"] = vd.total_variance;
  doc["zero_variance"] = vd.zero_variance;
  doc["higher_order_fraction"] = vd.higher_order;

  // Single fractions, largest first.
  std::vector<size_t> order(input.axis_names.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return vd.single_fractions[a] > vd.single_fractions[b];
  });
  json singles = json::array();
  for (size_t d : order)
    singles.push_back(
        {{"axis", input.axis_names[d]}, {"fraction", vd.single_fractions[d]}});
  doc["single_fractions"] = std::move(singles);

  json pairs = json::array();
  for (size_t i = 0; i < input.axis_names.size(); ++i)
    for (size_t j = i + 1; j < input.axis_names.size(); ++j)
      pairs.push_back({{"axis_i", input.axis_names[i]},
                       {"axis_j", input.axis_names[j]},
                       {"fraction", vd.pair_fractions(static_cast<int>(i),
                                                      static_cast<int>(j))}});
  doc["pair_fractions"] = std::move(pairs);

  json marginals = json::array();
  for (int d = 0; d < input.box.dims(); ++d) {
    std::vector<Vector> grid;
    Vector axis;
    for (int g = 0; g < grid_points; ++g) {
      const double x = input.box.lo[static_cast<size_t>(d)] +
                       (g + 0.5) / grid_points * input.box.length(d);
      axis.push_back(x);
      grid.push_back({x});
    }
    const MarginalCurve curve = marginal(forest, {d}, grid);
    marginals.push_back({{"axis", input.axis_names[static_cast<size_t>(d)]},
                         {"grid", axis},
                         {"mean", curve.mean},
                         {"std", curve.std}});
  }
  doc["marginals"] = std::move(marginals);
  emit(doc, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM variant lab: training, search and analysis tools"};
  app.require_subcommand(1);
  int rc = 0;

  // gradcheck -----------------------------------------------------------
  auto* gc = app.add_subcommand("gradcheck", "Check BPTT against finite differences");
  std::string gc_variant = "all", gc_task = "both", gc_out;
  GradCheckSizes gc_sizes;
  uint64_t gc_seed = 1;
  double gc_tol = 1e-5, gc_eps = 1e-6;
  {
    std::vector<std::string> names = VariantSpec::preset_names();
    names.push_back("all");
    gc->add_option("--variant", gc_variant, "Variant preset or 'all'")
        ->check(CLI::IsMember(names));
  }
  gc->add_option("--task", gc_task, "Which task head to check")
      ->check(CLI::IsMember({"classification", "prediction", "both"}));
  gc->add_option("--seed", gc_seed, "Seed for weights and data");
  gc->add_option("--tolerance", gc_tol, "Max allowed relative error");
  gc->add_option("--eps", gc_eps, "Finite-difference step");
  gc->add_option("--n-blocks", gc_sizes.n_blocks);
  gc->add_option("--n-inputs", gc_sizes.n_inputs);
  gc->add_option("--n-outputs", gc_sizes.n_outputs);
  gc->add_option("--seq-len", gc_sizes.seq_len);
  gc->add_option("--n-sequences", gc_sizes.n_sequences);
  gc->add_option("--out", gc_out, "Also write the report to a file");
  gc->callback([&] {
    rc = cmd_gradcheck(gc_variant, gc_task, gc_sizes, gc_seed, gc_tol, gc_eps, gc_out);
  });

  // gen-data ------------------------------------------------------------
  auto* gd = app.add_subcommand("gen-data", "Generate a dataset file");
  DataSpec gd_spec;
  std::string gd_out;
  add_data_flags(gd, gd_spec);
  gd->get_option("--generate")->required();
  gd->get_option("--data")->group("");  // not applicable here
  gd->add_option("--out", gd_out, "Output path")->required();
  gd->callback([&] {
    if (!gd_spec.data_path.empty()) throw CLI::ValidationError("gen-data takes --generate only");
    rc = cmd_gen_data(gd_spec, gd_out);
  });

  // train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train one network");
  DataSpec tr_spec;
  std::string tr_variant = "V", tr_out, tr_weights, tr_log;
  int tr_blocks = 20;
  TrainConfig tr_cfg;
  add_data_flags(tr, tr_spec);
  tr->add_option("--variant", tr_variant, "Variant preset")
      ->check(CLI::IsMember(VariantSpec::preset_names()));
  tr->add_option("--n-blocks", tr_blocks, "Hidden size per direction")
      ->check(CLI::PositiveNumber);
  tr->add_option("--learning-rate", tr_cfg.learning_rate,
                 "Configured rate; rescaled by (1 - momentum) before use");
  tr->add_option("--momentum", tr_cfg.momentum, "Nesterov momentum in [0,1)");
  tr->add_option("--input-noise-std", tr_cfg.input_noise_std, "Training-input Gaussian noise");
  tr->add_flag("--clip", tr_cfg.clip, "Clamp gradients to [-1,1]");
  tr->add_option("--max-epochs", tr_cfg.max_epochs)->check(CLI::PositiveNumber);
  tr->add_option("--patience", tr_cfg.patience)->check(CLI::PositiveNumber);
  tr->add_option("--seed", tr_cfg.seed, "Training seed (init/shuffle/noise)");
  tr->add_option("--out", tr_out, "Also write the result to a file");
  tr->add_option("--save-weights", tr_weights, "Write best-validation weights");
  tr->add_option("--log", tr_log, "Append a trial-log record");
  tr->callback([&] {
    rc = cmd_train(tr, tr_spec, tr_variant, tr_blocks, tr_cfg, tr_out, tr_weights, tr_log);
  });

  // search --------------------------------------------------------------
  auto* se = app.add_subcommand("search", "Random hyperparameter search");
  DataSpec se_spec;
  std::string se_variant = "V", se_log, se_out;
  SearchConfig se_cfg;
  add_data_flags(se, se_spec);
  se->add_option("--variant", se_variant, "Variant preset")
      ->check(CLI::IsMember(VariantSpec::preset_names()));
  se->add_option("--n-trials", se_cfg.n_trials)->check(CLI::PositiveNumber);
  se->add_option("--parallelism", se_cfg.parallelism)->check(CLI::PositiveNumber);
  se->add_option("--base-seed", se_cfg.base_seed, "Seed for the trial streams");
  se->add_flag("--include-booleans", se_cfg.include_booleans,
               "Also sample momentum style and gradient clipping");
  se->add_option("--max-epochs", se_cfg.max_epochs)->check(CLI::PositiveNumber);
  se->add_option("--patience", se_cfg.patience)->check(CLI::PositiveNumber);
  se->add_option("--n-blocks-min", se_cfg.ranges.n_blocks_min)->check(CLI::PositiveNumber);
  se->add_option("--n-blocks-max", se_cfg.ranges.n_blocks_max)->check(CLI::PositiveNumber);
  se->add_option("--lr-min", se_cfg.ranges.learning_rate_min);
  se->add_option("--lr-max", se_cfg.ranges.learning_rate_max);
  se->add_option("--noise-min", se_cfg.ranges.noise_min);
  se->add_option("--noise-max", se_cfg.ranges.noise_max);
  se->add_option("--log", se_log, "Trial log path (appended, resumable)")->required();
  se->add_option("--out", se_out, "Also write the summary to a file");
  se->callback([&] { rc = cmd_search(se, se_spec, se_variant, se_cfg, se_log, se_out); });

  // analyze -------------------------------------------------------------
  auto* an = app.add_subcommand("analyze", "Compare variant trial logs against a baseline");
  std::vector<std::string> an_logs;
  std::string an_baseline = "V", an_task = "prediction", an_out;
  double an_top = 0.10;
  int an_inputs = 0, an_outputs = 0;
  an->add_option("--log", an_logs, "NAME=PATH, repeatable")->required();
  an->add_option("--baseline", an_baseline, "Baseline variant name");
  an->add_option("--top-fraction", an_top, "Fraction kept per variant")
      ->check(CLI::Range(1e-9, 1.0));
  an->add_option("--task", an_task, "Task the logs came from")
      ->check(CLI::IsMember({"classification", "prediction"}));
  an->add_option("--n-inputs", an_inputs, "Dataset input width")
      ->required()
      ->check(CLI::PositiveNumber);
  an->add_option("--n-outputs", an_outputs, "Dataset output width")
      ->required()
      ->check(CLI::PositiveNumber);
  an->add_option("--out", an_out, "Also write the table to a file");
  an->callback([&] {
    rc = cmd_analyze(an_logs, an_baseline, an_top, an_task, an_inputs, an_outputs, an_out);
  });

  // fanova ---------------------------------------------------------------
  auto* fa = app.add_subcommand("fanova", "Variance decomposition of a trial log");
  std::string fa_log, fa_out;
  bool fa_drop = false;
  ForestConfig fa_cfg;
  HyperRanges fa_ranges;
  int fa_grid = 20;
  fa->add_option("--log", fa_log, "Trial log path")->required();
  fa->add_option("--n-blocks-min", fa_ranges.n_blocks_min, "Sampling box used by the search")
      ->check(CLI::PositiveNumber);
  fa->add_option("--n-blocks-max", fa_ranges.n_blocks_max)->check(CLI::PositiveNumber);
  fa->add_option("--lr-min", fa_ranges.learning_rate_min);
  fa->add_option("--lr-max", fa_ranges.learning_rate_max);
  fa->add_option("--noise-min", fa_ranges.noise_min);
  fa->add_option("--noise-max", fa_ranges.noise_max);
  fa->add_flag("--drop-diverged", fa_drop, "Exclude diverged trials");
  fa->add_option("--n-trees", fa_cfg.n_trees)->check(CLI::PositiveNumber);
  fa->add_option("--min-leaf", fa_cfg.min_leaf)->check(CLI::PositiveNumber);
  fa->add_option("--seed", fa_cfg.seed, "Bootstrap seed");
  fa->add_option("--grid", fa_grid, "Marginal grid points per axis")
      ->check(CLI::PositiveNumber);
  fa->add_option("--out", fa_out, "Also write the report to a file");
  fa->callback([&] { rc = cmd_fanova(fa_log, fa_drop, fa_cfg, fa_ranges, fa_grid, fa_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rnnlab/lstm.hpp"
#include "rnnlab/numerics.hpp"

namespace rnnlab {

enum class TaskKind { FramewiseClassification, NextStepPrediction };

std::string task_name(TaskKind t);
TaskKind task_from_name(std::string_view name);

struct NetworkConfig {
  TaskKind task = TaskKind::FramewiseClassification;
  bool bidirectional = true;  // classification: true; next-step prediction: false
  int hidden_size = 0;        // N
  int n_inputs = 0;           // M
  int n_outputs = 0;          // K
  VariantSpec variant;

  void validate() const;
};

/// Forward layer, optional backward layer and the shared output layer.
/// Bidirectional nets concatenate the two hidden states (2N) into one
/// output layer. Also used as the gradient mirror.
struct NetworkWeights {
  LstmWeights forward_layer;
  std::optional<LstmWeights> backward_layer;
  Matrix W_out;  // K x N or K x 2N
  Vector b_out;
};

using NetworkGradients = NetworkWeights;

NetworkWeights make_network(const NetworkConfig& config);
NetworkWeights init_network(const NetworkConfig& config, Rng& rng, double init_std = 0.1);
long network_num_params(const NetworkConfig& config);

/// Named flat views over all present parameter blocks ("fwd.W_z",
/// "bwd.R_i", "out.W", ...). Order is deterministic; gradients align.
std::vector<NamedBlock> network_named_blocks(NetworkWeights& w);
std::vector<double> network_to_flat(NetworkWeights& w);
void network_from_flat(NetworkWeights& w, std::span<const double> flat);
long network_param_count(NetworkWeights& w);

// Losses with stabilized evaluation; each returns (loss, delta w.r.t. the
// pre-activation / logits).
std::pair<double, Vector> softmax_xent(const Vector& logits, int target_class);
std::pair<double, Vector> sigmoid_bce(const Vector& pre, const Vector& target);

/// One sequence of a dataset. Exactly one of class_targets /
/// binary_targets is populated, matching the task.
struct Sequence {
  std::vector<Vector> inputs;
  std::vector<int> class_targets;
  std::vector<Vector> binary_targets;
};

struct NetworkPassResult {
  double loss = 0.0;         // summed over timesteps
  double metric_value = 0.0; // error count (classification) or NLL sum (prediction)
  double metric_weight = 0.0;// frames (classification) or 1 per sequence (prediction)
  bool diverged = false;
  std::optional<NetworkGradients> grads;
};

/// Runs the network over one sequence; computes loss, the task metric
/// contribution and (optionally) all parameter gradients via BPTT.
NetworkPassResult network_forward_backward(const NetworkWeights& weights,
                                           const NetworkConfig& config,
                                           const Sequence& seq,
                                           bool compute_grads = true);

struct EvalResult {
  double mean_loss = 0.0;  // mean per-sequence loss
  double metric = 0.0;     // error rate or mean per-sequence NLL
  bool diverged = false;
};

EvalResult evaluate(const NetworkWeights& weights, const NetworkConfig& config,
                    std::span<const Sequence> sequences);

}  // namespace rnnlab

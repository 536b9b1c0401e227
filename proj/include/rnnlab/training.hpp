#pragma once

#include <limits>
#include <span>
#include <vector>

#include "rnnlab/data.hpp"
#include "rnnlab/network.hpp"

namespace rnnlab {

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double input_noise_std = 0.0;
  bool clip = false;  // clamp gradients to [-1, 1] before each update
  int max_epochs = 150;
  int patience = 15;  // epochs without strict validation improvement
  uint64_t seed = 0;

  // The configured rate is rescaled by (1 - momentum) before use.
  double effective_learning_rate() const { return learning_rate * (1.0 - momentum); }

  void validate() const;
};

// Worst-case metrics assigned to diverged trials so downstream analysis
// still sees a finite, rankable value.
inline constexpr double kDivergedErrorRate = 1.0;
inline constexpr double kDivergedNll = 1e9;

struct EpochPoint {
  double train_loss = 0.0;
  double train_metric = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
};

struct TrainResult {
  std::vector<EpochPoint> curves;  // one entry per completed epoch
  int epochs_run = 0;
  int best_val_epoch = 0;  // 1-based; 0 if training diverged before any epoch
  double best_val_loss = 0.0;
  double best_val_metric = 0.0;
  double test_loss_at_best_val = 0.0;
  double test_metric_at_best_val = 0.0;
  double wall_time_seconds = 0.0;
  bool diverged = false;
  long noise_draws = 0;  // Gaussian samples consumed noising training inputs
  NetworkWeights best_weights;  // snapshot from best_val_epoch
};

/// Strict-improvement early stopping: only a validation metric strictly
/// below the best so far resets the patience counter; ties do not.
struct EarlyStopper {
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Records epoch's validation metric; returns true when training should
  /// stop after this epoch.
  bool observe(int epoch, double val_metric) {
    if (val_metric < best_) {
      best_ = val_metric;
      best_epoch_ = epoch;
    }
    return epoch - best_epoch_ >= patience_;
  }

  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
};

/// v <- m*v - lr*g; p <- p + m*v - lr*g. lr is the already-rescaled rate.
void nesterov_update(std::span<double> params, std::span<double> velocity,
                     std::span<const double> grads, double lr, double momentum);

/// Same update applied block-by-block across a whole network.
void nesterov_update_network(NetworkWeights& weights, NetworkWeights& velocity,
                             NetworkWeights& grads, double lr, double momentum);

/// Fresh i.i.d. Normal(0, sigma^2) added to every entry. sigma = 0 returns
/// the inputs unchanged (and consumes no draws).
std::vector<Vector> add_input_noise(std::span<const Vector> inputs, double sigma, Rng& rng);

/// Clamps every gradient entry to [-1, 1].
void clip_gradients(NetworkWeights& grads);

/// Full training protocol: per-sequence SGD with Nesterov momentum over a
/// seeded shuffle, training-only input noise, early stopping on the
/// validation metric (strict improvement, patience epochs), test metric
/// reported from the best-validation weight snapshot.
TrainResult train(const Dataset& dataset, const NetworkConfig& net_config,
                  const TrainConfig& train_config);

}  // namespace rnnlab

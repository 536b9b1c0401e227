#include "rnnlab/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rnnlab {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("TrainConfig: momentum in [0,1)");
  if (input_noise_std < 0.0) throw std::invalid_argument("TrainConfig: noise std >= 0");
  if (max_epochs < 1 || patience < 1)
    throw std::invalid_argument("TrainConfig: epochs and patience >= 1");
}

void nesterov_update(std::span<double> params, std::span<double> velocity,
                     std::span<const double> grads, double lr, double momentum) {
  if (params.size() != velocity.size() || params.size() != grads.size())
    throw std::invalid_argument("nesterov_update: size mismatch");
  for (size_t k = 0; k < params.size(); ++k) {
    velocity[k] = momentum * velocity[k] - lr * grads[k];
    params[k] += momentum * velocity[k] - lr * grads[k];
  }
}

void nesterov_update_network(NetworkWeights& weights, NetworkWeights& velocity,
                             NetworkWeights& grads, double lr, double momentum) {
  auto wb = network_named_blocks(weights);
  auto vb = network_named_blocks(velocity);
  auto gb = network_named_blocks(grads);
  if (wb.size() != vb.size() || wb.size() != gb.size())
    throw std::invalid_argument("nesterov_update_network: block mismatch");
  for (size_t i = 0; i < wb.size(); ++i)
    nesterov_update(wb[i].values, vb[i].values, gb[i].values, lr, momentum);
}

std::vector<Vector> add_input_noise(std::span<const Vector> inputs, double sigma, Rng& rng) {
  std::vector<Vector> out(inputs.begin(), inputs.end());
  if (sigma == 0.0) return out;
  for (Vector& x : out)
    for (double& v : x) v += rng.normal(0.0, sigma);
  return out;
}

void clip_gradients(NetworkWeights& grads) {
  for (NamedBlock& block : network_named_blocks(grads))
    for (double& g : block.values) g = std::clamp(g, -1.0, 1.0);
}

namespace {

double worst_case_metric(TaskKind task) {
  return task == TaskKind::FramewiseClassification ? kDivergedErrorRate : kDivergedNll;
}

}  // namespace

TrainResult train(const Dataset& dataset, const NetworkConfig& net_config,
                  const TrainConfig& train_config) {
  train_config.validate();
  net_config.validate();
  dataset.validate();

  const auto t_start = std::chrono::steady_clock::now();
  TrainResult result;

  Rng root(train_config.seed);
  Rng init_rng = root.derived(0);
  Rng shuffle_rng = root.derived(1);
  Rng noise_rng = root.derived(2);

  NetworkWeights weights = init_network(net_config, init_rng);
  NetworkWeights velocity = make_network(net_config);
  const double lr = train_config.effective_learning_rate();

  result.best_weights = weights;
  EarlyStopper stopper(train_config.patience);

  std::vector<size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  auto finish = [&](bool diverged) {
    result.diverged = diverged;
    if (diverged || result.best_val_epoch == 0) {
      result.diverged = true;
      result.best_val_metric = worst_case_metric(net_config.task);
      result.best_val_loss = worst_case_metric(net_config.task);
      result.test_metric_at_best_val = worst_case_metric(net_config.task);
      result.test_loss_at_best_val = worst_case_metric(net_config.task);
    } else {
      EvalResult test = evaluate(result.best_weights, net_config, dataset.test);
      if (test.diverged || !std::isfinite(test.metric)) {
        result.diverged = true;
        result.test_metric_at_best_val = worst_case_metric(net_config.task);
        result.test_loss_at_best_val = worst_case_metric(net_config.task);
      } else {
        result.test_metric_at_best_val = test.metric;
        result.test_loss_at_best_val = test.mean_loss;
      }
    }
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
  };

  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    // seeded Fisher-Yates shuffle of the per-epoch sequence order
    for (size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[shuffle_rng.next_below(k)]);

    for (size_t idx : order) {
      Sequence seq = dataset.train[idx];
      if (train_config.input_noise_std > 0.0) {
        seq.inputs = add_input_noise(seq.inputs, train_config.input_noise_std, noise_rng);
        result.noise_draws +=
            static_cast<long>(seq.inputs.size()) * static_cast<long>(net_config.n_inputs);
      }
      NetworkPassResult pass = network_forward_backward(weights, net_config, seq, true);
      if (pass.diverged || !std::isfinite(pass.loss)) return finish(true);
      if (train_config.clip) clip_gradients(*pass.grads);
      nesterov_update_network(weights, velocity, *pass.grads, lr, train_config.momentum);
    }

    EpochPoint point;
    EvalResult tr = evaluate(weights, net_config, dataset.train);
    EvalResult va = evaluate(weights, net_config, dataset.val);
    if (tr.diverged || va.diverged || !std::isfinite(tr.metric) || !std::isfinite(va.metric))
      return finish(true);
    point.train_loss = tr.mean_loss;
    point.train_metric = tr.metric;
    point.val_loss = va.mean_loss;
    point.val_metric = va.metric;
    result.curves.push_back(point);
    result.epochs_run = epoch;

    const bool stop = stopper.observe(epoch, va.metric);
    if (stopper.best_epoch() == epoch) {
      result.best_val_epoch = epoch;
      result.best_val_metric = va.metric;
      result.best_val_loss = va.mean_loss;
      result.best_weights = weights;
    }
    if (stop) break;
  }

  return finish(false);
}

}  // namespace rnnlab

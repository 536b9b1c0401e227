#include "rnnlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rnnlab {

std::string task_name(TaskKind t) {
  return t == TaskKind::FramewiseClassification ? "framewise_classification"
                                                : "nextstep_prediction";
}

TaskKind task_from_name(std::string_view name) {
  if (name == "framewise_classification") return TaskKind::FramewiseClassification;
  if (name == "nextstep_prediction") return TaskKind::NextStepPrediction;
  throw std::invalid_argument("unknown task: " + std::string(name));
}

void NetworkConfig::validate() const {
  if (task == TaskKind::FramewiseClassification && !bidirectional)
    throw std::invalid_argument("framewise classification uses a bidirectional net");
  if (task == TaskKind::NextStepPrediction && bidirectional)
    throw std::invalid_argument("next-step prediction uses a unidirectional net");
  if (hidden_size < 1 || n_inputs < 1 || n_outputs < 1)
    throw std::invalid_argument("network sizes must be >= 1");
  variant.validate();
}

NetworkWeights make_network(const NetworkConfig& config) {
  config.validate();
  NetworkWeights w;
  w.forward_layer = make_weights(config.variant, config.hidden_size, config.n_inputs);
  int hidden = config.hidden_size;
  if (config.bidirectional) {
    w.backward_layer = make_weights(config.variant, config.hidden_size, config.n_inputs);
    hidden *= 2;
  }
  w.W_out = Matrix(config.n_outputs, hidden);
  w.b_out = Vector(config.n_outputs, 0.0);
  return w;
}

NetworkWeights init_network(const NetworkConfig& config, Rng& rng, double init_std) {
  NetworkWeights w = make_network(config);
  for (auto& block : network_named_blocks(w))
    for (double& v : block.values) v = rng.normal(0.0, init_std);
  return w;
}

long network_num_params(const NetworkConfig& config) {
  NetworkWeights w = make_network(config);
  return network_param_count(w);
}

std::vector<NamedBlock> network_named_blocks(NetworkWeights& w) {
  std::vector<NamedBlock> out;
  for (auto& b : named_blocks(w.forward_layer))
    out.push_back({"fwd." + b.name, b.values, b.rows, b.cols});
  if (w.backward_layer)
    for (auto& b : named_blocks(*w.backward_layer))
      out.push_back({"bwd." + b.name, b.values, b.rows, b.cols});
  out.push_back({"out.W", std::span<double>(w.W_out.data), w.W_out.rows, w.W_out.cols});
  out.push_back({"out.b", std::span<double>(w.b_out), 0, 0});
  return out;
}

std::vector<double> network_to_flat(NetworkWeights& w) {
  std::vector<double> flat;
  for (auto& b : network_named_blocks(w)) flat.insert(flat.end(), b.values.begin(), b.values.end());
  return flat;
}

void network_from_flat(NetworkWeights& w, std::span<const double> flat) {
  size_t pos = 0;
  for (auto& b : network_named_blocks(w)) {
    if (pos + b.values.size() > flat.size())
      throw std::invalid_argument("network_from_flat: size mismatch");
    std::copy(flat.begin() + pos, flat.begin() + pos + b.values.size(), b.values.begin());
    pos += b.values.size();
  }
  if (pos != flat.size()) throw std::invalid_argument("network_from_flat: size mismatch");
}

long network_param_count(NetworkWeights& w) {
  long n = 0;
  for (auto& b : network_named_blocks(w)) n += static_cast<long>(b.values.size());
  return n;
}

std::pair<double, Vector> softmax_xent(const Vector& logits, int target_class) {
  const int k = static_cast<int>(logits.size());
  if (target_class < 0 || target_class >= k)
    throw std::invalid_argument("softmax_xent: target class out of range");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double log_z = m + std::log(sum);
  Vector delta(k);
  for (int j = 0; j < k; ++j) delta[j] = std::exp(logits[j] - log_z);
  const double loss = log_z - logits[target_class];
  delta[target_class] -= 1.0;
  return {loss, std::move(delta)};
}

std::pair<double, Vector> sigmoid_bce(const Vector& pre, const Vector& target) {
  if (pre.size() != target.size())
    throw std::invalid_argument("sigmoid_bce: size mismatch");
  double nll = 0.0;
  Vector delta(pre.size());
  for (size_t j = 0; j < pre.size(); ++j) {
    const double a = pre[j], t = target[j];
    nll += std::max(a, 0.0) - a * t + std::log1p(std::exp(-std::abs(a)));
    delta[j] = logistic(a) - t;
  }
  return {nll, std::move(delta)};
}

namespace {

Vector concat(const Vector& a, const Vector& b) {
  Vector out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

NetworkPassResult network_forward_backward(const NetworkWeights& weights,
                                           const NetworkConfig& config,
                                           const Sequence& seq,
                                           bool compute_grads) {
  config.validate();
  const int n = config.hidden_size;
  const int T = static_cast<int>(seq.inputs.size());
  NetworkPassResult res;
  if (T == 0) throw std::invalid_argument("empty sequence");

  ForwardResult fwd = forward_sequence(weights.forward_layer, seq.inputs);
  ForwardResult bwd;
  if (config.bidirectional) {
    std::vector<Vector> reversed(seq.inputs.rbegin(), seq.inputs.rend());
    bwd = forward_sequence(*weights.backward_layer, reversed);
  }
  if (fwd.diverged || bwd.diverged) {
    res.diverged = true;
    return res;
  }

  std::vector<Vector> hidden(T);
  for (int t = 0; t < T; ++t) {
    hidden[t] = config.bidirectional ? concat(fwd.outputs[t], bwd.outputs[T - 1 - t])
                                     : fwd.outputs[t];
  }

  std::optional<NetworkGradients> grads;
  if (compute_grads) grads = make_network(config);
  std::vector<Vector> fwd_deltas(T, Vector(n, 0.0));
  std::vector<Vector> bwd_deltas(config.bidirectional ? T : 0, Vector(n, 0.0));

  for (int t = 0; t < T; ++t) {
    Vector logits = matvec(weights.W_out, hidden[t]);
    for (size_t j = 0; j < logits.size(); ++j) logits[j] += weights.b_out[j];
    if (std::any_of(logits.begin(), logits.end(),
                    [](double v) { return !std::isfinite(v); })) {
      res.diverged = true;
      return res;
    }

    double loss;
    Vector delta;
    if (config.task == TaskKind::FramewiseClassification) {
      const int target = seq.class_targets.at(t);
      std::tie(loss, delta) = softmax_xent(logits, target);
      const int pred = static_cast<int>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
      res.metric_value += pred != target ? 1.0 : 0.0;
      res.metric_weight += 1.0;
    } else {
      std::tie(loss, delta) = sigmoid_bce(logits, seq.binary_targets.at(t));
    }
    res.loss += loss;

    if (compute_grads) {
      outer_accumulate(grads->W_out, delta, hidden[t]);
      for (size_t j = 0; j < delta.size(); ++j) grads->b_out[j] += delta[j];
      Vector dh = matvec_transposed(weights.W_out, delta);
      if (config.bidirectional) {
        std::copy(dh.begin(), dh.begin() + n, fwd_deltas[t].begin());
        std::copy(dh.begin() + n, dh.end(), bwd_deltas[T - 1 - t].begin());
      } else {
        fwd_deltas[t] = std::move(dh);
      }
    }
  }

  if (config.task == TaskKind::NextStepPrediction) {
    res.metric_value = res.loss;  // per-sequence NLL
    res.metric_weight = 1.0;
  }
  if (!std::isfinite(res.loss)) {
    res.diverged = true;
    return res;
  }

  if (compute_grads) {
    BackwardResult f = backward_sequence(weights.forward_layer, fwd.cache, fwd_deltas);
    grads->forward_layer = std::move(f.grads);
    if (config.bidirectional) {
      BackwardResult b = backward_sequence(*weights.backward_layer, bwd.cache, bwd_deltas);
      grads->backward_layer = std::move(b.grads);
    }
    res.grads = std::move(grads);
  }
  return res;
}

EvalResult evaluate(const NetworkWeights& weights, const NetworkConfig& config,
                    std::span<const Sequence> sequences) {
  EvalResult out;
  if (sequences.empty()) throw std::invalid_argument("evaluate: empty split");
  double value = 0.0, weight = 0.0, loss = 0.0;
  for (const Sequence& seq : sequences) {
    NetworkPassResult r = network_forward_backward(weights, config, seq, false);
    if (r.diverged) {
      out.diverged = true;
      return out;
    }
    value += r.metric_value;
    weight += r.metric_weight;
    loss += r.loss;
  }
  out.mean_loss = loss / static_cast<double>(sequences.size());
  out.metric = value / weight;
  return out;
}

}  // namespace rnnlab

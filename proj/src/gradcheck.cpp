#include "rnnlab/gradcheck.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rnnlab {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-10, std::abs(a) + std::abs(b));
}

std::vector<double> finite_diff(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff: eps must be > 0");
  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> grad(theta.size(), 0.0);
  for (size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + eps;
    const double up = loss_fn(theta);
    theta[k] = saved - eps;
    const double down = loss_fn(theta);
    theta[k] = saved;
    grad[k] = (std::isfinite(up) && std::isfinite(down))
                  ? (up - down) / (2.0 * eps)
                  : std::numeric_limits<double>::quiet_NaN();
  }
  return grad;
}

namespace {

// Independent re-implementation of the network forward pass in extended
// precision. check_variant differences this instead of the production code:
// at eps = 1e-6 the rounding of a double loss (~ulp(L)/2eps ~ 1e-10) already
// swamps small gradient entries, while long double keeps the central
// difference three orders of magnitude below the 1e-5 bar. Sharing no code
// with lstm.cpp also guards against a bug cancelling itself out.
using ld = long double;
using LdVec = std::vector<ld>;

LdVec matvec_ld(const Matrix& m, const LdVec& v) {
  LdVec out(static_cast<size_t>(m.rows), 0.0L);
  for (int r = 0; r < m.rows; ++r) {
    ld s = 0.0L;
    for (int c = 0; c < m.cols; ++c) s += static_cast<ld>(m(r, c)) * v[static_cast<size_t>(c)];
    out[static_cast<size_t>(r)] = s;
  }
  return out;
}

ld logistic_ld(ld x) { return 1.0L / (1.0L + std::exp(-x)); }

std::vector<LdVec> layer_forward_ld(const LstmWeights& w, std::span<const Vector> inputs) {
  const VariantSpec& spec = w.spec;
  const size_t N = static_cast<size_t>(w.n_blocks);
  std::vector<LdVec> outputs;
  LdVec c_prev(N, 0.0L), y_prev(N, 0.0L);
  LdVec i_prev(N, 0.0L), f_prev(N, 0.0L), o_prev(N, 0.0L);

  for (const Vector& x : inputs) {
    LdVec xl(x.begin(), x.end());

    LdVec zbar = matvec_ld(w.W_z, xl);
    {
      LdVec rec = matvec_ld(w.R_z, y_prev);
      for (size_t k = 0; k < N; ++k) zbar[k] += rec[k] + static_cast<ld>(w.b_z[k]);
    }
    LdVec z(N);
    for (size_t k = 0; k < N; ++k)
      z[k] = spec.input_activation == Activation::Tanh ? std::tanh(zbar[k]) : zbar[k];

    LdVec i(N, 1.0L);
    if (spec.has_input_gate_params()) {
      LdVec ibar = matvec_ld(w.W_i, xl);
      LdVec rec = matvec_ld(w.R_i, y_prev);
      for (size_t k = 0; k < N; ++k) ibar[k] += rec[k] + static_cast<ld>(w.b_i[k]);
      if (!w.p_i.empty())
        for (size_t k = 0; k < N; ++k) ibar[k] += static_cast<ld>(w.p_i[k]) * c_prev[k];
      if (!w.R_ii.empty()) {
        LdVec a = matvec_ld(w.R_ii, i_prev), b = matvec_ld(w.R_fi, f_prev),
              c = matvec_ld(w.R_oi, o_prev);
        for (size_t k = 0; k < N; ++k) ibar[k] += a[k] + b[k] + c[k];
      }
      for (size_t k = 0; k < N; ++k) i[k] = logistic_ld(ibar[k]);
    }

    LdVec f(N, 1.0L);
    if (spec.couple_input_forget) {
      for (size_t k = 0; k < N; ++k) f[k] = 1.0L - i[k];
    } else if (spec.has_forget_gate_params()) {
      LdVec fbar = matvec_ld(w.W_f, xl);
      LdVec rec = matvec_ld(w.R_f, y_prev);
      for (size_t k = 0; k < N; ++k) fbar[k] += rec[k] + static_cast<ld>(w.b_f[k]);
      if (!w.p_f.empty())
        for (size_t k = 0; k < N; ++k) fbar[k] += static_cast<ld>(w.p_f[k]) * c_prev[k];
      if (!w.R_if.empty()) {
        LdVec a = matvec_ld(w.R_if, i_prev), b = matvec_ld(w.R_ff, f_prev),
              c = matvec_ld(w.R_of, o_prev);
        for (size_t k = 0; k < N; ++k) fbar[k] += a[k] + b[k] + c[k];
      }
      for (size_t k = 0; k < N; ++k) f[k] = logistic_ld(fbar[k]);
    }

    LdVec c(N);
    for (size_t k = 0; k < N; ++k) c[k] = z[k] * i[k] + c_prev[k] * f[k];

    LdVec o(N, 1.0L);
    if (spec.has_output_gate_params()) {
      LdVec obar = matvec_ld(w.W_o, xl);
      LdVec rec = matvec_ld(w.R_o, y_prev);
      for (size_t k = 0; k < N; ++k) obar[k] += rec[k] + static_cast<ld>(w.b_o[k]);
      if (!w.p_o.empty())
        for (size_t k = 0; k < N; ++k) obar[k] += static_cast<ld>(w.p_o[k]) * c[k];
      if (!w.R_io.empty()) {
        LdVec a = matvec_ld(w.R_io, i_prev), b = matvec_ld(w.R_fo, f_prev),
              d = matvec_ld(w.R_oo, o_prev);
        for (size_t k = 0; k < N; ++k) obar[k] += a[k] + b[k] + d[k];
      }
      for (size_t k = 0; k < N; ++k) o[k] = logistic_ld(obar[k]);
    }

    LdVec y(N);
    for (size_t k = 0; k < N; ++k)
      y[k] = o[k] * (spec.output_activation == Activation::Tanh ? std::tanh(c[k]) : c[k]);

    outputs.push_back(y);
    c_prev = std::move(c);
    y_prev = std::move(y);
    i_prev = std::move(i);
    f_prev = std::move(f);
    o_prev = std::move(o);
  }
  return outputs;
}

ld sequence_loss_ld(const NetworkWeights& w, const NetworkConfig& config, const Sequence& seq) {
  const size_t T = seq.inputs.size();
  std::vector<LdVec> fwd = layer_forward_ld(w.forward_layer, seq.inputs);
  std::vector<LdVec> bwd;
  if (config.bidirectional) {
    std::vector<Vector> reversed(seq.inputs.rbegin(), seq.inputs.rend());
    bwd = layer_forward_ld(*w.backward_layer, reversed);
  }
  ld loss = 0.0L;
  for (size_t t = 0; t < T; ++t) {
    LdVec hidden = fwd[t];
    if (config.bidirectional)
      hidden.insert(hidden.end(), bwd[T - 1 - t].begin(), bwd[T - 1 - t].end());
    const size_t K = static_cast<size_t>(config.n_outputs);
    LdVec logits(K, 0.0L);
    for (size_t j = 0; j < K; ++j) {
      ld s = static_cast<ld>(w.b_out[j]);
      for (size_t h = 0; h < hidden.size(); ++h)
        s += static_cast<ld>(w.W_out(static_cast<int>(j), static_cast<int>(h))) * hidden[h];
      logits[j] = s;
    }
    if (config.task == TaskKind::FramewiseClassification) {
      ld mx = logits[0];
      for (ld v : logits) mx = std::max(mx, v);
      ld sum = 0.0L;
      for (ld v : logits) sum += std::exp(v - mx);
      loss += mx + std::log(sum) - logits[static_cast<size_t>(seq.class_targets[t])];
    } else {
      for (size_t j = 0; j < K; ++j) {
        const ld a = logits[j], tgt = static_cast<ld>(seq.binary_targets[t][j]);
        loss += std::max(a, 0.0L) - a * tgt + std::log1p(std::exp(-std::abs(a)));
      }
    }
  }
  return loss;
}

}  // namespace

namespace {

std::vector<Sequence> random_mini_dataset(const NetworkConfig& config,
                                          const GradCheckSizes& sizes, Rng& rng) {
  std::vector<Sequence> seqs;
  for (int s = 0; s < sizes.n_sequences; ++s) {
    Sequence seq;
    for (int t = 0; t < sizes.seq_len; ++t) {
      Vector x(sizes.n_inputs);
      for (double& v : x) v = rng.normal(0.0, 1.0);
      seq.inputs.push_back(std::move(x));
      if (config.task == TaskKind::FramewiseClassification) {
        seq.class_targets.push_back(
            static_cast<int>(rng.next_below(static_cast<uint64_t>(sizes.n_outputs))));
      } else {
        Vector target(sizes.n_outputs);
        for (double& v : target) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        seq.binary_targets.push_back(std::move(target));
      }
    }
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

}  // namespace

GradCheckReport check_variant(const std::string& preset, TaskKind task,
                              const GradCheckSizes& sizes, uint64_t seed,
                              double tolerance, double eps) {
  GradCheckReport report;
  report.variant = preset;
  report.task = task;
  report.eps = eps;
  report.tolerance = tolerance;

  NetworkConfig config;
  config.task = task;
  config.bidirectional = task == TaskKind::FramewiseClassification;
  config.hidden_size = sizes.n_blocks;
  config.n_inputs = sizes.n_inputs;
  config.n_outputs = sizes.n_outputs;
  config.variant = VariantSpec::preset(preset);

  Rng rng(seed);
  NetworkWeights weights = init_network(config, rng, sizes.init_std);
  std::vector<Sequence> dataset = random_mini_dataset(config, sizes, rng);

  // Analytic gradient via BPTT, summed over the mini-dataset.
  NetworkGradients total = make_network(config);
  std::vector<double> analytic(network_to_flat(total).size(), 0.0);
  for (const Sequence& seq : dataset) {
    NetworkPassResult r = network_forward_backward(weights, config, seq, true);
    std::vector<double> g = network_to_flat(*r.grads);
    for (size_t k = 0; k < g.size(); ++k) analytic[k] += g[k];
  }

  auto dataset_loss_ld = [&](std::span<const double> flat) {
    NetworkWeights w = make_network(config);
    network_from_flat(w, flat);
    ld loss = 0.0L;
    for (const Sequence& seq : dataset) loss += sequence_loss_ld(w, config, seq);
    return loss;
  };
  std::vector<double> flat = network_to_flat(weights);
  std::vector<double> numeric(flat.size(), 0.0);
  for (size_t k = 0; k < flat.size(); ++k) {
    const double saved = flat[k];
    flat[k] = saved + eps;
    const ld up = dataset_loss_ld(flat);
    flat[k] = saved - eps;
    const ld down = dataset_loss_ld(flat);
    flat[k] = saved;
    numeric[k] = static_cast<double>((up - down) / (2.0L * static_cast<ld>(eps)));
    if (!std::isfinite(numeric[k])) numeric[k] = std::numeric_limits<double>::quiet_NaN();
  }

  size_t pos = 0;
  for (auto& block : network_named_blocks(weights)) {
    double worst = 0.0;
    for (size_t k = 0; k < block.values.size(); ++k) {
      const double a = analytic[pos + k], b = numeric[pos + k];
      const double err = std::isfinite(b) ? relative_error(a, b)
                                          : std::numeric_limits<double>::infinity();
      worst = std::max(worst, err);
    }
    report.blocks.push_back({block.name, worst});
    report.max_relative_error = std::max(report.max_relative_error, worst);
    pos += block.values.size();
  }

  // Input deltas: perturb the inputs of the first sequence.
  {
    const Sequence& seq = dataset.front();
    const int T = static_cast<int>(seq.inputs.size());
    const int M = sizes.n_inputs;

    NetworkPassResult base = network_forward_backward(weights, config, seq, true);
    ForwardResult fwd = forward_sequence(weights.forward_layer, seq.inputs);
    std::vector<Vector> fwd_deltas(T, Vector(sizes.n_blocks, 0.0));
    std::vector<Vector> bwd_deltas(T, Vector(sizes.n_blocks, 0.0));
    // Recompute per-timestep output-layer deltas to drive the layer backward.
    std::vector<Vector> hidden(T);
    ForwardResult bwd;
    if (config.bidirectional) {
      std::vector<Vector> reversed(seq.inputs.rbegin(), seq.inputs.rend());
      bwd = forward_sequence(*weights.backward_layer, reversed);
    }
    for (int t = 0; t < T; ++t) {
      hidden[t] = fwd.outputs[t];
      if (config.bidirectional) {
        const Vector& hb = bwd.outputs[T - 1 - t];
        hidden[t].insert(hidden[t].end(), hb.begin(), hb.end());
      }
      Vector logits = matvec(weights.W_out, hidden[t]);
      for (size_t j = 0; j < logits.size(); ++j) logits[j] += weights.b_out[j];
      Vector delta = config.task == TaskKind::FramewiseClassification
                         ? softmax_xent(logits, seq.class_targets[t]).second
                         : sigmoid_bce(logits, seq.binary_targets[t]).second;
      Vector dh = matvec_transposed(weights.W_out, delta);
      std::copy(dh.begin(), dh.begin() + sizes.n_blocks, fwd_deltas[t].begin());
      if (config.bidirectional)
        std::copy(dh.begin() + sizes.n_blocks, dh.end(), bwd_deltas[T - 1 - t].begin());
    }
    BackwardResult back_f = backward_sequence(weights.forward_layer, fwd.cache, fwd_deltas);
    std::vector<Vector> dx(T, Vector(M, 0.0));
    for (int t = 0; t < T; ++t) dx[t] = back_f.input_deltas[t];
    if (config.bidirectional) {
      BackwardResult back_b =
          backward_sequence(*weights.backward_layer, bwd.cache, bwd_deltas);
      for (int t = 0; t < T; ++t) axpy(1.0, back_b.input_deltas[T - 1 - t], dx[t]);
    }

    std::vector<double> flat_x;
    for (const Vector& x : seq.inputs) flat_x.insert(flat_x.end(), x.begin(), x.end());
    auto input_loss_ld = [&](std::span<const double> fx) {
      Sequence s = seq;
      for (int t = 0; t < T; ++t)
        for (int m = 0; m < M; ++m) s.inputs[t][m] = fx[static_cast<size_t>(t) * M + m];
      return sequence_loss_ld(weights, config, s);
    };
    std::vector<double> numeric_x(flat_x.size(), 0.0);
    for (size_t k = 0; k < flat_x.size(); ++k) {
      const double saved = flat_x[k];
      flat_x[k] = saved + eps;
      const ld up = input_loss_ld(flat_x);
      flat_x[k] = saved - eps;
      const ld down = input_loss_ld(flat_x);
      flat_x[k] = saved;
      numeric_x[k] = static_cast<double>((up - down) / (2.0L * static_cast<ld>(eps)));
    }
    double worst = 0.0;
    for (int t = 0; t < T; ++t)
      for (int m = 0; m < M; ++m)
        worst = std::max(worst,
                         relative_error(dx[t][m], numeric_x[static_cast<size_t>(t) * M + m]));
    report.blocks.push_back({"inputs", worst});
    report.max_relative_error = std::max(report.max_relative_error, worst);
    (void)base;
  }

  report.pass = report.max_relative_error < tolerance;
  return report;
}

}  // namespace rnnlab

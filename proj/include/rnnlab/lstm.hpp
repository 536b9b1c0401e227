#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnnlab/numerics.hpp"

namespace rnnlab {

enum class Activation { Tanh, Identity };

/// Which architectural features of the LSTM block are enabled.
///
/// The nine named presets (V, NIG, NFG, NOG, NIAF, NOAF, NP, CIFG, FGR)
/// are constructible by name, but arbitrary combinations are allowed.
struct VariantSpec {
  bool input_gate = true;
  bool forget_gate = true;  // independent forget-gate parameters
  bool output_gate = true;
  Activation input_activation = Activation::Tanh;
  Activation output_activation = Activation::Tanh;
  bool peepholes = true;
  bool couple_input_forget = false;  // f = 1 - i; forget gate has no own parameters
  bool full_gate_recurrence = false;

  void validate() const;

  static VariantSpec preset(std::string_view name);
  static const std::vector<std::string>& preset_names();

  // Presence of parameter blocks implied by the flags.
  bool has_input_gate_params() const { return input_gate; }
  bool has_forget_gate_params() const { return forget_gate && !couple_input_forget; }
  bool has_output_gate_params() const { return output_gate; }
  bool has_p_i() const { return peepholes && has_input_gate_params(); }
  bool has_p_f() const { return peepholes && has_forget_gate_params(); }
  bool has_p_o() const { return peepholes && has_output_gate_params(); }
  bool has_fgr(bool src_gate, bool dst_gate) const {
    return full_gate_recurrence && src_gate && dst_gate;
  }
};

/// All parameter blocks of one LSTM layer. Blocks for disabled features
/// have zero size; num_params() matches presence exactly.
///
/// Also used as the gradient mirror (identical block presence).
struct LstmWeights {
  int n_blocks = 0;  // N
  int n_inputs = 0;  // M
  VariantSpec spec;

  Matrix W_z, R_z;
  Vector b_z;
  Matrix W_i, R_i;
  Vector p_i, b_i;
  Matrix W_f, R_f;
  Vector p_f, b_f;
  Matrix W_o, R_o;
  Vector p_o, b_o;

  // Full gate recurrence: R_ab maps gate a's activation at t-1 into
  // gate b's pre-activation at t.
  Matrix R_ii, R_fi, R_oi;
  Matrix R_if, R_ff, R_of;
  Matrix R_io, R_fo, R_oo;
};

using LstmGradients = LstmWeights;

/// Allocates the present blocks (zero-filled) for a spec and sizes.
LstmWeights make_weights(const VariantSpec& spec, int n_blocks, int n_inputs);

/// Every present weight ~ Normal(0, 0.1^2).
LstmWeights init_weights(const VariantSpec& spec, int n_blocks, int n_inputs, Rng& rng,
                         double init_std = 0.1);

long num_params(const VariantSpec& spec, int n_blocks, int n_inputs);

/// Named view over the present parameter blocks, in a fixed order.
struct NamedBlock {
  std::string name;
  std::span<double> values;
  int rows = 0;  // 0 for vectors
  int cols = 0;
};
std::vector<NamedBlock> named_blocks(LstmWeights& w);

/// Per-timestep activations needed by BPTT: pre- and post-nonlinearity
/// values of the block input, all gates, the cell state and the output.
/// Removed gates are cached as constant 1 (their pre-activations stay empty).
struct ForwardCache {
  std::vector<Vector> x;
  std::vector<Vector> zbar, z;
  std::vector<Vector> ibar, i;
  std::vector<Vector> fbar, f;
  std::vector<Vector> c;
  std::vector<Vector> obar, o;
  std::vector<Vector> y;
  bool diverged = false;

  size_t steps() const { return y.size(); }
};

struct ForwardResult {
  std::vector<Vector> outputs;
  ForwardCache cache;
  bool diverged = false;
};

/// Runs the layer over a whole sequence from zero initial state.
/// Overflowing cell states (|c| > 1e100 or non-finite) set the diverged
/// flag and stop the pass; this is a trial-level signal, not an error.
ForwardResult forward_sequence(const LstmWeights& w, std::span<const Vector> inputs);

struct BackwardResult {
  LstmGradients grads;
  std::vector<Vector> input_deltas;
};

/// Exact full-BPTT backward pass. top_deltas[t] is dE/dy^t excluding
/// recurrent dependencies. The cache must come from forward_sequence on
/// the same weights.
BackwardResult backward_sequence(const LstmWeights& w, const ForwardCache& cache,
                                 std::span<const Vector> top_deltas);

}  // namespace rnnlab

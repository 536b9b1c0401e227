#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rnnlab/network.hpp"

namespace rnnlab {

/// Symmetric, scale-free relative error |a-b| / max(1e-10, |a|+|b|).
double relative_error(double a, double b);

/// Central finite differences of a scalar function of a parameter vector.
/// A non-finite loss during perturbation yields NaN at that coordinate.
std::vector<double> finite_diff(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double eps = 1e-6);

struct GradCheckSizes {
  int n_blocks = 4;
  int n_inputs = 3;
  int n_outputs = 2;
  int seq_len = 5;
  int n_sequences = 3;
  double init_std = 0.4;  // large enough that no gate sits in a dead zone
};

struct GradCheckReport {
  std::string variant;
  TaskKind task = TaskKind::FramewiseClassification;
  double eps = 0.0;
  double tolerance = 0.0;
  double max_relative_error = 0.0;
  bool pass = false;
  struct BlockError {
    std::string block;
    double max_relative_error;
  };
  std::vector<BlockError> blocks;
};

/// Builds a random tiny network for the named variant preset and checks
/// BPTT against finite differences of the real task loss on a random
/// mini-dataset. Also covers the input deltas.
GradCheckReport check_variant(const std::string& preset, TaskKind task,
                              const GradCheckSizes& sizes, uint64_t seed,
                              double tolerance = 1e-5, double eps = 1e-6);

}  // namespace rnnlab

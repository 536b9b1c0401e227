#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "rnnlab/network.hpp"
#include "rnnlab/search.hpp"

namespace rnnlab {

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;  // two-sided
};

/// Unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
/// Needs at least 2 values per sample. Two zero-variance samples give
/// p = 1 when the means are equal and p = 0 otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation, absolute accuracy ~1e-12.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with dof degrees of freedom.
double student_t_cdf(double t, double dof);

/// adjusted_i = min(1, p_i * m); requires m >= number of p-values.
std::vector<double> bonferroni_adjust(const std::vector<double>& p_values, int m);

struct Quartiles {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear interpolation between closest ranks (quantile position q*(n-1)).
Quartiles quartiles(std::vector<double> values);

struct VariantSummary {
  std::string variant;
  bool present = false;
  int n_top = 0;
  double mean = 0.0;
  Quartiles box;
  double mean_params = 0.0;
  double p_value = 1.0;       // Welch vs baseline, two-sided
  double adjusted_p = 1.0;    // Bonferroni over the non-baseline variants
  bool significant = false;   // adjusted_p < 0.05
  bool is_baseline = false;
};

struct ComparisonTable {
  std::string baseline;
  double top_fraction = 0.10;
  std::vector<VariantSummary> rows;
};

/// Applies select_top_fraction per variant, summarizes the top test metrics
/// and Welch-tests every non-baseline variant against the baseline with
/// Bonferroni correction (m = number of non-baseline variants present).
/// Dataset dimensions are needed to report mean parameter counts.
ComparisonTable compare_variants(
    const std::map<std::string, std::vector<TrialRecord>>& logs_by_variant,
    const std::string& baseline, double top_fraction, TaskKind task, int n_inputs,
    int n_outputs);

}  // namespace rnnlab

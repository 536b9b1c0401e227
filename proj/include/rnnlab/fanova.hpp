#pragma once

#include <span>
#include <string>
#include <vector>

#include "rnnlab/numerics.hpp"
#include "rnnlab/search.hpp"

namespace rnnlab {

/// Axis-aligned box over the (transformed) hyperparameter space.
struct Box {
  Vector lo, hi;

  int dims() const { return static_cast<int>(lo.size()); }
  double length(int d) const { return hi[static_cast<size_t>(d)] - lo[static_cast<size_t>(d)]; }
  double volume() const;
  void validate() const;
};

/// CART regression tree with axis-aligned splits. Leaves carry their
/// sub-box so that marginals and variance components can be integrated
/// exactly over the partition.
struct RegressionTree {
  struct Node {
    int dim = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;  // leaf mean
  };
  struct Leaf {
    Box box;
    double value = 0.0;
  };

  std::vector<Node> nodes;  // nodes[0] is the root
  std::vector<Leaf> leaves;

  double predict(std::span<const double> x) const;
};

struct ForestConfig {
  int n_trees = 100;
  int min_leaf = 3;
  bool bootstrap = true;
  uint64_t seed = 0;
};

struct Forest {
  Box box;
  std::vector<RegressionTree> trees;
  ForestConfig config;
  std::vector<std::string> axis_names;  // optional labels for reports

  double predict(std::span<const double> x) const;  // mean over trees
};

/// Fits a bootstrap forest with greedy squared-error splits (candidate
/// thresholds at midpoints of sorted unique values, all features considered
/// at every split).
Forest fit_forest(const std::vector<Vector>& points, const Vector& responses,
                  const Box& box, const ForestConfig& config);

/// Exact per-tree grand means (integral of the tree over the box / volume).
std::vector<double> grand_means(const Forest& forest);

/// Exact per-tree integral of the marginal over its own dimension,
/// normalized by the dimension length. Equals the grand mean per tree.
std::vector<double> marginal_integrals(const Forest& forest, int dim);

struct MarginalCurve {
  std::vector<int> dims;
  std::vector<Vector> grid;  // one point per entry, |dims| coordinates each
  Vector mean;               // across trees
  Vector std;                // population std across trees
};

/// Marginal prediction over the dims subset: for each tree and grid point,
/// the sum over compatible leaves of value x (volume fraction over the
/// marginalized dimensions); exact for piecewise-constant trees.
MarginalCurve marginal(const Forest& forest, const std::vector<int>& dims,
                       const std::vector<Vector>& grid);

struct VarianceDecomposition {
  double total_variance = 0.0;        // mean across trees
  Vector single_fractions;            // per dimension
  Matrix pair_fractions;              // symmetric, diagonal zero
  double higher_order = 0.0;          // 1 - sum(singles) - sum(pairs)
  bool zero_variance = false;
};

/// Hooker-style additive decomposition with exact integrals over each
/// tree's partition; fractions averaged across trees.
VarianceDecomposition decompose_variance(const Forest& forest);

struct InteractionMap {
  int dim_i = 0, dim_j = 0;
  std::vector<double> grid_i, grid_j;
  Matrix residual;  // grid_i.size() x grid_j.size(), mean across trees
};

/// The pure pairwise component f_ij = m_ij - m_i - m_j + grand_mean,
/// evaluated on the given grid and averaged across trees.
InteractionMap interaction_component(const Forest& forest, int dim_i, int dim_j,
                                     const std::vector<double>& grid_i,
                                     const std::vector<double>& grid_j);

/// Exact integral of the pairwise residual over the box, averaged across
/// trees; zero up to rounding by construction.
double interaction_residual_integral(const Forest& forest, int dim_i, int dim_j);

/// Trial-log adapter: 4 transformed axes (log n_blocks, log10 learning
/// rate, log(1 - momentum), raw noise std) over the sampling-space box,
/// responses = test metrics. Diverged trials enter with their worst-case
/// metric unless drop_diverged is set.
struct FanovaInput {
  std::vector<Vector> points;
  Vector responses;
  Box box;
  std::vector<std::string> axis_names;
};
FanovaInput fanova_from_trials(const std::vector<TrialRecord>& trials,
                               const HyperRanges& ranges, bool drop_diverged = false);

}  // namespace rnnlab

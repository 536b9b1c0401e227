#include "rnnlab/fanova.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rnnlab {

double Box::volume() const {
  double v = 1.0;
  for (int d = 0; d < dims(); ++d) v *= length(d);
  return v;
}

void Box::validate() const {
  if (lo.size() != hi.size() || lo.empty())
    throw std::invalid_argument("Box: lo/hi size mismatch or empty");
  for (size_t d = 0; d < lo.size(); ++d)
    if (!(hi[d] > lo[d])) throw std::invalid_argument("Box: hi must exceed lo");
}

double RegressionTree::predict(std::span<const double> x) const {
  int k = 0;
  while (nodes[static_cast<size_t>(k)].dim >= 0) {
    const Node& n = nodes[static_cast<size_t>(k)];
    k = x[static_cast<size_t>(n.dim)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<size_t>(k)].value;
}

double Forest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const RegressionTree& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<Vector>& points, const Vector& responses, int min_leaf)
      : points_(points), responses_(responses), min_leaf_(min_leaf) {}

  RegressionTree fit(std::vector<int> idx, const Box& box) {
    tree_ = RegressionTree{};
    build(std::move(idx), box);
    return std::move(tree_);
  }

 private:
  int make_leaf(double mean, const Box& box) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({-1, 0.0, -1, -1, mean});
    tree_.leaves.push_back({box, mean});
    return id;
  }

  int build(std::vector<int> idx, const Box& box) {
    const int n = static_cast<int>(idx.size());
    double sy = 0.0, syy = 0.0;
    for (int i : idx) {
      sy += responses_[static_cast<size_t>(i)];
      syy += responses_[static_cast<size_t>(i)] * responses_[static_cast<size_t>(i)];
    }
    const double mean = sy / n;
    const double sse = syy - sy * sy / n;
    if (n < 2 * min_leaf_ || sse <= 1e-24) return make_leaf(mean, box);

    int best_dim = -1, best_k = -1;
    double best_cost = sse, best_threshold = 0.0;
    std::vector<int> sorted(idx);
    std::vector<int> best_sorted;
    for (int d = 0; d < box.dims(); ++d) {
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        return points_[static_cast<size_t>(a)][static_cast<size_t>(d)] <
               points_[static_cast<size_t>(b)][static_cast<size_t>(d)];
      });
      double ly = 0.0, lyy = 0.0;
      for (int k = 1; k < n; ++k) {
        const double yv = responses_[static_cast<size_t>(sorted[static_cast<size_t>(k - 1)])];
        ly += yv;
        lyy += yv * yv;
        const double xa = points_[static_cast<size_t>(sorted[static_cast<size_t>(k - 1)])]
                                 [static_cast<size_t>(d)];
        const double xb =
            points_[static_cast<size_t>(sorted[static_cast<size_t>(k)])][static_cast<size_t>(d)];
        if (xa == xb) continue;  // threshold must separate distinct values
        if (k < min_leaf_ || n - k < min_leaf_) continue;
        const double ry = sy - ly, ryy = syy - lyy;
        const double cost = (lyy - ly * ly / k) + (ryy - ry * ry / (n - k));
        if (cost < best_cost - 1e-15) {
          best_cost = cost;
          best_dim = d;
          best_k = k;
          best_threshold = 0.5 * (xa + xb);  // midpoint between neighbors
          best_sorted = sorted;
        }
      }
    }
    if (best_dim < 0) return make_leaf(mean, box);

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({best_dim, best_threshold, -1, -1, 0.0});
    Box left_box = box, right_box = box;
    left_box.hi[static_cast<size_t>(best_dim)] = best_threshold;
    right_box.lo[static_cast<size_t>(best_dim)] = best_threshold;
    std::vector<int> left_idx(best_sorted.begin(), best_sorted.begin() + best_k);
    std::vector<int> right_idx(best_sorted.begin() + best_k, best_sorted.end());
    const int left = build(std::move(left_idx), left_box);
    const int right = build(std::move(right_idx), right_box);
    tree_.nodes[static_cast<size_t>(id)].left = left;
    tree_.nodes[static_cast<size_t>(id)].right = right;
    return id;
  }

  const std::vector<Vector>& points_;
  const Vector& responses_;
  int min_leaf_;
  RegressionTree tree_;
};

}  // namespace

Forest fit_forest(const std::vector<Vector>& points, const Vector& responses,
                  const Box& box, const ForestConfig& config) {
  box.validate();
  if (points.size() != responses.size())
    throw std::invalid_argument("fit_forest: points/responses size mismatch");
  if (points.size() < 2) throw std::invalid_argument("fit_forest: need at least 2 samples");
  for (const Vector& p : points)
    if (static_cast<int>(p.size()) != box.dims())
      throw std::invalid_argument("fit_forest: point dimension mismatch");
  if (config.n_trees < 1 || config.min_leaf < 1)
    throw std::invalid_argument("fit_forest: bad config");

  Forest forest;
  forest.box = box;
  forest.config = config;
  Rng root(config.seed);
  TreeBuilder builder(points, responses, config.min_leaf);
  const int n = static_cast<int>(points.size());
  for (int t = 0; t < config.n_trees; ++t) {
    std::vector<int> idx(static_cast<size_t>(n));
    if (config.bootstrap) {
      Rng rng = root.derived(static_cast<uint64_t>(t));
      for (int& i : idx) i = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    forest.trees.push_back(builder.fit(std::move(idx), box));
  }
  return forest;
}

namespace {

// Fraction of the box covered by the leaf in every dimension except those
// listed in `keep`.
double volfrac_excluding(const RegressionTree::Leaf& leaf, const Box& box,
                         std::span<const int> keep) {
  double frac = 1.0;
  for (int d = 0; d < box.dims(); ++d) {
    if (std::find(keep.begin(), keep.end(), d) != keep.end()) continue;
    frac *= leaf.box.length(d) / box.length(d);
  }
  return frac;
}

double tree_grand_mean(const RegressionTree& tree, const Box& box) {
  double sum = 0.0;
  for (const auto& leaf : tree.leaves) sum += leaf.value * volfrac_excluding(leaf, box, {});
  return sum;
}

// Sorted unique segment edges of the tree's partition along one dimension.
std::vector<double> segment_edges(const RegressionTree& tree, const Box& box, int dim) {
  std::vector<double> edges = {box.lo[static_cast<size_t>(dim)],
                               box.hi[static_cast<size_t>(dim)]};
  for (const auto& leaf : tree.leaves) {
    edges.push_back(leaf.box.lo[static_cast<size_t>(dim)]);
    edges.push_back(leaf.box.hi[static_cast<size_t>(dim)]);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

size_t edge_index(const std::vector<double>& edges, double v) {
  return static_cast<size_t>(std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
}

// Exact one-dimensional marginal per segment via a difference array.
Vector marginal_per_segment(const RegressionTree& tree, const Box& box, int dim,
                            const std::vector<double>& edges) {
  std::vector<double> diff(edges.size(), 0.0);
  const int keep[] = {dim};
  for (const auto& leaf : tree.leaves) {
    const double w = leaf.value * volfrac_excluding(leaf, box, keep);
    diff[edge_index(edges, leaf.box.lo[static_cast<size_t>(dim)])] += w;
    diff[edge_index(edges, leaf.box.hi[static_cast<size_t>(dim)])] -= w;
  }
  Vector m(edges.size() - 1, 0.0);
  double run = 0.0;
  for (size_t s = 0; s + 1 < edges.size(); ++s) {
    run += diff[s];
    m[s] = run;
  }
  return m;
}

// Exact two-dimensional marginal per cell via a 2-D difference array.
Matrix pair_per_cell(const RegressionTree& tree, const Box& box, int di, int dj,
                     const std::vector<double>& ei, const std::vector<double>& ej) {
  const int rows = static_cast<int>(ei.size());
  const int cols = static_cast<int>(ej.size());
  Matrix diff(rows, cols);
  const int keep[] = {di, dj};
  for (const auto& leaf : tree.leaves) {
    const double w = leaf.value * volfrac_excluding(leaf, box, keep);
    const int a = static_cast<int>(edge_index(ei, leaf.box.lo[static_cast<size_t>(di)]));
    const int b = static_cast<int>(edge_index(ei, leaf.box.hi[static_cast<size_t>(di)]));
    const int c = static_cast<int>(edge_index(ej, leaf.box.lo[static_cast<size_t>(dj)]));
    const int e = static_cast<int>(edge_index(ej, leaf.box.hi[static_cast<size_t>(dj)]));
    diff(a, c) += w;
    diff(a, e) -= w;
    diff(b, c) -= w;
    diff(b, e) += w;
  }
  Matrix m(rows - 1, cols - 1);
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c)
      m(r, c) = diff(r, c) + (r > 0 ? m(r - 1, c) : 0.0) + (c > 0 ? m(r, c - 1) : 0.0) -
                (r > 0 && c > 0 ? m(r - 1, c - 1) : 0.0);
  return m;
}

// Marginal prediction at a point of the kept dims: sum over leaves whose
// box contains the point in those dims. The top box edge is inclusive.
double marginal_at(const RegressionTree& tree, const Box& box, std::span<const int> dims,
                   std::span<const double> coords) {
  double sum = 0.0;
  for (const auto& leaf : tree.leaves) {
    bool inside = true;
    for (size_t k = 0; k < dims.size(); ++k) {
      const size_t d = static_cast<size_t>(dims[k]);
      const double x = coords[k];
      const bool top = leaf.box.hi[d] == box.hi[d];
      if (x < leaf.box.lo[d] || (top ? x > leaf.box.hi[d] : x >= leaf.box.hi[d])) {
        inside = false;
        break;
      }
    }
    if (inside) sum += leaf.value * volfrac_excluding(leaf, box, dims);
  }
  return sum;
}

}  // namespace

std::vector<double> grand_means(const Forest& forest) {
  std::vector<double> out;
  for (const RegressionTree& t : forest.trees) out.push_back(tree_grand_mean(t, forest.box));
  return out;
}

std::vector<double> marginal_integrals(const Forest& forest, int dim) {
  std::vector<double> out;
  for (const RegressionTree& tree : forest.trees) {
    const std::vector<double> edges = segment_edges(tree, forest.box, dim);
    const Vector m = marginal_per_segment(tree, forest.box, dim, edges);
    double integral = 0.0;
    for (size_t s = 0; s < m.size(); ++s)
      integral += m[s] * (edges[s + 1] - edges[s]) / forest.box.length(dim);
    out.push_back(integral);
  }
  return out;
}

MarginalCurve marginal(const Forest& forest, const std::vector<int>& dims,
                       const std::vector<Vector>& grid) {
  if (dims.empty()) throw std::invalid_argument("marginal: dims must be non-empty");
  for (int d : dims)
    if (d < 0 || d >= forest.box.dims()) throw std::invalid_argument("marginal: bad dim");
  for (const Vector& g : grid)
    if (g.size() != dims.size()) throw std::invalid_argument("marginal: grid width mismatch");

  MarginalCurve curve;
  curve.dims = dims;
  curve.grid = grid;
  curve.mean.assign(grid.size(), 0.0);
  curve.std.assign(grid.size(), 0.0);
  const double n_trees = static_cast<double>(forest.trees.size());
  std::vector<double> sq(grid.size(), 0.0);
  for (const RegressionTree& tree : forest.trees)
    for (size_t g = 0; g < grid.size(); ++g) {
      const double v = marginal_at(tree, forest.box, dims, grid[g]);
      curve.mean[g] += v;
      sq[g] += v * v;
    }
  for (size_t g = 0; g < grid.size(); ++g) {
    curve.mean[g] /= n_trees;
    const double var = std::max(0.0, sq[g] / n_trees - curve.mean[g] * curve.mean[g]);
    curve.std[g] = std::sqrt(var);
  }
  return curve;
}

VarianceDecomposition decompose_variance(const Forest& forest) {
  const int D = forest.box.dims();
  VarianceDecomposition out;
  out.single_fractions.assign(static_cast<size_t>(D), 0.0);
  out.pair_fractions = Matrix(D, D);

  int usable = 0;
  double total_acc = 0.0;
  for (const RegressionTree& tree : forest.trees) {
    const double f0 = tree_grand_mean(tree, forest.box);
    double vtot = -f0 * f0;
    for (const auto& leaf : tree.leaves)
      vtot += leaf.value * leaf.value * volfrac_excluding(leaf, forest.box, {});
    total_acc += std::max(0.0, vtot);
    if (vtot < 1e-30) continue;
    ++usable;

    std::vector<std::vector<double>> edges(static_cast<size_t>(D));
    std::vector<Vector> marg(static_cast<size_t>(D));
    for (int d = 0; d < D; ++d) {
      edges[static_cast<size_t>(d)] = segment_edges(tree, forest.box, d);
      marg[static_cast<size_t>(d)] =
          marginal_per_segment(tree, forest.box, d, edges[static_cast<size_t>(d)]);
      double v = 0.0;
      for (size_t s = 0; s < marg[static_cast<size_t>(d)].size(); ++s) {
        const double m = marg[static_cast<size_t>(d)][s] - f0;
        v += m * m * (edges[static_cast<size_t>(d)][s + 1] - edges[static_cast<size_t>(d)][s]) /
             forest.box.length(d);
      }
      out.single_fractions[static_cast<size_t>(d)] += v / vtot;
    }
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j) {
        const auto& ei = edges[static_cast<size_t>(i)];
        const auto& ej = edges[static_cast<size_t>(j)];
        const Matrix mij = pair_per_cell(tree, forest.box, i, j, ei, ej);
        double v = 0.0;
        for (int r = 0; r < mij.rows; ++r)
          for (int c = 0; c < mij.cols; ++c) {
            const double f = mij(r, c) - marg[static_cast<size_t>(i)][static_cast<size_t>(r)] -
                             marg[static_cast<size_t>(j)][static_cast<size_t>(c)] + f0;
            v += f * f * (ei[static_cast<size_t>(r) + 1] - ei[static_cast<size_t>(r)]) *
                 (ej[static_cast<size_t>(c) + 1] - ej[static_cast<size_t>(c)]) /
                 (forest.box.length(i) * forest.box.length(j));
          }
        out.pair_fractions(i, j) += v / vtot;
      }
  }

  out.total_variance = total_acc / static_cast<double>(forest.trees.size());
  if (usable == 0) {
    out.zero_variance = true;
    out.higher_order = 0.0;
    return out;
  }
  double sum = 0.0;
  for (int d = 0; d < D; ++d) {
    out.single_fractions[static_cast<size_t>(d)] /= usable;
    sum += out.single_fractions[static_cast<size_t>(d)];
  }
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) {
      out.pair_fractions(i, j) /= usable;
      out.pair_fractions(j, i) = out.pair_fractions(i, j);
      sum += out.pair_fractions(i, j);
    }
  out.higher_order = 1.0 - sum;
  return out;
}

InteractionMap interaction_component(const Forest& forest, int dim_i, int dim_j,
                                     const std::vector<double>& grid_i,
                                     const std::vector<double>& grid_j) {
  if (dim_i == dim_j) throw std::invalid_argument("interaction_component: distinct dims");
  InteractionMap map;
  map.dim_i = dim_i;
  map.dim_j = dim_j;
  map.grid_i = grid_i;
  map.grid_j = grid_j;
  map.residual = Matrix(static_cast<int>(grid_i.size()), static_cast<int>(grid_j.size()));
  const int pair_dims[] = {dim_i, dim_j};
  const int di[] = {dim_i};
  const int dj[] = {dim_j};
  for (const RegressionTree& tree : forest.trees) {
    const double f0 = tree_grand_mean(tree, forest.box);
    for (size_t a = 0; a < grid_i.size(); ++a) {
      const double mi = marginal_at(tree, forest.box, di, {&grid_i[a], 1});
      for (size_t b = 0; b < grid_j.size(); ++b) {
        const double mj = marginal_at(tree, forest.box, dj, {&grid_j[b], 1});
        const double coords[] = {grid_i[a], grid_j[b]};
        const double mij = marginal_at(tree, forest.box, pair_dims, coords);
        map.residual(static_cast<int>(a), static_cast<int>(b)) += mij - mi - mj + f0;
      }
    }
  }
  for (double& v : map.residual.data) v /= static_cast<double>(forest.trees.size());
  return map;
}

double interaction_residual_integral(const Forest& forest, int dim_i, int dim_j) {
  double acc = 0.0;
  for (const RegressionTree& tree : forest.trees) {
    const double f0 = tree_grand_mean(tree, forest.box);
    const std::vector<double> ei = segment_edges(tree, forest.box, dim_i);
    const std::vector<double> ej = segment_edges(tree, forest.box, dim_j);
    const Vector mi = marginal_per_segment(tree, forest.box, dim_i, ei);
    const Vector mj = marginal_per_segment(tree, forest.box, dim_j, ej);
    const Matrix mij = pair_per_cell(tree, forest.box, dim_i, dim_j, ei, ej);
    double integral = 0.0;
    for (int r = 0; r < mij.rows; ++r)
      for (int c = 0; c < mij.cols; ++c)
        integral += (mij(r, c) - mi[static_cast<size_t>(r)] - mj[static_cast<size_t>(c)] + f0) *
                    (ei[static_cast<size_t>(r) + 1] - ei[static_cast<size_t>(r)]) *
                    (ej[static_cast<size_t>(c) + 1] - ej[static_cast<size_t>(c)]) /
                    (forest.box.length(dim_i) * forest.box.length(dim_j));
    acc += integral;
  }
  return acc / static_cast<double>(forest.trees.size());
}

FanovaInput fanova_from_trials(const std::vector<TrialRecord>& trials,
                               const HyperRanges& ranges, bool drop_diverged) {
  FanovaInput input;
  input.axis_names = {"n_blocks", "learning_rate", "momentum", "input_noise_std"};
  input.box.lo = {std::log(static_cast<double>(ranges.n_blocks_min)),
                  std::log10(ranges.learning_rate_min), std::log(ranges.momentum_u_min),
                  ranges.noise_min};
  input.box.hi = {std::log(static_cast<double>(ranges.n_blocks_max)),
                  std::log10(ranges.learning_rate_max), std::log(ranges.momentum_u_max),
                  ranges.noise_max};
  for (const TrialRecord& r : trials) {
    if (drop_diverged && r.diverged) continue;
    Vector x = {std::log(static_cast<double>(r.hyper.n_blocks)),
                std::log10(r.hyper.learning_rate), std::log(1.0 - r.hyper.momentum),
                r.hyper.input_noise_std};
    for (size_t d = 0; d < x.size(); ++d) x[d] = std::clamp(x[d], input.box.lo[d], input.box.hi[d]);
    input.points.push_back(std::move(x));
    input.responses.push_back(r.test_metric);
  }
  return input;
}

}  // namespace rnnlab

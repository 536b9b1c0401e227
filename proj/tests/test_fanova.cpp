#include "doctest.h"
#include "rnnlab/fanova.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace rnnlab;

namespace {

Box unit_box(int dims) {
  Box box;
  box.lo.assign(static_cast<size_t>(dims), 0.0);
  box.hi.assign(static_cast<size_t>(dims), 1.0);
  return box;
}

std::vector<Vector> uniform_points(Rng& rng, int n, int dims) {
  std::vector<Vector> pts;
  for (int k = 0; k < n; ++k) {
    Vector x;
    for (int d = 0; d < dims; ++d) x.push_back(rng.uniform());
    pts.push_back(std::move(x));
  }
  return pts;
}

std::vector<Vector> grid_1d(int n) {
  std::vector<Vector> g;
  for (int k = 0; k < n; ++k) g.push_back({(k + 0.5) / n});
  return g;
}

}  // namespace

TEST_CASE("constant responses give zero variance and a flat marginal") {
  Rng rng(101);
  const auto pts = uniform_points(rng, 200, 2);
  const Vector y(200, 3.5);
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 20, .seed = 1});
  const VarianceDecomposition vd = decompose_variance(forest);
  CHECK(vd.zero_variance);
  CHECK(vd.total_variance == doctest::Approx(0.0).epsilon(1e-18));
  const MarginalCurve c = marginal(forest, {0}, grid_1d(7));
  for (double m : c.mean) CHECK(m == doctest::Approx(3.5).epsilon(1e-12));
  for (double s : c.std) CHECK(s == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a step function is recovered with small error") {
  Rng rng(103);
  const auto pts = uniform_points(rng, 1000, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(p[0] > 0.5 ? 1.0 : 0.0);
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 100, .seed = 2});
  double sq = 0.0;
  const int n = 400;
  Rng probe(104);
  for (int k = 0; k < n; ++k) {
    const Vector x = {probe.uniform(), probe.uniform()};
    const double truth = x[0] > 0.5 ? 1.0 : 0.0;
    const double d = forest.predict(x) - truth;
    sq += d * d;
  }
  CHECK(std::sqrt(sq / n) < 0.05);
}

TEST_CASE("single unpruned tree reproduces its training points exactly") {
  Rng rng(105);
  const auto pts = uniform_points(rng, 60, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(std::sin(5.0 * p[0]) + p[1] * p[1]);
  Forest forest =
      fit_forest(pts, y, unit_box(2), {.n_trees = 1, .min_leaf = 1, .bootstrap = false});
  for (size_t k = 0; k < pts.size(); ++k)
    CHECK(forest.predict(pts[k]) == doctest::Approx(y[k]).epsilon(1e-12));
}

TEST_CASE("marginal over a flat direction matches hand arithmetic") {
  // y depends only on x2: 1 below 0.5, 3 above. Marginalizing over x2,
  // every x1 slice averages to 0.5*1 + 0.5*3 = 2.
  Rng rng(107);
  const auto pts = uniform_points(rng, 800, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(p[1] < 0.5 ? 1.0 : 3.0);
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 50, .seed = 3});
  const MarginalCurve c = marginal(forest, {0}, grid_1d(9));
  for (double m : c.mean) CHECK(m == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("per-tree marginal integrals equal the grand mean") {
  Rng rng(109);
  const auto pts = uniform_points(rng, 300, 3);
  Vector y;
  for (const Vector& p : pts) y.push_back(p[0] + 2.0 * p[1] * p[2]);
  Forest forest = fit_forest(pts, y, unit_box(3), {.n_trees = 10, .seed = 4});
  const std::vector<double> means = grand_means(forest);
  for (int d = 0; d < 3; ++d) {
    const std::vector<double> integrals = marginal_integrals(forest, d);
    REQUIRE(integrals.size() == means.size());
    for (size_t t = 0; t < means.size(); ++t)
      CHECK(integrals[t] == doctest::Approx(means[t]).epsilon(1e-9));
  }
}

TEST_CASE("a pure main effect captures nearly all the variance") {
  Rng rng(111);
  const auto pts = uniform_points(rng, 1000, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(p[0]);
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 100, .seed = 5});
  const VarianceDecomposition vd = decompose_variance(forest);
  CHECK(vd.single_fractions[0] > 0.95);
  CHECK(vd.single_fractions[1] < 0.02);
  CHECK(vd.pair_fractions(0, 1) < 0.03);
  CHECK(vd.total_variance == doctest::Approx(1.0 / 12.0).epsilon(0.15));
}

TEST_CASE("a pure interaction lands in the pair term") {
  Rng rng(113);
  const auto pts = uniform_points(rng, 1500, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back((p[0] - 0.5) * (p[1] - 0.5));
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 100, .seed = 6});
  const VarianceDecomposition vd = decompose_variance(forest);
  CHECK(vd.pair_fractions(0, 1) > 0.9);
  CHECK(vd.single_fractions[0] < 0.05);
  CHECK(vd.single_fractions[1] < 0.05);

  // The estimated residual surface should track the true product shape.
  std::vector<double> g;
  for (int k = 0; k < 8; ++k) g.push_back((k + 0.5) / 8);
  const InteractionMap map = interaction_component(forest, 0, 1, g, g);
  double se = 0.0, st = 0.0, stt = 0.0, see = 0.0, set = 0.0;
  int n = 0;
  for (size_t a = 0; a < g.size(); ++a)
    for (size_t b = 0; b < g.size(); ++b) {
      const double truth = (g[a] - 0.5) * (g[b] - 0.5);
      const double est = map.residual(static_cast<int>(a), static_cast<int>(b));
      se += est;
      st += truth;
      stt += truth * truth;
      see += est * est;
      set += est * truth;
      ++n;
    }
  const double cov = set / n - (se / n) * (st / n);
  const double corr = cov / std::sqrt((see / n - (se / n) * (se / n)) *
                                      (stt / n - (st / n) * (st / n)));
  CHECK(corr > 0.95);
}

TEST_CASE("an additive function leaves a near-zero interaction residual") {
  Rng rng(115);
  const auto pts = uniform_points(rng, 3000, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(2.0 * p[0] + std::sin(3.0 * p[1]));
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 100, .seed = 7});
  std::vector<double> g;
  for (int k = 0; k < 6; ++k) g.push_back((k + 0.5) / 6);
  const InteractionMap map = interaction_component(forest, 0, 1, g, g);
  double sq = 0.0;
  for (double v : map.residual.data) {
    CHECK(std::abs(v) < 0.05);
    sq += v * v;
  }
  CHECK(std::sqrt(sq / static_cast<double>(map.residual.data.size())) < 0.02);
}

TEST_CASE("singles plus the pair explain everything in two dimensions") {
  // With two inputs the Hooker expansion terminates at the pair term, so the
  // fractions must sum to one tree by tree, hence also on average.
  Rng rng(117);
  const auto pts = uniform_points(rng, 600, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(std::exp(p[0]) * (1.0 + 0.5 * p[1]) + p[1]);
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 30, .seed = 8});
  const VarianceDecomposition vd = decompose_variance(forest);
  const double sum = vd.single_fractions[0] + vd.single_fractions[1] + vd.pair_fractions(0, 1);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(vd.higher_order) < 1e-6);
}

TEST_CASE("fraction bookkeeping is consistent in four dimensions") {
  Rng rng(119);
  const auto pts = uniform_points(rng, 500, 4);
  Vector y;
  for (const Vector& p : pts) y.push_back(p[0] * p[1] + p[2] + 0.3 * p[3] * p[0] * p[2]);
  Forest forest = fit_forest(pts, y, unit_box(4), {.n_trees = 20, .seed = 9});
  const VarianceDecomposition vd = decompose_variance(forest);
  double sum = 0.0;
  for (double f : vd.single_fractions) {
    CHECK(f >= 0.0);
    sum += f;
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      CHECK(vd.pair_fractions(i, j) >= 0.0);
      CHECK(vd.pair_fractions(i, j) == vd.pair_fractions(j, i));
      sum += vd.pair_fractions(i, j);
    }
  CHECK(sum <= 1.0 + 1e-6);
  CHECK(vd.higher_order >= -1e-6);
}

TEST_CASE("marginal spread vanishes for a single deterministic tree") {
  Rng rng(121);
  const auto pts = uniform_points(rng, 200, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(p[0] - p[1]);
  Forest forest = fit_forest(pts, y, unit_box(2), {.n_trees = 1, .bootstrap = false});
  const MarginalCurve c = marginal(forest, {0}, grid_1d(11));
  for (double s : c.std) CHECK(s == 0.0);
}

TEST_CASE("the pairwise residual integrates to zero by construction") {
  Rng rng(123);
  const auto pts = uniform_points(rng, 700, 3);
  Vector y;
  for (const Vector& p : pts) y.push_back(std::cos(4.0 * p[0]) * p[1] + p[2]);
  Forest forest = fit_forest(pts, y, unit_box(3), {.n_trees = 15, .seed = 10});
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      CHECK(std::abs(interaction_residual_integral(forest, i, j)) < 1e-6);
}

TEST_CASE("trial logs map onto the transformed axes") {
  HyperRanges ranges;
  std::vector<TrialRecord> trials;
  Rng rng(125);
  for (int k = 0; k < 80; ++k) {
    TrialRecord r;
    r.trial_index = k;
    r.hyper = sample_hyperparameters(rng);
    // Response driven by the learning rate alone.
    r.test_metric = std::pow(std::log10(r.hyper.learning_rate) + 4.0, 2.0);
    r.val_metric = r.test_metric;
    r.diverged = k % 17 == 0;
    trials.push_back(r);
  }

  const FanovaInput all = fanova_from_trials(trials, ranges, false);
  CHECK(all.points.size() == trials.size());
  CHECK(all.axis_names.size() == 4);
  CHECK(all.box.lo[0] == doctest::Approx(std::log(20.0)));
  CHECK(all.box.hi[0] == doctest::Approx(std::log(200.0)));
  CHECK(all.box.lo[1] == doctest::Approx(-6.0));
  CHECK(all.box.hi[1] == doctest::Approx(-2.0));
  CHECK(all.box.lo[2] == doctest::Approx(std::log(0.01)));
  CHECK(all.box.hi[2] == doctest::Approx(0.0));
  for (size_t k = 0; k < all.points.size(); ++k)
    for (int d = 0; d < 4; ++d) {
      CHECK(all.points[k][static_cast<size_t>(d)] >= all.box.lo[static_cast<size_t>(d)]);
      CHECK(all.points[k][static_cast<size_t>(d)] <= all.box.hi[static_cast<size_t>(d)]);
    }

  const FanovaInput kept = fanova_from_trials(trials, ranges, true);
  size_t n_diverged = 0;
  for (const TrialRecord& r : trials) n_diverged += r.diverged ? 1 : 0;
  CHECK(kept.points.size() == trials.size() - n_diverged);

  Forest forest = fit_forest(all.points, all.responses, all.box, {.n_trees = 60, .seed = 11});
  const VarianceDecomposition vd = decompose_variance(forest);
  const size_t lr = 1;
  for (size_t d = 0; d < 4; ++d)
    if (d != lr) CHECK(vd.single_fractions[lr] > vd.single_fractions[d]);
  CHECK(vd.single_fractions[lr] > 0.5);
}

TEST_CASE("forests are deterministic in their seed") {
  Rng rng(127);
  const auto pts = uniform_points(rng, 150, 2);
  Vector y;
  for (const Vector& p : pts) y.push_back(p[0] * p[1]);
  Forest a = fit_forest(pts, y, unit_box(2), {.n_trees = 10, .seed = 42});
  Forest b = fit_forest(pts, y, unit_box(2), {.n_trees = 10, .seed = 42});
  Rng probe(128);
  for (int k = 0; k < 50; ++k) {
    const Vector x = {probe.uniform(), probe.uniform()};
    CHECK(a.predict(x) == b.predict(x));
  }
}

TEST_CASE("bad inputs are rejected") {
  Box box = unit_box(2);
  std::vector<Vector> pts = {{0.1, 0.2}, {0.3, 0.4}};
  Vector y = {1.0, 2.0};
  CHECK_THROWS_AS(fit_forest(pts, {1.0}, box, {}), std::invalid_argument);
  CHECK_THROWS_AS(fit_forest({{0.1, 0.2}}, {1.0}, box, {}), std::invalid_argument);
  CHECK_THROWS_AS(fit_forest({{0.1}, {0.2}}, y, box, {}), std::invalid_argument);
  Box bad;
  bad.lo = {0.0, 0.0};
  bad.hi = {1.0, 0.0};
  CHECK_THROWS_AS(fit_forest(pts, y, bad, {}), std::invalid_argument);
  Forest forest = fit_forest(pts, y, box, {.n_trees = 2, .min_leaf = 1});
  CHECK_THROWS_AS(marginal(forest, {}, grid_1d(3)), std::invalid_argument);
  CHECK_THROWS_AS(marginal(forest, {5}, grid_1d(3)), std::invalid_argument);
  CHECK_THROWS_AS(interaction_component(forest, 1, 1, {0.5}, {0.5}), std::invalid_argument);
}

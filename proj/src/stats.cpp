#include "rnnlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rnnlab {

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!std::isfinite(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("welch_t_test: need at least 2 values per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= na;
  mb /= nb;
  double va = 0.0, vb = 0.0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  va /= na - 1.0;  // sample variances
  vb /= nb - 1.0;

  WelchResult r;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    r.t = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    r.dof = na + nb - 2.0;
    r.p = ma == mb ? 1.0 : 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 /
          ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  r.p = 2.0 * (1.0 - student_t_cdf(std::abs(r.t), r.dof));
  r.p = std::clamp(r.p, 0.0, 1.0);
  return r;
}

std::vector<double> bonferroni_adjust(const std::vector<double>& p_values, int m) {
  if (m < static_cast<int>(p_values.size()))
    throw std::invalid_argument("bonferroni_adjust: m >= number of tests required");
  std::vector<double> adjusted;
  adjusted.reserve(p_values.size());
  for (double p : p_values) adjusted.push_back(std::min(1.0, p * m));
  return adjusted;
}

namespace {

double quantile_linear(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("quartiles: empty sample");
  std::sort(values.begin(), values.end());
  Quartiles q;
  q.min = values.front();
  q.max = values.back();
  q.q1 = quantile_linear(values, 0.25);
  q.median = quantile_linear(values, 0.50);
  q.q3 = quantile_linear(values, 0.75);
  return q;
}

ComparisonTable compare_variants(
    const std::map<std::string, std::vector<TrialRecord>>& logs_by_variant,
    const std::string& baseline, double top_fraction, TaskKind task, int n_inputs,
    int n_outputs) {
  const auto base_it = logs_by_variant.find(baseline);
  if (base_it == logs_by_variant.end() || base_it->second.empty())
    throw std::invalid_argument("compare_variants: baseline log missing or empty");

  auto top_metrics = [&](const std::vector<TrialRecord>& log,
                         std::vector<double>& metrics, double& mean_params) {
    std::vector<TrialRecord> top = select_top_fraction(log, top_fraction);
    metrics.clear();
    mean_params = 0.0;
    for (const TrialRecord& r : top) {
      metrics.push_back(r.test_metric);
      NetworkConfig net;
      net.task = task;
      net.bidirectional = task == TaskKind::FramewiseClassification;
      net.hidden_size = r.hyper.n_blocks;
      net.n_inputs = n_inputs;
      net.n_outputs = n_outputs;
      net.variant = VariantSpec::preset(r.variant);
      mean_params += static_cast<double>(network_num_params(net));
    }
    mean_params /= static_cast<double>(top.size());
  };

  std::vector<double> base_metrics;
  double base_params = 0.0;
  top_metrics(base_it->second, base_metrics, base_params);

  ComparisonTable table;
  table.baseline = baseline;
  table.top_fraction = top_fraction;

  int m = 0;  // non-baseline variants with data
  for (const auto& [variant, log] : logs_by_variant)
    if (variant != baseline && !log.empty()) ++m;

  for (const auto& [variant, log] : logs_by_variant) {
    VariantSummary row;
    row.variant = variant;
    row.is_baseline = variant == baseline;
    if (log.empty()) {
      table.rows.push_back(row);  // listed as absent
      continue;
    }
    row.present = true;
    std::vector<double> metrics;
    top_metrics(log, metrics, row.mean_params);
    row.n_top = static_cast<int>(metrics.size());
    for (double v : metrics) row.mean += v;
    row.mean /= static_cast<double>(metrics.size());
    row.box = quartiles(metrics);
    if (!row.is_baseline) {
      row.p_value = welch_t_test(metrics, base_metrics).p;
      row.adjusted_p = std::min(1.0, row.p_value * std::max(1, m));
      row.significant = row.adjusted_p < 0.05;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rnnlab

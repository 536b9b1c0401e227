#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rnnlab {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Dimensions are fixed at construction.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  bool empty() const { return data.empty(); }
  size_t size() const { return data.size(); }
};

// Pointwise nonlinearities. Derivatives are taken from the cached
// pre-activation, never by inverting the post-activation.
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logistic_prime_from_pre(double xbar) {
  const double s = logistic(xbar);
  return s * (1.0 - s);
}
inline double tanh_act(double x) { return std::tanh(x); }
inline double tanh_prime_from_pre(double xbar) {
  const double t = std::tanh(xbar);
  return 1.0 - t * t;
}
inline double identity_act(double x) { return x; }

Vector matvec(const Matrix& m, const Vector& v);
Vector matvec_transposed(const Matrix& m, const Vector& v);
// acc += outer(u, v); acc must be |u| x |v|.
void outer_accumulate(Matrix& acc, const Vector& u, const Vector& v);

// y += a * x
void axpy(double a, const Vector& x, Vector& y);

/// Seeded random number generator. Equal seeds give equal streams;
/// per-trial independent streams come from derive().
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t seed() const { return seed_; }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(gen_);
  }
  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(gen_);
  }
  uint64_t next_u64() { return gen_(); }
  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    return std::uniform_int_distribution<uint64_t>(0, n - 1)(gen_);
  }

  /// Deterministically derive an independent seed for a substream.
  uint64_t derive(uint64_t stream) const;
  Rng derived(uint64_t stream) const { return Rng(derive(stream)); }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace rnnlab

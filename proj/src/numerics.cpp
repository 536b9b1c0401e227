#include "rnnlab/numerics.hpp"

#include <stdexcept>

namespace rnnlab {

Vector matvec(const Matrix& m, const Vector& v) {
  if (static_cast<size_t>(m.cols) != v.size())
    throw std::invalid_argument("matvec: dimension mismatch");
  Vector out(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
    double acc = 0.0;
    for (int j = 0; j < m.cols; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  if (static_cast<size_t>(m.rows) != v.size())
    throw std::invalid_argument("matvec_transposed: dimension mismatch");
  Vector out(m.cols, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
    const double vi = v[i];
    for (int j = 0; j < m.cols; ++j) out[j] += row[j] * vi;
  }
  return out;
}

void outer_accumulate(Matrix& acc, const Vector& u, const Vector& v) {
  if (static_cast<size_t>(acc.rows) != u.size() ||
      static_cast<size_t>(acc.cols) != v.size())
    throw std::invalid_argument("outer_accumulate: dimension mismatch");
  for (size_t i = 0; i < u.size(); ++i) {
    double* row = acc.data.data() + i * v.size();
    const double ui = u[i];
    for (size_t j = 0; j < v.size(); ++j) row[j] += ui * v[j];
  }
}

void axpy(double a, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

uint64_t Rng::derive(uint64_t stream) const {
  // splitmix64 finalizer over (seed, stream)
  uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rnnlab

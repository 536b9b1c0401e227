#include "doctest.h"
#include "rnnlab/numerics.hpp"

#include <stdexcept>

#include <cmath>

using namespace rnnlab;

TEST_CASE("logistic basics") {
  CHECK(logistic(0.0) == doctest::Approx(0.5));
  CHECK(logistic_prime_from_pre(0.0) == doctest::Approx(0.25));
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const double x = rng.uniform(-8.0, 8.0);
    CHECK(logistic(x) + logistic(-x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(logistic(x) > 0.0);
    CHECK(logistic(x) < 1.0);
  }
}

TEST_CASE("tanh and identity basics") {
  CHECK(tanh_act(0.0) == 0.0);
  CHECK(tanh_prime_from_pre(0.0) == doctest::Approx(1.0));
  CHECK(identity_act(3.7) == 3.7);
}

TEST_CASE("activation derivatives match central finite differences") {
  Rng rng(7);
  const double eps = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const double x = rng.uniform(-2.0, 2.0);
    const double fd_sig = (logistic(x + eps) - logistic(x - eps)) / (2 * eps);
    const double fd_tanh = (tanh_act(x + eps) - tanh_act(x - eps)) / (2 * eps);
    CHECK(std::abs(fd_sig - logistic_prime_from_pre(x)) / std::abs(fd_sig) < 1e-8);
    CHECK(std::abs(fd_tanh - tanh_prime_from_pre(x)) / std::abs(fd_tanh) < 1e-8);
  }
}

TEST_CASE("matvec identity and transpose oracle") {
  Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  CHECK(matvec(eye, {1, 2, 3}) == Vector{1, 2, 3});

  Rng rng(3);
  Matrix m(4, 3);
  for (double& v : m.data) v = rng.normal(0, 1);
  Vector v(4);
  for (double& e : v) e = rng.normal(0, 1);

  Matrix mt(3, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) mt(j, i) = m(i, j);
  const Vector a = matvec_transposed(m, v);
  const Vector b = matvec(mt, v);
  for (int j = 0; j < 3; ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-14));
}

TEST_CASE("outer_accumulate definition") {
  Matrix acc(2, 2);
  outer_accumulate(acc, {1, 2}, {3, 4});
  CHECK(acc(0, 0) == 3);
  CHECK(acc(0, 1) == 4);
  CHECK(acc(1, 0) == 6);
  CHECK(acc(1, 1) == 8);
}

TEST_CASE("matvec is linear") {
  Rng rng(11);
  Matrix m(5, 4);
  for (double& v : m.data) v = rng.normal(0, 1);
  Vector u(4), w(4);
  for (double& e : u) e = rng.normal(0, 1);
  for (double& e : w) e = rng.normal(0, 1);
  const double a = rng.normal(0, 2);
  Vector combo(4);
  for (int j = 0; j < 4; ++j) combo[j] = a * u[j] + w[j];
  const Vector lhs = matvec(m, combo);
  const Vector mu = matvec(m, u), mw = matvec(m, w);
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(lhs[i] - (a * mu[i] + mw[i])) < 1e-12);
}

TEST_CASE("dimension mismatch is a fatal configuration error") {
  Matrix m(2, 3);
  CHECK_THROWS_AS(matvec(m, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(matvec_transposed(m, {1.0, 2.0, 3.0}), std::invalid_argument);
  Matrix acc(2, 2);
  CHECK_THROWS_AS(outer_accumulate(acc, {1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("rng reproducibility over 1e4 draws") {
  Rng a(42), b(42);
  for (int k = 0; k < 10000; ++k) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("rng derived streams differ and are deterministic") {
  Rng root(9);
  CHECK(root.derive(0) != root.derive(1));
  CHECK(root.derive(3) == Rng(9).derive(3));
}

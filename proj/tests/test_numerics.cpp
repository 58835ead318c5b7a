#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "eqdisc/numerics.hpp"

using namespace eqdisc;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.normal(0.0, scale);
  return m;
}

// Check the four Moore-Penrose identities to a relative tolerance.
void check_moore_penrose(const Matrix& m, double tol = 1e-8) {
  const Matrix p = pseudo_inverse(m);
  const double scale = std::max(1.0, frobenius_norm(m));
  CHECK(max_abs_diff(multiply(multiply(m, p), m), m) <= tol * scale);
  CHECK(max_abs_diff(multiply(multiply(p, m), p), p) <=
        tol * std::max(1.0, frobenius_norm(p)));
  const Matrix mp = multiply(m, p);
  const Matrix pm = multiply(p, m);
  CHECK(max_abs_diff(mp, transpose(mp)) <= tol * std::max(1.0, frobenius_norm(mp)));
  CHECK(max_abs_diff(pm, transpose(pm)) <= tol * std::max(1.0, frobenius_norm(pm)));
}

}  // namespace

TEST_CASE("matrix construction validates entries") {
  CHECK_THROWS(Matrix(2, 2, {1.0, 2.0, 3.0}));
  CHECK_THROWS(Matrix(1, 1, {std::nan("")}));
  CHECK_THROWS(Matrix(1, 2, {1.0, std::numeric_limits<double>::infinity()}));
  const Matrix m{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(m(1, 0) == 3.0);
}

TEST_CASE("solve_least_squares: identity design returns the targets") {
  const Matrix y{{1.5}, {-2.0}, {0.25}};
  const Matrix w = solve_least_squares(Matrix::identity(3), y);
  CHECK(max_abs_diff(w, y) <= 1e-12);
}

TEST_CASE("solve_least_squares: constant design recovers the mean (grid oracle)") {
  const Matrix x{{1.0}, {1.0}};
  const Matrix y{{1.0}, {3.0}};
  // Independent oracle: scan candidate w over a grid, keep the best residual.
  double best_w = 0.0, best_res = 1e300;
  for (double w = -5.0; w <= 5.0; w += 0.01) {
    const double res = (w - 1.0) * (w - 1.0) + (w - 3.0) * (w - 3.0);
    if (res < best_res) {
      best_res = res;
      best_w = w;
    }
  }
  CHECK(best_w == doctest::Approx(2.0).epsilon(1e-9));
  const Matrix w = solve_least_squares(x, y);
  CHECK(w(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("solve_least_squares: noise-free banded system recovers the kernel") {
  // Rows are windows of a signal; targets generated by the taps [1,3,5].
  const std::vector<double> kernel{1.0, 3.0, 5.0};
  Rng rng(7);
  Matrix x(8, 3), y(8, 1);
  for (int i = 0; i < 8; ++i) {
    double target = 0.0;
    for (int j = 0; j < 3; ++j) {
      x(i, j) = rng.normal(0.0, 1.0);
      target += x(i, j) * kernel[j];
    }
    y(i, 0) = target;
  }
  const Matrix w = solve_least_squares(x, y);
  for (int j = 0; j < 3; ++j) CHECK(w(j, 0) == doctest::Approx(kernel[j]).epsilon(1e-9));
}

TEST_CASE("solve_least_squares: mismatched rows throw") {
  CHECK_THROWS(solve_least_squares(Matrix(3, 2), Matrix(2, 1)));
}

TEST_CASE("solve_least_squares: local optimality against random perturbations") {
  Rng rng(11);
  const Matrix x = random_matrix(10, 3, rng);
  const Matrix y = random_matrix(10, 2, rng);
  const Matrix w = solve_least_squares(x, y);
  const double res0 = frobenius_norm(subtract(multiply(x, w), y));
  for (int trial = 0; trial < 100; ++trial) {
    Matrix w2 = w;
    for (double& v : w2.data()) v += rng.normal(0.0, 0.01);
    CHECK(frobenius_norm(subtract(multiply(x, w2), y)) >= res0 - 1e-12);
  }
}

TEST_CASE("pseudo_inverse: identity and diagonal") {
  CHECK(max_abs_diff(pseudo_inverse(Matrix::identity(4)), Matrix::identity(4)) <= 1e-12);
  const Matrix d{{2.0, 0.0}, {0.0, 0.0}};
  const Matrix expected{{0.5, 0.0}, {0.0, 0.0}};
  CHECK(max_abs_diff(pseudo_inverse(d), expected) <= 1e-12);
}

TEST_CASE("pseudo_inverse of a binary scheme is the column-normalized transpose") {
  const Matrix a{{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  const Matrix expected{{0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}};
  CHECK(max_abs_diff(pseudo_inverse(a), expected) <= 1e-10);
  check_moore_penrose(a);
}

TEST_CASE("pseudo_inverse satisfies the Moore-Penrose identities on random matrices") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = rng.uniform_int(1, 8);
    const int cols = rng.uniform_int(1, 8);
    Matrix m = random_matrix(rows, cols, rng);
    if (trial % 3 == 0 && cols >= 2) {
      // Force rank deficiency: duplicate a column.
      for (int i = 0; i < rows; ++i) m(i, cols - 1) = m(i, 0);
    }
    check_moore_penrose(m);
  }
}

TEST_CASE("nuclear_norm basics") {
  CHECK(nuclear_norm(Matrix::identity(5)) == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(nuclear_norm(Matrix(3, 3, 0.0)) == doctest::Approx(0.0));
  const Matrix ones(2, 2, 1.0);
  CHECK(nuclear_norm(ones) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("nuclear_norm: non-negative, zero iff zero, absolutely homogeneous") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = random_matrix(rng.uniform_int(1, 6), rng.uniform_int(1, 6), rng);
    const double n1 = nuclear_norm(m);
    CHECK(n1 >= 0.0);
    if (frobenius_norm(m) > 1e-12) CHECK(n1 > 0.0);
    const double c = rng.uniform(-3.0, 3.0);
    CHECK(nuclear_norm(scale(m, c)) == doctest::Approx(std::fabs(c) * n1).epsilon(1e-8));
  }
}

TEST_CASE("row_softmax: uniform, saturation, shift invariance, row sums") {
  const Matrix a = row_softmax(Matrix(2, 2, 0.0));
  for (double x : a.data()) CHECK(x == doctest::Approx(0.5).epsilon(1e-12));

  const Matrix b = row_softmax(Matrix{{10.0, -10.0}});
  CHECK(b(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(b(0, 1) <= 1e-8);

  Rng rng(5);
  Matrix l = random_matrix(4, 4, rng);
  Matrix shifted = l;
  for (int j = 0; j < 4; ++j) shifted(2, j) += 17.5;
  CHECK(max_abs_diff(row_softmax(l), row_softmax(shifted)) <= 1e-12);

  const Matrix s = row_softmax(random_matrix(6, 5, rng, 10.0));
  for (int i = 0; i < s.rows(); ++i) {
    double total = 0.0;
    for (int j = 0; j < s.cols(); ++j) total += s(i, j);
    CHECK(std::fabs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("entropy_penalty: binary exactly zero, uniform value, maximality, domain check") {
  const Matrix binary{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
  CHECK(entropy_penalty(binary) == 0.0);

  CHECK(entropy_penalty(Matrix(2, 2, 0.5)) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // Uniform maximizes entropy over row-stochastic 2x2 matrices.
  const double uniform_h = entropy_penalty(Matrix(2, 2, 0.5));
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const double p = rng.uniform(0.0, 1.0), q = rng.uniform(0.0, 1.0);
    const Matrix m{{p, 1.0 - p}, {q, 1.0 - q}};
    CHECK(entropy_penalty(m) <= uniform_h + 1e-12);
  }

  CHECK_THROWS(entropy_penalty(Matrix{{1.5, -0.5}}));
}

TEST_CASE("adam_step: first-step magnitude, zero gradient, determinism") {
  AdamState st = make_adam(1, 2, 0.05);
  Matrix var(1, 2, {1.0, -2.0});
  const Matrix grad{{10.0, -0.5}};
  const Matrix before = var;
  adam_step(st, var, grad);
  // First bias-corrected step is ~lr in the gradient's sign direction.
  CHECK(before(0, 0) - var(0, 0) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(var(0, 1) - before(0, 1) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(st.step == 1);

  AdamState st2 = make_adam(1, 2, 0.05);
  Matrix var2{{3.0, 4.0}};
  adam_step(st2, var2, Matrix(1, 2, 0.0));
  CHECK(var2(0, 0) == 3.0);
  CHECK(var2(0, 1) == 4.0);

  // Identical call sequences give identical variables.
  AdamState sa = make_adam(2, 2, 0.01, 1e-4), sb = make_adam(2, 2, 0.01, 1e-4);
  Rng rng(3);
  Matrix va(2, 2, 0.5), vb(2, 2, 0.5);
  for (int i = 0; i < 25; ++i) {
    const Matrix g = random_matrix(2, 2, rng);
    adam_step(sa, va, g);
    adam_step(sb, vb, g);
  }
  CHECK(max_abs_diff(va, vb) == 0.0);

  CHECK_THROWS(adam_step(sa, va, Matrix(3, 3, 0.0)));
}

TEST_CASE("finite_diff_gradient: quadratic, linear, nuclear-norm subgradient") {
  const auto sum_sq = [](const Matrix& m) {
    double s = 0.0;
    for (double x : m.data()) s += x * x;
    return s;
  };
  const Matrix x{{1.0, 2.0}};
  const Matrix g = finite_diff_gradient(sum_sq, x, 1e-5);
  CHECK(g(0, 0) == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(g(0, 1) == doctest::Approx(4.0).epsilon(1e-7));

  const auto linear = [](const Matrix& m) { return 3.0 * m(0, 0) - 2.0 * m(0, 1); };
  for (double h : {1e-3, 1e-5, 1e-7}) {
    const Matrix lg = finite_diff_gradient(linear, x, h);
    CHECK(lg(0, 0) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(lg(0, 1) == doctest::Approx(-2.0).epsilon(1e-6));
  }

  // d|M|_* = U V^T at matrices with distinct nonzero singular values.
  Rng rng(17);
  const Matrix m = random_matrix(3, 3, rng);
  const Svd dec = svd(m);
  const Matrix analytic = multiply(dec.u, transpose(dec.v));
  const Matrix fd = finite_diff_gradient([](const Matrix& a) { return nuclear_norm(a); },
                                         m, 1e-6);
  CHECK(max_abs_diff(analytic, fd) <= 1e-4);
}

TEST_CASE("svd reconstructs and orders singular values") {
  Rng rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const int rows = rng.uniform_int(1, 7), cols = rng.uniform_int(1, 7);
    const Matrix m = random_matrix(rows, cols, rng);
    const Svd dec = svd(m);
    Matrix recon(rows, cols, 0.0);
    for (size_t k = 0; k < dec.sigma.size(); ++k)
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          recon(i, j) += dec.sigma[k] * dec.u(i, static_cast<int>(k)) *
                         dec.v(j, static_cast<int>(k));
    CHECK(max_abs_diff(recon, m) <= 1e-10 * std::max(1.0, frobenius_norm(m)));
    for (size_t k = 1; k < dec.sigma.size(); ++k) CHECK(dec.sigma[k - 1] >= dec.sigma[k]);
  }
}

TEST_CASE("rng: degenerate stddev, determinism, stream independence, moments") {
  Rng rng(99);
  for (int i = 0; i < 5; ++i) CHECK(rng.normal(2.5, 0.0) == 2.5);

  Rng a = derive_rng(1234, 7), b = derive_rng(1234, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = derive_rng(1234, 8);
  bool any_diff = false;
  Rng a2 = derive_rng(1234, 7);
  for (int i = 0; i < 10; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  CHECK(any_diff);

  // Sample mean of 1e5 draws within 4 standard errors.
  Rng d(424242);
  const int n = 100000;
  const std::vector<double> draws = rng_normal(d, n, 0.7, 2.0);
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= n;
  CHECK(std::fabs(mean - 0.7) <= 4.0 * 2.0 / std::sqrt(static_cast<double>(n)));

  Rng e(5);
  const std::vector<double> u = rng_uniform(e, 10000, -1.0, 3.0);
  for (double x : u) {
    CHECK(x >= -1.0);
    CHECK(x < 3.0);
  }
}

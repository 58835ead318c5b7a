// numerics.hpp - minimal dense linear algebra, penalties, Adam, and seeded RNG.
//
// Everything here is sized for desk-scale problems (matrices up to a few
// hundred rows); robustness and determinism are the goals, not throughput.
// All operations are pure functions of their inputs; Rng carries its state
// explicitly, so values can be shared freely across threads.

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace eqdisc {

// ---------------------------------------------------------------------------
// Matrix: dense, double precision, row-major.
// ---------------------------------------------------------------------------
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  // Validates that every entry is finite.
  Matrix(int rows, int cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }

  double& operator()(int i, int j) { return data_[i * cols_ + j]; }
  double operator()(int i, int j) const { return data_[i * cols_ + j]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);
// u v^T for column vector u and row vector v.
Matrix outer(const std::vector<double>& u, const std::vector<double>& v);
std::vector<double> matvec(const Matrix& m, const std::vector<double>& x);
// m^T x without forming the transpose.
std::vector<double> matvec_transposed(const Matrix& m, const std::vector<double>& x);
double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

// Small vector helpers used throughout.
double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm_sq(const std::vector<double>& a);
std::vector<double> vec_sub(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// SVD and derived operations.
// ---------------------------------------------------------------------------

// Thin SVD, m = u * diag(sigma) * v^T with sigma sorted descending.
// u is rows x k, v is cols x k, k = min(rows, cols). Columns of u whose
// singular value is numerically zero are zeroed rather than completed to an
// orthonormal basis; nothing downstream needs the null-space directions.
struct Svd {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

// One-sided Jacobi. `v_warm`, when supplied with the right shape, seeds the
// right-singular basis with a previous result to cut sweep count on slowly
// changing inputs (the relaxed discovery loop exploits this).
Svd svd(const Matrix& m, const Matrix* v_warm = nullptr);

// Moore-Penrose pseudo-inverse; singular values below 1e-10 * sigma_max are
// treated as zero.
Matrix pseudo_inverse(const Matrix& m);

// Sum of singular values.
double nuclear_norm(const Matrix& m);

// Minimum-norm solution of argmin_W |X W - Y|_F^2 (P x Q for X: N x P,
// Y: N x Q). Falls back to the pseudo-inverse automatically when X^T X is
// singular.
Matrix solve_least_squares(const Matrix& x, const Matrix& y);

// ---------------------------------------------------------------------------
// Penalty functions and the softmax relaxation.
// ---------------------------------------------------------------------------

// Row-wise softmax, stabilized by subtracting each row's maximum.
Matrix row_softmax(const Matrix& logits);

// H(A) = -sum a * log(a), with 0 log 0 := 0 and the log argument clamped at
// 1e-12 so rounded binary schemes score exactly zero. Entries must lie in
// [0, 1] up to a 1e-9 tolerance.
double entropy_penalty(const Matrix& a);

// ---------------------------------------------------------------------------
// Adam.
// ---------------------------------------------------------------------------
struct AdamState {
  long step = 0;
  Matrix first_moment;
  Matrix second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

AdamState make_adam(int rows, int cols, double learning_rate, double weight_decay = 0.0);

// One bias-corrected Adam update in place. Weight decay enters as a classic
// L2 term (decay * variable) added to the gradient before the moment updates.
void adam_step(AdamState& state, Matrix& variable, const Matrix& gradient);

// Central finite differences, entry by entry. Test oracle for analytic
// gradients; O(size^2) evaluations of f.
Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f,
                            const Matrix& x, double h);

// ---------------------------------------------------------------------------
// Seeded random generation.
// ---------------------------------------------------------------------------

// Counter-based generator (splitmix64 core): output i is a hash of
// (seed, i), so identical seeds give identical streams and derived streams
// are independent of evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform(double lo = 0.0, double hi = 1.0);
  // Inclusive on both ends.
  int uniform_int(int lo, int hi);
  double normal(double mean = 0.0, double stddev = 1.0);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

std::vector<double> rng_normal(Rng& rng, int n, double mean, double stddev);
std::vector<double> rng_uniform(Rng& rng, int n, double lo, double hi);

// Independent stream for (base_seed, index); order of derivation does not
// matter, so parallel runs can each derive their own.
Rng derive_rng(std::uint64_t base_seed, std::uint64_t index);

}  // namespace eqdisc

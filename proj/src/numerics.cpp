#include "eqdisc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace eqdisc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
  require(rows >= 0 && cols >= 0, "Matrix: negative dimension");
  require(std::isfinite(fill), "Matrix: non-finite fill value");
}

Matrix::Matrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require(rows >= 0 && cols >= 0, "Matrix: negative dimension");
  require(data_.size() == static_cast<size_t>(rows) * cols,
          "Matrix: entry count does not match rows*cols");
  for (double x : data_)
    require(std::isfinite(x), "Matrix: non-finite entry");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  data_.reserve(static_cast<size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    require(static_cast<int>(r.size()) == cols_, "Matrix: ragged initializer");
    for (double x : r) {
      require(std::isfinite(x), "Matrix: non-finite entry");
      data_.push_back(x);
    }
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n, 0.0);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "multiply: inner dimensions differ");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "add: shape mismatch");
  Matrix out = a;
  for (int i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "subtract: shape mismatch");
  Matrix out = a;
  for (int i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix scale(const Matrix& m, double c) {
  Matrix out = m;
  for (double& x : out.data()) x *= c;
  return out;
}

Matrix outer(const std::vector<double>& u, const std::vector<double>& v) {
  Matrix out(static_cast<int>(u.size()), static_cast<int>(v.size()));
  for (size_t i = 0; i < u.size(); ++i)
    for (size_t j = 0; j < v.size(); ++j)
      out(static_cast<int>(i), static_cast<int>(j)) = u[i] * v[j];
  return out;
}

std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
  require(m.cols() == static_cast<int>(x.size()), "matvec: dimension mismatch");
  std::vector<double> out(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> matvec_transposed(const Matrix& m, const std::vector<double>& x) {
  require(m.rows() == static_cast<int>(x.size()),
          "matvec_transposed: dimension mismatch");
  std::vector<double> out(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (int j = 0; j < m.cols(); ++j) out[j] += m(i, j) * xi;
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double d = 0.0;
  for (int i = 0; i < a.size(); ++i)
    d = std::max(d, std::fabs(a.data()[i] - b.data()[i]));
  return d;
}

bool all_finite(const Matrix& m) {
  for (double x : m.data())
    if (!std::isfinite(x)) return false;
  return true;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(const std::vector<double>& a) { return dot(a, a); }

std::vector<double> vec_sub(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "vec_sub: length mismatch");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// ---------------------------------------------------------------------------
// SVD (one-sided Jacobi on columns)
// ---------------------------------------------------------------------------

namespace {

// Works on the transpose when rows < cols so the working matrix is tall.
Svd svd_tall(const Matrix& m, const Matrix* v_warm) {
  const int rows = m.rows();
  const int cols = m.cols();

  // Column-major working copy: b[j] is column j of (m * v).
  std::vector<std::vector<double>> b(cols, std::vector<double>(rows));
  Matrix v = Matrix::identity(cols);
  if (v_warm != nullptr && v_warm->rows() == cols && v_warm->cols() == cols &&
      all_finite(*v_warm)) {
    v = *v_warm;
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int k = 0; k < cols; ++k) s += m(i, k) * v(k, j);
        b[j][i] = s;
      }
  } else {
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) b[j][i] = m(i, j);
  }

  const double tol = 1e-14;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < rows; ++i) {
          alpha += b[p][i] * b[p][i];
          beta += b[q][i] * b[q][i];
          gamma += b[p][i] * b[q][i];
        }
        if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0)
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < rows; ++i) {
          const double bp = b[p][i];
          b[p][i] = c * bp - s * b[q][i];
          b[q][i] = s * bp + c * b[q][i];
        }
        for (int k = 0; k < cols; ++k) {
          const double vp = v(k, p);
          v(k, p) = c * vp - s * v(k, q);
          v(k, q) = s * vp + c * v(k, q);
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(cols);
  for (int j = 0; j < cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += b[j][i] * b[j][i];
    sigma[j] = std::sqrt(s);
  }

  // Sort singular values descending; permute u and v columns to match.
  std::vector<int> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return sigma[i] > sigma[j]; });

  Svd out;
  out.sigma.resize(cols);
  out.u = Matrix(rows, cols);
  out.v = Matrix(cols, cols);
  double sigma_max = 0.0;
  for (int j = 0; j < cols; ++j) sigma_max = std::max(sigma_max, sigma[j]);
  const double zero_cut = sigma_max * 1e-300 > 0 ? sigma_max * 1e-15 : 0.0;
  for (int j = 0; j < cols; ++j) {
    const int src = order[j];
    out.sigma[j] = sigma[src];
    if (sigma[src] > zero_cut && sigma[src] > 0.0) {
      const double inv = 1.0 / sigma[src];
      for (int i = 0; i < rows; ++i) out.u(i, j) = b[src][i] * inv;
    }  // else: leave the u column zero
    for (int k = 0; k < cols; ++k) out.v(k, j) = v(k, src);
  }
  return out;
}

}  // namespace

Svd svd(const Matrix& m, const Matrix* v_warm) {
  require(m.rows() > 0 && m.cols() > 0, "svd: empty matrix");
  if (m.rows() >= m.cols()) return svd_tall(m, v_warm);
  Svd t = svd_tall(transpose(m), nullptr);
  Svd out;
  out.u = std::move(t.v);
  out.v = std::move(t.u);
  out.sigma = std::move(t.sigma);
  return out;
}

Matrix pseudo_inverse(const Matrix& m) {
  Svd s = svd(m);
  const double cutoff = s.sigma.empty() ? 0.0 : 1e-10 * s.sigma.front();
  // pinv = v * diag(1/sigma) * u^T over kept singular values.
  Matrix out(m.cols(), m.rows(), 0.0);
  for (size_t k = 0; k < s.sigma.size(); ++k) {
    if (s.sigma[k] <= cutoff || s.sigma[k] == 0.0) continue;
    const double inv = 1.0 / s.sigma[k];
    for (int i = 0; i < m.cols(); ++i) {
      const double vik = s.v(i, static_cast<int>(k)) * inv;
      if (vik == 0.0) continue;
      for (int j = 0; j < m.rows(); ++j)
        out(i, j) += vik * s.u(j, static_cast<int>(k));
    }
  }
  return out;
}

double nuclear_norm(const Matrix& m) {
  Svd s = svd(m);
  double total = 0.0;
  for (double x : s.sigma) total += x;
  return total;
}

Matrix solve_least_squares(const Matrix& x, const Matrix& y) {
  require(x.rows() == y.rows(), "solve_least_squares: row counts differ");
  require(x.rows() >= 1, "solve_least_squares: empty system");
  return multiply(pseudo_inverse(x), y);
}

// ---------------------------------------------------------------------------
// Softmax and entropy
// ---------------------------------------------------------------------------

Matrix row_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    double row_max = -1e308;
    for (int j = 0; j < logits.cols(); ++j) row_max = std::max(row_max, logits(i, j));
    double denom = 0.0;
    for (int j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - row_max);
      denom += out(i, j);
    }
    for (int j = 0; j < logits.cols(); ++j) out(i, j) /= denom;
  }
  return out;
}

double entropy_penalty(const Matrix& a) {
  double h = 0.0;
  for (double x : a.data()) {
    require(x >= -1e-9 && x <= 1.0 + 1e-9, "entropy_penalty: entry outside [0,1]");
    if (x <= 0.0) continue;  // 0 log 0 := 0
    h -= x * std::log(std::max(x, 1e-12));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

AdamState make_adam(int rows, int cols, double learning_rate, double weight_decay) {
  AdamState st;
  st.first_moment = Matrix(rows, cols, 0.0);
  st.second_moment = Matrix(rows, cols, 0.0);
  st.learning_rate = learning_rate;
  st.weight_decay = weight_decay;
  return st;
}

void adam_step(AdamState& state, Matrix& variable, const Matrix& gradient) {
  require(variable.same_shape(gradient) && variable.same_shape(state.first_moment),
          "adam_step: shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (int i = 0; i < variable.size(); ++i) {
    const double g = gradient.data()[i] + state.weight_decay * variable.data()[i];
    double& m = state.first_moment.data()[i];
    double& v = state.second_moment.data()[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    variable.data()[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f,
                            const Matrix& x, double h) {
  require(h > 0.0, "finite_diff_gradient: h must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (int i = 0; i < x.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + h;
    const double fp = f(probe);
    probe.data()[i] = saved - h;
    const double fm = f(probe);
    probe.data()[i] = saved;
    grad.data()[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t Rng::next_u64() {
  counter_ += 1;
  return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ull);
}

double Rng::uniform(double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("Rng::uniform: lo > hi");
  const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

int Rng::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double Rng::normal(double mean, double stddev) {
  if (stddev < 0.0) throw std::invalid_argument("Rng::normal: negative stddev");
  // Box-Muller; two uniforms per draw keeps the stream layout trivial.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  return mean + stddev * z;
}

std::vector<double> rng_normal(Rng& rng, int n, double mean, double stddev) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = rng.normal(mean, stddev);
  return out;
}

std::vector<double> rng_uniform(Rng& rng, int n, double lo, double hi) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = rng.uniform(lo, hi);
  return out;
}

Rng derive_rng(std::uint64_t base_seed, std::uint64_t index) {
  // Two avalanche rounds over (seed, index) decorrelate nearby indices.
  return Rng(mix64(mix64(base_seed ^ 0x6A09E667F3BCC909ull) +
                   (index + 1) * 0x9E3779B97F4A7C15ull));
}

}  // namespace eqdisc

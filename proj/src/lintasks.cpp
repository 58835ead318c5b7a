#include "eqdisc/lintasks.hpp"

#include <cmath>
#include <stdexcept>

namespace eqdisc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

std::vector<double> default_kernel(int g_len) {
  require(g_len >= 1, "default_kernel: length must be >= 1");
  std::vector<double> g(g_len);
  for (int j = 0; j < g_len; ++j) g[j] = 1.0 + 2.0 * j;
  return g;
}

std::vector<double> crosscorr(const std::vector<double>& x, const std::vector<double>& g) {
  require(!g.empty(), "crosscorr: empty kernel");
  require(g.size() <= x.size(), "crosscorr: kernel longer than input");
  const int k_out = static_cast<int>(x.size() - g.size()) + 1;
  std::vector<double> y(k_out, 0.0);
  for (int k = 0; k < k_out; ++k)
    for (size_t j = 0; j < g.size(); ++j) y[k] += x[k + j] * g[j];
  return y;
}

std::pair<Matrix, Matrix> gen_shift_data(const ShiftTaskSpec& spec, int n, Rng& rng,
                                         bool with_noise) {
  require(n >= 1, "gen_shift_data: n must be >= 1");
  require(!spec.kernel.empty() && static_cast<int>(spec.kernel.size()) <= spec.k_in,
          "gen_shift_data: invalid kernel length");
  const int k_out = spec.k_out();
  Matrix x(n, spec.k_in), y(n, k_out);
  std::vector<double> row(spec.k_in);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < spec.k_in; ++j) {
      row[j] = rng.normal(0.0, 1.0);
      x(s, j) = row[j];
    }
    const std::vector<double> out = crosscorr(row, spec.kernel);
    for (int k = 0; k < k_out; ++k)
      y(s, k) = out[k] + (with_noise ? rng.normal(0.0, spec.noise_sigma) : 0.0);
  }
  return {std::move(x), std::move(y)};
}

Partition toeplitz_gt_partition(int k_in, int g_len) {
  require(g_len >= 1 && g_len <= k_in, "toeplitz_gt_partition: invalid kernel length");
  const int k_out = k_in - g_len + 1;
  std::vector<std::vector<int>> clusters;
  std::vector<char> covered(k_out * k_in, 0);
  for (int j = 0; j < g_len; ++j) {
    std::vector<int> tap;
    for (int k = 0; k < k_out; ++k) {
      const int flat = k * k_in + (k + j);
      tap.push_back(flat);
      covered[flat] = 1;
    }
    clusters.push_back(std::move(tap));
  }
  std::vector<int> off_band;
  for (int i = 0; i < k_out * k_in; ++i)
    if (!covered[i]) off_band.push_back(i);
  if (!off_band.empty()) clusters.push_back(std::move(off_band));
  return make_partition(k_out * k_in, std::move(clusters));
}

std::pair<Matrix, Matrix> gen_denoise_data(const DenoiseTaskSpec& spec, int n, Rng& rng) {
  require(n >= 1, "gen_denoise_data: n must be >= 1");
  require(spec.k >= 2, "gen_denoise_data: signal length must be >= 2");
  Matrix x(n, spec.k), y(n, spec.k);
  for (int s = 0; s < n; ++s) {
    const double scale = rng.uniform(1.0, 50.0);
    const double offset = rng.uniform(-5.0, 5.0);
    const int shift = rng.uniform_int(0, spec.k);
    for (int k = 0; k < spec.k; ++k) {
      const double clean = (k >= shift ? scale : 0.0) + offset;  // U(0) = 1
      y(s, k) = clean;
      x(s, k) = clean + rng.normal(0.0, spec.noise_sigma);
    }
  }
  return {std::move(x), std::move(y)};
}

Partition toeplitz_full_partition(int k) {
  require(k >= 1, "toeplitz_full_partition: k must be >= 1");
  std::vector<std::vector<int>> clusters;
  for (int d = -(k - 1); d <= k - 1; ++d) {
    std::vector<int> diag;
    for (int m = 0; m < k; ++m) {
      const int n = m + d;
      if (n >= 0 && n < k) diag.push_back(m * k + n);
    }
    if (!diag.empty()) clusters.push_back(std::move(diag));
  }
  return make_partition(k * k, std::move(clusters));
}

std::pair<Matrix, Matrix> gen_sum_data(const SumTaskSpec& spec, int n, Rng& rng,
                                       bool with_label_noise) {
  require(n >= 1, "gen_sum_data: n must be >= 1");
  require(spec.seq_len >= 1, "gen_sum_data: seq_len must be >= 1");
  Matrix x(n, spec.seq_len), y(n, 1);
  for (int s = 0; s < n; ++s) {
    double label = 0.0;
    for (int i = 0; i < spec.seq_len; ++i) {
      const double v = static_cast<double>(rng.uniform_int(1, 10));
      x(s, i) = v;
      const double sign = (spec.negated && i % 2 == 0) ? -1.0 : 1.0;
      label += sign * v;
    }
    if (with_label_noise) label += rng.uniform(-0.5, 0.5);
    y(s, 0) = label;
  }
  return {std::move(x), std::move(y)};
}

Partition sum_gt_partition(int seq_len, bool negated) {
  require(seq_len >= 1, "sum_gt_partition: seq_len must be >= 1");
  if (!negated || seq_len == 1) {
    std::vector<int> all(seq_len);
    for (int i = 0; i < seq_len; ++i) all[i] = i;
    return make_partition(seq_len, {all});
  }
  std::vector<int> even, odd;
  for (int i = 0; i < seq_len; ++i) (i % 2 == 0 ? even : odd).push_back(i);
  return make_partition(seq_len, {even, odd});
}

SharingScheme baseline_scheme(BaselineKind kind, const Partition& gt) {
  if (kind == BaselineKind::NoSharing)
    return make_scheme(Matrix::identity(gt.k));
  return scheme_from_partition(gt);
}

EvalReport evaluate(const DiscoveryResult& result, const Matrix& x_test,
                    const Matrix& y_test, const Partition& gt, int out_dim, int in_dim) {
  require(x_test.rows() == y_test.rows(), "evaluate: test sample count mismatch");
  require(x_test.cols() == in_dim && y_test.cols() == out_dim,
          "evaluate: test dimensions disagree with the model shape");
  require(result.scheme.k == out_dim * in_dim, "evaluate: parameter count mismatch");

  const std::vector<double> theta =
      matvec(result.scheme.assignment, result.psi_final);
  double loss = 0.0;
  for (int s = 0; s < x_test.rows(); ++s) {
    for (int m = 0; m < out_dim; ++m) {
      double pred = 0.0;
      for (int n = 0; n < in_dim; ++n) pred += theta[m * in_dim + n] * x_test(s, n);
      const double d = pred - y_test(s, m);
      loss += d * d;
    }
  }
  EvalReport report;
  report.test_loss = loss / x_test.rows();
  report.pd = partition_distance(result.partition, gt);
  return report;
}

}  // namespace eqdisc

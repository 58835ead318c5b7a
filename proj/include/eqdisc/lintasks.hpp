// lintasks.hpp - generators and ground-truth sharing schemes for the linear
// tasks: valid-mode cross-correlation (shift equivariance), step-signal
// denoising, and the position-weighted sum-of-numbers regression; plus the
// no-sharing / oracle baselines and metric evaluation.

#pragma once

#include <utility>
#include <vector>

#include "eqdisc/discovery.hpp"
#include "eqdisc/numerics.hpp"
#include "eqdisc/partition.hpp"

namespace eqdisc {

// ---------------------------------------------------------------------------
// Cross-correlation / shift equivariance
// ---------------------------------------------------------------------------

struct ShiftTaskSpec {
  int k_in = 6;
  std::vector<double> kernel;   // g, length G_len <= k_in
  double noise_sigma = 0.0;     // stddev of the additive label noise
  int k_out() const { return k_in - static_cast<int>(kernel.size()) + 1; }
};

// [1, 3, 5, ...]: entries increase by two per tap.
std::vector<double> default_kernel(int g_len);

// Valid-mode cross-correlation, y[k] = sum_j x[k+j] g[j].
std::vector<double> crosscorr(const std::vector<double>& x, const std::vector<double>& g);

// X rows standard normal; Y rows the cross-correlation, plus
// N(0, noise_sigma^2) per coordinate when with_noise is set.
std::pair<Matrix, Matrix> gen_shift_data(const ShiftTaskSpec& spec, int n, Rng& rng,
                                         bool with_noise);

// Partition of the K_out x K_in weight matrix, flattened row-major: one
// cluster per kernel tap along its diagonal, plus one cluster collecting the
// structurally-zero off-band entries when any exist.
Partition toeplitz_gt_partition(int k_in, int g_len);

// ---------------------------------------------------------------------------
// Step-signal denoising
// ---------------------------------------------------------------------------

struct DenoiseTaskSpec {
  int k = 10;
  double noise_sigma = 1.0;
  // Fixed sampling ranges: s ~ unif[1,50], b ~ unif[-5,5], t ~ unif{0..K}.
};

// Returns (noisy inputs X, clean targets Y); y[k] = s U(k - t) + b with
// U(0) = 1.
std::pair<Matrix, Matrix> gen_denoise_data(const DenoiseTaskSpec& spec, int n, Rng& rng);

// Diagonal sharing over the full K x K map (2K-1 clusters): the scheme a
// shift-equivariant linear denoiser would use.
Partition toeplitz_full_partition(int k);

// ---------------------------------------------------------------------------
// Sum of numbers (linear position-weighted analog)
// ---------------------------------------------------------------------------

struct SumTaskSpec {
  int seq_len = 4;
  bool negated = false;
  // Values sampled from {1,...,10}; label noise uniform on [-0.5, 0.5].
};

// y = sum_i s_i x_i with s_i = 1 everywhere (standard) or s_i = -1 at
// zero-indexed even positions (negated).
std::pair<Matrix, Matrix> gen_sum_data(const SumTaskSpec& spec, int n, Rng& rng,
                                       bool with_label_noise);

Partition sum_gt_partition(int seq_len, bool negated);

// ---------------------------------------------------------------------------
// Baselines and evaluation
// ---------------------------------------------------------------------------

enum class BaselineKind { NoSharing, Oracle };

SharingScheme baseline_scheme(BaselineKind kind, const Partition& gt);

struct EvalReport {
  double test_loss = 0.0;  // mean per-sample squared prediction error
  int pd = 0;              // partition distance to the ground truth
};

// Scores a regression-task discovery result on held-out data using
// A psi_final, reshaped out_dim x in_dim.
EvalReport evaluate(const DiscoveryResult& result, const Matrix& x_test,
                    const Matrix& y_test, const Partition& gt, int out_dim, int in_dim);

}  // namespace eqdisc

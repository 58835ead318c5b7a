// gaussian.hpp - the Gaussian shared-means task: data generation, shared-mean
// MLE, the closed-form MSE of a sharing scheme, the finite-sample bound on the
// MSE gap, and a chi-squared tail check backing the bound's constant.

#pragma once

#include <vector>

#include "eqdisc/numerics.hpp"
#include "eqdisc/partition.hpp"

namespace eqdisc {

// y ~ N(A_gt psi_gt, sigma^2 I). theta_gt = A_gt psi_gt is derived on
// construction and is constant within each ground-truth cluster.
struct GaussianTask {
  int k = 0;
  Partition gt_partition;
  std::vector<double> psi_gt;  // one value per canonical cluster column, zeros elsewhere
  double sigma = 1.0;
  std::vector<double> theta_gt;
};

// cluster_values[i] is the shared mean of the i-th canonical cluster.
GaussianTask make_gaussian_task(const Partition& gt, const std::vector<double>& cluster_values,
                                double sigma);

struct SampleSet {
  Matrix samples;  // n x K, one sample per row
  int n() const { return samples.rows(); }
  int k() const { return samples.cols(); }
};

SampleSet gen_gaussian(const GaussianTask& task, int n, Rng& rng);

// theta_hat = assignment * psi_hat holds exactly: psi_hat stores one value in
// each active column, zeros elsewhere.
struct MeanEstimate {
  std::vector<double> theta_hat;
  std::vector<double> psi_hat;
  SharingScheme scheme;
};

// Per index i, theta_hat[i] averages all entries over samples and over the
// indices sharing i's cluster.
MeanEstimate mle_shared_mean(const SharingScheme& scheme, const SampleSet& data);

// Average of samples(s, idx) over all rows s and all idx in the cluster,
// accumulated in one pass with a single division. The MLE and the binary
// lower solver both call this, so they agree exactly.
double cluster_mean(const Matrix& samples, const std::vector<int>& cluster);

// Sum over validation samples of |theta_hat - y|^2.
double validation_loss(const std::vector<double>& theta_hat, const SampleSet& val);

// |A Abar^T theta_gt - theta_gt|^2 + rank(A) sigma^2 / n, with Abar the
// column-normalized assignment and rank(A) the cluster count.
double mse_closed_form(const SharingScheme& scheme, const std::vector<double>& theta_gt,
                       double sigma, int n);

struct McMse {
  double mse = 0.0;
  double std_error = 0.0;
};

// Empirical MSE over `runs` independent datasets of size n, each fit with
// mle_shared_mean. Per-run streams are derived from rng, so the result is
// independent of evaluation order.
McMse mc_mse(const SharingScheme& scheme, const GaussianTask& task, int n, int runs,
             Rng& rng);

// sigma^2 [ (1-r)/(r n) (rank_gt - 1) - 40 ln(alpha) / ((1-r) n) ].
// The alpha < exp(-K/10) precondition is checked by the caller, where K is
// known; see check_claim2_alpha.
double claim2_bound(int rank_gt, double sigma, int n_total, double r, double alpha);

// Throws unless 0 < alpha < exp(-K/10).
void check_claim2_alpha(double alpha, int k);

struct Chi2Check {
  double empirical = 0.0;
  double bound = 0.0;
};

// Estimates P(U >= 2 t K) for U a sum of K squared standard normals and
// returns it with the analytic bound exp(-t K / 10). t >= 1, samples >= 1e4.
Chi2Check chi2_tail_check(int k, double t, int samples, Rng& rng);

}  // namespace eqdisc

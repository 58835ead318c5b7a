#include "eqdisc/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace eqdisc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

double cluster_mean(const Matrix& samples, const std::vector<int>& cluster) {
  double total = 0.0;
  for (int s = 0; s < samples.rows(); ++s)
    for (int idx : cluster) total += samples(s, idx);
  return total / (static_cast<double>(samples.rows()) * cluster.size());
}

GaussianTask make_gaussian_task(const Partition& gt, const std::vector<double>& cluster_values,
                                double sigma) {
  require(static_cast<int>(cluster_values.size()) == gt.cluster_count(),
          "make_gaussian_task: one value per cluster required");
  require(sigma >= 0.0, "make_gaussian_task: sigma must be non-negative");
  GaussianTask task;
  task.k = gt.k;
  task.gt_partition = gt;
  task.sigma = sigma;
  task.psi_gt.assign(gt.k, 0.0);
  task.theta_gt.assign(gt.k, 0.0);
  for (int c = 0; c < gt.cluster_count(); ++c) {
    task.psi_gt[c] = cluster_values[c];
    for (int idx : gt.clusters[c]) task.theta_gt[idx] = cluster_values[c];
  }
  return task;
}

SampleSet gen_gaussian(const GaussianTask& task, int n, Rng& rng) {
  require(n >= 1, "gen_gaussian: n must be >= 1");
  Matrix samples(n, task.k);
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < task.k; ++j)
      samples(s, j) = rng.normal(task.theta_gt[j], task.sigma);
  return SampleSet{std::move(samples)};
}

MeanEstimate mle_shared_mean(const SharingScheme& scheme, const SampleSet& data) {
  require(scheme.k == data.k(), "mle_shared_mean: dimension mismatch");
  MeanEstimate est;
  est.scheme = scheme;
  est.theta_hat.assign(scheme.k, 0.0);
  est.psi_hat.assign(scheme.k, 0.0);
  for (int i = 0; i < scheme.k; ++i) {
    // Column of the (single) one in row i.
    for (int col = 0; col < scheme.k; ++col) {
      if (scheme.assignment(i, col) != 1.0) continue;
      // Cluster = support of that column.
      std::vector<int> cluster;
      for (int r = 0; r < scheme.k; ++r)
        if (scheme.assignment(r, col) == 1.0) cluster.push_back(r);
      const double m = cluster_mean(data.samples, cluster);
      est.theta_hat[i] = m;
      est.psi_hat[col] = m;
      break;
    }
  }
  return est;
}

double validation_loss(const std::vector<double>& theta_hat, const SampleSet& val) {
  require(static_cast<int>(theta_hat.size()) == val.k(),
          "validation_loss: dimension mismatch");
  double loss = 0.0;
  for (int s = 0; s < val.n(); ++s) {
    for (int j = 0; j < val.k(); ++j) {
      const double d = theta_hat[j] - val.samples(s, j);
      loss += d * d;
    }
  }
  return loss;
}

double mse_closed_form(const SharingScheme& scheme, const std::vector<double>& theta_gt,
                       double sigma, int n) {
  require(n >= 1, "mse_closed_form: n must be >= 1");
  require(static_cast<int>(theta_gt.size()) == scheme.k,
          "mse_closed_form: dimension mismatch");
  const Partition p = partition_from_scheme(scheme);
  // (A Abar^T theta)[i] is the mean of theta over i's cluster.
  double bias_sq = 0.0;
  for (const auto& cluster : p.clusters) {
    double mean = 0.0;
    for (int idx : cluster) mean += theta_gt[idx];
    mean /= static_cast<double>(cluster.size());
    for (int idx : cluster) {
      const double d = mean - theta_gt[idx];
      bias_sq += d * d;
    }
  }
  return bias_sq + p.cluster_count() * sigma * sigma / n;
}

McMse mc_mse(const SharingScheme& scheme, const GaussianTask& task, int n, int runs,
             Rng& rng) {
  require(runs >= 2, "mc_mse: runs must be >= 2");
  const std::uint64_t base = rng.next_u64();
  std::vector<double> errors(runs);
  for (int r = 0; r < runs; ++r) {
    Rng run_rng = derive_rng(base, static_cast<std::uint64_t>(r));
    const SampleSet data = gen_gaussian(task, n, run_rng);
    const MeanEstimate est = mle_shared_mean(scheme, data);
    errors[r] = norm_sq(vec_sub(est.theta_hat, task.theta_gt));
  }
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= runs;
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  var /= (runs - 1);
  return McMse{mean, std::sqrt(var / runs)};
}

double claim2_bound(int rank_gt, double sigma, int n_total, double r, double alpha) {
  require(rank_gt >= 1, "claim2_bound: rank_gt must be >= 1");
  require(n_total >= 1, "claim2_bound: n_total must be >= 1");
  require(r > 0.0 && r < 1.0, "claim2_bound: r must lie in (0,1)");
  require(alpha > 0.0 && alpha < 1.0, "claim2_bound: alpha must lie in (0,1)");
  const double sharing = (1.0 - r) / (r * n_total) * (rank_gt - 1);
  const double confidence = -40.0 * std::log(alpha) / ((1.0 - r) * n_total);
  return sigma * sigma * (sharing + confidence);
}

void check_claim2_alpha(double alpha, int k) {
  require(alpha > 0.0 && alpha < std::exp(-k / 10.0),
          "claim2_bound: alpha must be below exp(-K/10)");
}

Chi2Check chi2_tail_check(int k, double t, int samples, Rng& rng) {
  require(t >= 1.0, "chi2_tail_check: t must be >= 1");
  require(samples >= 10000, "chi2_tail_check: samples must be >= 1e4");
  const double threshold = 2.0 * t * k;
  long hits = 0;
  for (int s = 0; s < samples; ++s) {
    double u = 0.0;
    for (int j = 0; j < k; ++j) {
      const double z = rng.normal(0.0, 1.0);
      u += z * z;
    }
    if (u >= threshold) ++hits;
  }
  return Chi2Check{static_cast<double>(hits) / samples, std::exp(-t * k / 10.0)};
}

}  // namespace eqdisc

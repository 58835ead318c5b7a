#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "eqdisc/gaussian.hpp"
#include "eqdisc/partition.hpp"

using namespace eqdisc;

namespace {

Partition random_partition_rgs(int k, Rng& rng) {
  std::vector<int> labels(k, 0);
  int max_label = 0;
  for (int i = 1; i < k; ++i) {
    labels[i] = rng.uniform_int(0, max_label + 1);
    max_label = std::max(max_label, labels[i]);
  }
  return partition_from_rgs(labels);
}

GaussianTask random_task(int k, double sigma, Rng& rng) {
  const Partition p = random_partition_rgs(k, rng);
  std::vector<double> values(p.cluster_count());
  for (double& v : values) v = rng.uniform(-1.0, 1.0);
  return make_gaussian_task(p, values, sigma);
}

}  // namespace

TEST_CASE("gen_gaussian: sigma zero, determinism, sample means") {
  const GaussianTask task =
      make_gaussian_task(make_partition(3, {{0, 1}, {2}}), {1.5, -0.5}, 0.0);
  CHECK(task.theta_gt == std::vector<double>{1.5, 1.5, -0.5});
  Rng rng(1);
  const SampleSet s = gen_gaussian(task, 4, rng);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(s.samples(i, j) == task.theta_gt[j]);

  const GaussianTask noisy =
      make_gaussian_task(make_partition(3, {{0, 1}, {2}}), {1.5, -0.5}, 1.0);
  Rng r1(42), r2(42);
  const SampleSet a = gen_gaussian(noisy, 50, r1);
  const SampleSet b = gen_gaussian(noisy, 50, r2);
  CHECK(max_abs_diff(a.samples, b.samples) == 0.0);

  Rng r3(7);
  const int n = 100000;
  const SampleSet big = gen_gaussian(noisy, n, r3);
  for (int j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += big.samples(i, j);
    mean /= n;
    CHECK(std::fabs(mean - noisy.theta_gt[j]) <= 4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("mle_shared_mean examples") {
  // Identity scheme: per-coordinate sample means, exactly.
  const SharingScheme id = make_scheme(Matrix::identity(2));
  const SampleSet data{Matrix{{1.0, 10.0}, {3.0, 20.0}}};
  const MeanEstimate ident = mle_shared_mean(id, data);
  CHECK(ident.theta_hat == std::vector<double>{2.0, 15.0});

  // Full sharing with the single sample [1, 3].
  const SharingScheme full = scheme_from_partition(make_partition(2, {{0, 1}}));
  const MeanEstimate shared = mle_shared_mean(full, SampleSet{Matrix{{1.0, 3.0}}});
  CHECK(shared.theta_hat == std::vector<double>{2.0, 2.0});
  CHECK(shared.psi_hat == std::vector<double>{2.0, 0.0});

  // Clusters {{0,1},{2}} with the single sample [0, 2, 5].
  const SharingScheme mixed = scheme_from_partition(make_partition(3, {{0, 1}, {2}}));
  const MeanEstimate est = mle_shared_mean(mixed, SampleSet{Matrix{{0.0, 2.0, 5.0}}});
  CHECK(est.theta_hat == std::vector<double>{1.0, 1.0, 5.0});

  CHECK_THROWS(mle_shared_mean(id, SampleSet{Matrix(2, 3, 0.0)}));
}

TEST_CASE("mle_shared_mean: theta = A psi identity and cluster constancy") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = rng.uniform_int(1, 7);
    const GaussianTask task = random_task(k, 1.0, rng);
    const SampleSet data = gen_gaussian(task, rng.uniform_int(1, 20), rng);
    const SharingScheme scheme = scheme_from_partition(random_partition_rgs(k, rng));
    const MeanEstimate est = mle_shared_mean(scheme, data);
    const std::vector<double> reconstructed = matvec(scheme.assignment, est.psi_hat);
    for (int i = 0; i < k; ++i) CHECK(reconstructed[i] == est.theta_hat[i]);
    for (const auto& cluster : partition_from_scheme(scheme).clusters)
      for (int idx : cluster) CHECK(est.theta_hat[idx] == est.theta_hat[cluster[0]]);
  }
}

TEST_CASE("validation_loss examples and lower bound") {
  const SampleSet single{Matrix{{1.0, 2.0}}};
  CHECK(validation_loss({1.0, 2.0}, single) == 0.0);
  CHECK(validation_loss({0.0, 0.0}, SampleSet{Matrix{{1.0, 1.0}}}) == doctest::Approx(2.0));

  // Loss is minimized at the validation mean, and bounded below by the
  // squared distance to it.
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = rng.uniform_int(1, 5);
    const int n = rng.uniform_int(1, 10);
    Matrix samples(n, k);
    for (double& x : samples.data()) x = rng.normal(0.0, 2.0);
    const SampleSet val{samples};
    std::vector<double> mean(k, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) mean[j] += samples(i, j) / n;
    std::vector<double> theta(k);
    for (double& x : theta) x = rng.normal(0.0, 2.0);
    CHECK(validation_loss(theta, val) >= norm_sq(vec_sub(theta, mean)) - 1e-9);
    CHECK(validation_loss(theta, val) >= validation_loss(mean, val) - 1e-9);
  }
}

TEST_CASE("mse_closed_form examples") {
  // Identity scheme: K sigma^2 / n, bias identically zero.
  const SharingScheme id = make_scheme(Matrix::identity(4));
  CHECK(mse_closed_form(id, {0.3, -1.0, 2.0, 0.0}, 1.0, 100) == doctest::Approx(0.04));

  // Full sharing with constant means: sigma^2 / n.
  const SharingScheme full2 = scheme_from_partition(make_partition(2, {{0, 1}}));
  CHECK(mse_closed_form(full2, {0.7, 0.7}, 1.0, 50) == doctest::Approx(0.02));

  // Full sharing, theta_gt = [0, 2], sigma = 1, n = 100 -> 2.01.
  CHECK(mse_closed_form(full2, {0.0, 2.0}, 1.0, 100) == doctest::Approx(2.01));
}

TEST_CASE("refining schemes have zero bias") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = rng.uniform_int(2, 7);
    const GaussianTask task = random_task(k, 1.0, rng);
    // Refine the ground truth by splitting clusters.
    std::vector<std::vector<int>> refined;
    for (const auto& c : task.gt_partition.clusters) {
      if (c.size() == 1 || rng.uniform() < 0.5) {
        refined.push_back(c);
      } else {
        refined.push_back({c[0]});
        refined.push_back(std::vector<int>(c.begin() + 1, c.end()));
      }
    }
    const Partition rp = make_partition(k, refined);
    const SharingScheme rs = scheme_from_partition(rp);
    const double mse = mse_closed_form(rs, task.theta_gt, 1.0, 10);
    CHECK(mse == doctest::Approx(rp.cluster_count() / 10.0).epsilon(1e-12));
  }
}

TEST_CASE("mc_mse: zero noise, identity vs the unbiased-MSE value, closed-form agreement") {
  Rng rng(33);
  const GaussianTask clean =
      make_gaussian_task(make_partition(3, {{0, 1, 2}}), {0.4}, 0.0);
  const SharingScheme oracle = scheme_from_partition(clean.gt_partition);
  const McMse zero = mc_mse(oracle, clean, 5, 10, rng);
  CHECK(zero.mse == doctest::Approx(0.0));

  // Identity scheme, K=4, sigma=1, n=50: MSE = 4/50 = 0.08.
  Rng rng2(2025);
  const GaussianTask task4 = random_task(4, 1.0, rng2);
  const SharingScheme id = make_scheme(Matrix::identity(4));
  const McMse mc = mc_mse(id, task4, 50, 20000, rng2);
  CHECK(std::fabs(mc.mse - 0.08) <= 3.0 * mc.std_error);

  // Random schemes against the closed form (scaled-down version of the
  // acceptance check).
  Rng rng3(404);
  for (int trial = 0; trial < 5; ++trial) {
    const int k = rng3.uniform_int(2, 5);
    const GaussianTask task = random_task(k, 1.0, rng3);
    const SharingScheme scheme = scheme_from_partition(random_partition_rgs(k, rng3));
    const int n = rng3.uniform_int(5, 60);
    const McMse res = mc_mse(scheme, task, n, 5000, rng3);
    const double closed = mse_closed_form(scheme, task.theta_gt, 1.0, n);
    CHECK(std::fabs(res.mse - closed) <= 3.0 * res.std_error);
  }

  CHECK_THROWS(mc_mse(id, task4, 10, 1, rng3));
}

TEST_CASE("claim2_bound examples") {
  // rank 1: only the confidence term remains.
  const double only_conf = claim2_bound(1, 1.0, 100, 0.3, 0.1);
  CHECK(only_conf == doctest::Approx(-40.0 * std::log(0.1) / (0.7 * 100.0)));

  // Hand evaluation at rank 3, sigma 1, n 100, r 0.5, alpha e^-1:
  // (0.5 / 50) * 2 + 40 / 50 = 0.02 + 0.8 = 0.82.
  CHECK(claim2_bound(3, 1.0, 100, 0.5, std::exp(-1.0)) == doctest::Approx(0.82));

  CHECK_THROWS(claim2_bound(3, 1.0, 100, 0.0, 0.1));
  CHECK_THROWS(claim2_bound(3, 1.0, 100, 1.0, 0.1));
  CHECK_THROWS(claim2_bound(0, 1.0, 100, 0.5, 0.1));
  CHECK_NOTHROW(check_claim2_alpha(0.1, 20));
  CHECK_THROWS(check_claim2_alpha(0.5, 20));
}

TEST_CASE("claim2_bound trade-off curve dips once for rank >= 2") {
  for (int rank : {2, 4, 8}) {
    std::vector<double> values;
    for (int i = 1; i <= 99; ++i)
      values.push_back(claim2_bound(rank, 1.0, 100, i / 100.0, 0.05));
    // Differences change sign exactly once: decreasing then increasing.
    int sign_changes = 0;
    bool increasing = false;
    for (size_t i = 1; i < values.size(); ++i) {
      const bool up = values[i] > values[i - 1];
      if (i == 1) increasing = up;
      else if (up != increasing) {
        ++sign_changes;
        increasing = up;
      }
    }
    CHECK(sign_changes == 1);
    CHECK_FALSE(values[1] > values[0]);  // decreasing at the left edge
    CHECK(values.back() > values[values.size() - 2]);
  }
}

TEST_CASE("chi2_tail_check: formula value and Monte-Carlo bound") {
  Rng rng(606);
  const Chi2Check c1 = chi2_tail_check(5, 1.0, 100000, rng);
  CHECK(c1.bound == doctest::Approx(std::exp(-0.5)));
  CHECK(c1.empirical <= c1.bound);

  const Chi2Check c2 = chi2_tail_check(10, 2.0, 100000, rng);
  CHECK(c2.bound == doctest::Approx(std::exp(-2.0)));
  CHECK(c2.empirical <= c2.bound);

  const Chi2Check c3 = chi2_tail_check(10, 1.0, 10000, rng);
  CHECK(c3.bound == doctest::Approx(std::exp(-1.0)));

  CHECK_THROWS(chi2_tail_check(5, 0.5, 100000, rng));
  CHECK_THROWS(chi2_tail_check(5, 1.0, 100, rng));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "eqdisc/numerics.hpp"
#include "eqdisc/partition.hpp"

using namespace eqdisc;

namespace {

// Independent oracle for partition distance: try every pairing of the padded
// cluster lists and keep the best total overlap.
int brute_force_pd(const Partition& a, const Partition& b) {
  const int n = std::max(a.cluster_count(), b.cluster_count());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int total = 0;
    for (int i = 0; i < a.cluster_count(); ++i) {
      const int j = perm[i];
      if (j >= b.cluster_count()) continue;
      for (int x : a.clusters[i])
        for (int y : b.clusters[j])
          if (x == y) ++total;
    }
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return a.k - best;
}

// Exhaustive assignment oracle.
double brute_force_assignment(const Matrix& w) {
  const int n = w.rows();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w(i, perm[i]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Partition random_partition_rgs(int k, Rng& rng) {
  std::vector<int> labels(k, 0);
  int max_label = 0;
  for (int i = 1; i < k; ++i) {
    labels[i] = rng.uniform_int(0, max_label + 1);
    max_label = std::max(max_label, labels[i]);
  }
  return partition_from_rgs(labels);
}

const std::vector<long> kBell{1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975};

}  // namespace

TEST_CASE("partition validation") {
  CHECK_THROWS(make_partition(3, {{0, 1}}));          // not covering
  CHECK_THROWS(make_partition(3, {{0, 1}, {1, 2}}));  // overlap
  CHECK_THROWS(make_partition(3, {{0, 1, 2}, {}}));   // empty cluster
  const Partition p = make_partition(4, {{2, 3}, {1, 0}});
  CHECK(p.clusters[0] == std::vector<int>{0, 1});  // canonical order
  CHECK(p.clusters[1] == std::vector<int>{2, 3});
}

TEST_CASE("partition_from_scheme examples") {
  const SharingScheme id = make_scheme(Matrix::identity(3));
  CHECK(partition_from_scheme(id) == make_partition(3, {{0}, {1}, {2}}));

  const SharingScheme full = make_scheme(Matrix{{1, 0, 0}, {1, 0, 0}, {1, 0, 0}});
  CHECK(partition_from_scheme(full) == make_partition(3, {{0, 1, 2}}));

  const SharingScheme mixed = make_scheme(Matrix{{1, 0, 0}, {0, 1, 0}, {1, 0, 0}});
  CHECK(partition_from_scheme(mixed) == make_partition(3, {{0, 2}, {1}}));

  CHECK_THROWS(make_scheme(Matrix{{1.0, 1.0}, {0.0, 1.0}}));
  CHECK_THROWS(make_scheme(Matrix{{0.5, 0.5}, {0.0, 1.0}}));
}

TEST_CASE("scheme_from_partition examples and round trip") {
  CHECK(max_abs_diff(scheme_from_partition(make_partition(2, {{0}, {1}})).assignment,
                     Matrix::identity(2)) == 0.0);
  const SharingScheme full = scheme_from_partition(make_partition(2, {{0, 1}}));
  CHECK(full.assignment(0, 0) == 1.0);
  CHECK(full.assignment(1, 0) == 1.0);

  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Partition p = random_partition_rgs(8, rng);
    CHECK(partition_from_scheme(scheme_from_partition(p)) == p);
  }
}

TEST_CASE("enumerate_partitions yields Bell(K) distinct canonical partitions") {
  for (int k : {1, 3, 5}) {
    long count = 0;
    enumerate_partitions(k, [&](const Partition&) { ++count; });
    CHECK(count == kBell[k]);
  }
  for (int k = 1; k <= 10; ++k) {
    std::set<std::vector<int>> seen;
    enumerate_partitions(k, [&](const Partition& p) { seen.insert(to_rgs(p)); });
    CHECK(static_cast<long>(seen.size()) == kBell[k]);
  }
  CHECK_THROWS(enumerate_partitions(13, [](const Partition&) {}));
}

TEST_CASE("max_assignment examples and exhaustive oracle") {
  const AssignmentResult id = max_assignment(Matrix::identity(4));
  CHECK(id.total == doctest::Approx(4.0));

  const AssignmentResult anti = max_assignment(Matrix{{1, 2}, {3, 4}});
  CHECK(anti.total == doctest::Approx(5.0));

  CHECK_THROWS(max_assignment(Matrix{{-1.0}}));
  CHECK_THROWS(max_assignment(Matrix(2, 3, 1.0)));

  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.uniform_int(1, 7);
    Matrix w(n, n);
    for (double& x : w.data()) x = rng.uniform(0.0, 10.0);
    const AssignmentResult res = max_assignment(w);
    CHECK(res.total == doctest::Approx(brute_force_assignment(w)).epsilon(1e-9));
    // Pairing must be a bijection achieving the reported total.
    std::set<int> cols(res.row_to_col.begin(), res.row_to_col.end());
    CHECK(static_cast<int>(cols.size()) == n);
    double recompute = 0.0;
    for (int i = 0; i < n; ++i) recompute += w(i, res.row_to_col[i]);
    CHECK(recompute == doctest::Approx(res.total));
  }
}

TEST_CASE("partition_distance examples") {
  const Partition p1 = make_partition(3, {{0, 1}, {2}});
  const Partition singletons = make_partition(3, {{0}, {1}, {2}});
  CHECK(partition_distance(p1, p1) == 0);
  CHECK(partition_distance(p1, singletons) == 1);

  const Partition whole = make_partition(4, {{0, 1, 2, 3}});
  const Partition halves = make_partition(4, {{0, 1}, {2, 3}});
  CHECK(partition_distance(whole, halves) == 2);

  CHECK_THROWS(partition_distance(p1, whole));
}

TEST_CASE("partition_distance equals the brute-force pairing oracle") {
  Rng rng(31337);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = rng.uniform_int(1, 7);
    const Partition a = random_partition_rgs(k, rng);
    const Partition b = random_partition_rgs(k, rng);
    CHECK(partition_distance(a, b) == brute_force_pd(a, b));
  }
}

TEST_CASE("partition_distance is a metric and respects the stated bounds") {
  Rng rng(555);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = rng.uniform_int(2, 8);
    const Partition a = random_partition_rgs(k, rng);
    const Partition b = random_partition_rgs(k, rng);
    const Partition c = random_partition_rgs(k, rng);
    const int ab = partition_distance(a, b);
    const int ba = partition_distance(b, a);
    CHECK(ab == ba);
    CHECK(ab >= 0);
    CHECK((ab == 0) == (a == b));
    CHECK(partition_distance(a, c) <= ab + partition_distance(b, c));
    // Upper bounds: K - largest intersection, and K - 1.
    int largest = 0;
    for (const auto& ca : a.clusters)
      for (const auto& cb : b.clusters) {
        int common = 0;
        for (int x : ca)
          for (int y : cb)
            if (x == y) ++common;
        largest = std::max(largest, common);
      }
    CHECK(ab <= k - largest);
    CHECK(ab <= k - 1);
  }
}

TEST_CASE("group_member examples") {
  const Partition p = make_partition(3, {{0, 1}, {2}});
  CHECK(group_member(make_permutation({0, 1, 2}), p));
  CHECK(group_member(make_permutation({1, 0, 2}), p));
  CHECK_FALSE(group_member(make_permutation({2, 1, 0}), p));
  CHECK_THROWS(group_member(make_permutation({1, 0}), p));
  CHECK_THROWS(make_permutation({0, 0, 1}));
}

TEST_CASE("symmetric_difference_size examples") {
  const Partition full2 = make_partition(2, {{0, 1}});
  const Partition sing2 = make_partition(2, {{0}, {1}});
  CHECK(symmetric_difference_size(full2, full2) == 0);
  CHECK(symmetric_difference_size(full2, sing2) == 1);

  const Partition full3 = make_partition(3, {{0, 1, 2}});
  const Partition sing3 = make_partition(3, {{0}, {1}, {2}});
  CHECK(symmetric_difference_size(full3, sing3) == 5);

  CHECK_THROWS(symmetric_difference_size(make_partition(7, {{0, 1, 2, 3, 4, 5, 6}}),
                                         make_partition(7, {{0, 1, 2, 3, 4, 5, 6}})));
}

TEST_CASE("claim-3 sandwich holds for every partition pair up to K=4") {
  const Partition full2 = make_partition(2, {{0, 1}});
  CHECK(verify_claim3(full2, full2));
  CHECK(verify_claim3(full2, make_partition(2, {{0}, {1}})));

  std::vector<Partition> all;
  enumerate_partitions(4, [&](const Partition& p) { all.push_back(p); });
  CHECK(all.size() == 15);
  int pairs = 0;
  for (size_t i = 0; i < all.size(); ++i)
    for (size_t j = i + 1; j < all.size(); ++j) {
      ++pairs;
      CHECK(verify_claim3(all[i], all[j]));
    }
  CHECK(pairs == 105);
}

TEST_CASE("PD zero implies identical equivariance groups (K <= 6)") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = rng.uniform_int(2, 6);
    const Partition a = random_partition_rgs(k, rng);
    const SharingScheme s = scheme_from_partition(a);
    const Partition b = partition_from_scheme(s);
    CHECK(partition_distance(a, b) == 0);
    CHECK(symmetric_difference_size(a, b) == 0);
  }
}

TEST_CASE("partition text format round-trips and rejects malformed input") {
  const Partition p = make_partition(5, {{0, 2}, {1, 4}, {3}});
  const std::string text = write_partition_text(p);
  CHECK(text == "K 5\n0 1 0 2 1\n");
  CHECK(parse_partition_text(text) == p);

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Partition q = random_partition_rgs(rng.uniform_int(1, 9), rng);
    CHECK(parse_partition_text(write_partition_text(q)) == q);
  }

  CHECK_THROWS(parse_partition_text("K 3\n0 2 1\n"));  // label 2 skips 1
  CHECK_THROWS(parse_partition_text("K 3\n0 1\n"));    // wrong count
  CHECK_THROWS(parse_partition_text("Q 3\n0 1 2\n"));  // bad header
  CHECK_THROWS(parse_partition_text("K 3\n0 x 1\n"));  // non-integer
  CHECK_THROWS(parse_partition_text(""));
}

#include "eqdisc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace eqdisc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

long factorial(int n) {
  long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

Partition make_partition(int k, std::vector<std::vector<int>> clusters) {
  require(k >= 1, "Partition: k must be >= 1");
  std::vector<char> seen(k, 0);
  int covered = 0;
  for (auto& c : clusters) {
    require(!c.empty(), "Partition: empty cluster");
    std::sort(c.begin(), c.end());
    for (int idx : c) {
      require(idx >= 0 && idx < k, "Partition: index out of range");
      require(!seen[idx], "Partition: clusters are not disjoint");
      seen[idx] = 1;
      ++covered;
    }
  }
  require(covered == k, "Partition: clusters do not cover all indices");
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return Partition{k, std::move(clusters)};
}

SharingScheme make_scheme(Matrix assignment) {
  require(assignment.rows() == assignment.cols() && assignment.rows() >= 1,
          "SharingScheme: assignment must be square and non-empty");
  const int k = assignment.rows();
  for (int i = 0; i < k; ++i) {
    int ones = 0;
    for (int j = 0; j < k; ++j) {
      const double a = assignment(i, j);
      require(a == 0.0 || a == 1.0, "SharingScheme: non-binary entry");
      if (a == 1.0) ++ones;
    }
    require(ones == 1, "SharingScheme: row sum must be exactly 1");
  }
  return SharingScheme{k, std::move(assignment)};
}

PermutationAction make_permutation(std::vector<int> mapping) {
  const int k = static_cast<int>(mapping.size());
  require(k >= 1, "PermutationAction: empty mapping");
  std::vector<char> seen(k, 0);
  for (int v : mapping) {
    require(v >= 0 && v < k, "PermutationAction: value out of range");
    require(!seen[v], "PermutationAction: mapping is not a bijection");
    seen[v] = 1;
  }
  return PermutationAction{std::move(mapping)};
}

Partition partition_from_scheme(const SharingScheme& scheme) {
  const int k = scheme.k;
  std::vector<std::vector<int>> by_column(k);
  for (int i = 0; i < k; ++i) {
    int col = -1;
    int ones = 0;
    for (int j = 0; j < k; ++j) {
      const double a = scheme.assignment(i, j);
      require(a == 0.0 || a == 1.0, "partition_from_scheme: non-binary entry");
      if (a == 1.0) {
        col = j;
        ++ones;
      }
    }
    require(ones == 1, "partition_from_scheme: row sum must be exactly 1");
    by_column[col].push_back(i);
  }
  std::vector<std::vector<int>> clusters;
  for (auto& c : by_column)
    if (!c.empty()) clusters.push_back(std::move(c));
  return make_partition(k, std::move(clusters));
}

SharingScheme scheme_from_partition(const Partition& p) {
  Matrix a(p.k, p.k, 0.0);
  // Canonical order already is first-appearance order over element index.
  for (int label = 0; label < p.cluster_count(); ++label)
    for (int idx : p.clusters[label]) a(idx, label) = 1.0;
  return SharingScheme{p.k, std::move(a)};
}

std::vector<int> to_rgs(const Partition& p) {
  std::vector<int> labels(p.k, -1);
  for (int label = 0; label < p.cluster_count(); ++label)
    for (int idx : p.clusters[label]) labels[idx] = label;
  return labels;
}

Partition partition_from_rgs(const std::vector<int>& labels) {
  const int k = static_cast<int>(labels.size());
  require(k >= 1, "partition_from_rgs: empty label string");
  int max_label = -1;
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < k; ++i) {
    const int l = labels[i];
    require(l >= 0 && l <= max_label + 1,
            "partition_from_rgs: label " + std::to_string(l) + " at position " +
                std::to_string(i) + " skips a value");
    if (l == max_label + 1) {
      clusters.emplace_back();
      ++max_label;
    }
    clusters[l].push_back(i);
  }
  return make_partition(k, std::move(clusters));
}

void enumerate_partitions(int k, const std::function<void(const Partition&)>& fn) {
  require(k >= 1, "enumerate_partitions: k must be >= 1");
  if (k > 12)
    throw std::invalid_argument(
        "enumerate_partitions: k > 12 exceeds the Bell-number capacity guard");
  std::vector<int> labels(k, 0);
  std::vector<int> prefix_max(k, 0);  // max label over positions [0, i]
  while (true) {
    fn(partition_from_rgs(labels));
    // Advance to the next restricted growth string in lexicographic order.
    int pos = k - 1;
    while (pos > 0) {
      if (labels[pos] <= prefix_max[pos - 1]) break;
      --pos;
    }
    if (pos == 0) return;
    labels[pos] += 1;
    prefix_max[pos] = std::max(prefix_max[pos - 1], labels[pos]);
    for (int i = pos + 1; i < k; ++i) {
      labels[i] = 0;
      prefix_max[i] = prefix_max[i - 1];
    }
  }
}

AssignmentResult max_assignment(const Matrix& weights) {
  require(weights.rows() == weights.cols(), "max_assignment: matrix must be square");
  const int n = weights.rows();
  require(n >= 1, "max_assignment: empty matrix");
  for (double w : weights.data())
    require(w >= 0.0, "max_assignment: negative weight");

  // Kuhn-Munkres with potentials on the negated weights (minimization form).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weights(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult out;
  out.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) out.row_to_col[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) out.total += weights(i, out.row_to_col[i]);
  return out;
}

int partition_distance(const Partition& a, const Partition& b) {
  require(a.k == b.k, "partition_distance: partitions have different K");
  const int n = std::max(a.cluster_count(), b.cluster_count());
  // Intersection sizes, padded with empty clusters to a square matrix.
  Matrix weights(n, n, 0.0);
  for (int i = 0; i < a.cluster_count(); ++i) {
    for (int j = 0; j < b.cluster_count(); ++j) {
      int common = 0;
      size_t x = 0, y = 0;
      const auto& ca = a.clusters[i];
      const auto& cb = b.clusters[j];
      while (x < ca.size() && y < cb.size()) {
        if (ca[x] < cb[y]) ++x;
        else if (ca[x] > cb[y]) ++y;
        else { ++common; ++x; ++y; }
      }
      weights(i, j) = static_cast<double>(common);
    }
  }
  const AssignmentResult best = max_assignment(weights);
  return a.k - static_cast<int>(std::llround(best.total));
}

namespace {

bool moved_within_one_cluster(const std::vector<int>& perm, const Partition& p) {
  std::vector<int> moved;
  for (int i = 0; i < static_cast<int>(perm.size()); ++i)
    if (perm[i] != i) moved.push_back(i);
  if (moved.empty()) return true;  // identity is in every group
  for (const auto& c : p.clusters) {
    if (std::includes(c.begin(), c.end(), moved.begin(), moved.end())) return true;
  }
  return false;
}

}  // namespace

bool group_member(const PermutationAction& pi, const Partition& p) {
  require(static_cast<int>(pi.mapping.size()) == p.k,
          "group_member: permutation and partition have different K");
  return moved_within_one_cluster(pi.mapping, p);
}

long symmetric_difference_size(const Partition& a, const Partition& b) {
  require(a.k == b.k, "symmetric_difference_size: partitions have different K");
  if (a.k > 6)
    throw std::invalid_argument(
        "symmetric_difference_size: k > 6 exceeds the K! capacity guard");
  std::vector<int> perm(a.k);
  std::iota(perm.begin(), perm.end(), 0);
  long count = 0;
  do {
    const bool in_a = moved_within_one_cluster(perm, a);
    const bool in_b = moved_within_one_cluster(perm, b);
    if (in_a != in_b) ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return count;
}

bool verify_claim3(const Partition& a, const Partition& b) {
  const long pd = partition_distance(a, b);
  const long sd = symmetric_difference_size(a, b);
  const long kappa = factorial(a.k) - 1;
  return pd <= sd && sd <= kappa * pd;
}

std::string write_partition_text(const Partition& p) {
  std::ostringstream os;
  os << "K " << p.k << "\n";
  const std::vector<int> labels = to_rgs(p);
  for (int i = 0; i < p.k; ++i) {
    if (i > 0) os << ' ';
    os << labels[i];
  }
  os << "\n";
  return os.str();
}

namespace {

[[noreturn]] void parse_fail(int line, int column, const std::string& what) {
  throw std::invalid_argument("partition parse error at line " + std::to_string(line) +
                              ", column " + std::to_string(column) + ": " + what);
}

}  // namespace

Partition parse_partition_text(const std::string& text) {
  std::istringstream is(text);
  std::string line1;
  if (!std::getline(is, line1)) parse_fail(1, 1, "missing header line");
  std::istringstream h(line1);
  std::string tag;
  int k = 0;
  if (!(h >> tag) || tag != "K") parse_fail(1, 1, "expected literal 'K'");
  if (!(h >> k) || k < 1) parse_fail(1, 3, "expected a positive integer K");
  std::string rest;
  if (h >> rest) parse_fail(1, static_cast<int>(line1.size()), "trailing tokens after K");

  std::string line2;
  if (!std::getline(is, line2)) parse_fail(2, 1, "missing label line");
  std::istringstream l(line2);
  std::vector<int> labels;
  int value = 0;
  int column = 1;
  while (l >> value) {
    labels.push_back(value);
    column = static_cast<int>(l.tellg()) <= 0 ? static_cast<int>(line2.size())
                                              : static_cast<int>(l.tellg());
  }
  if (!l.eof()) parse_fail(2, column, "non-integer label");
  if (static_cast<int>(labels.size()) != k)
    parse_fail(2, column, "expected " + std::to_string(k) + " labels, found " +
                              std::to_string(labels.size()));
  int max_label = -1;
  for (int i = 0; i < k; ++i) {
    if (labels[i] < 0 || labels[i] > max_label + 1)
      parse_fail(2, i + 1, "label " + std::to_string(labels[i]) +
                               " violates restricted-growth form");
    max_label = std::max(max_label, labels[i]);
  }
  return partition_from_rgs(labels);
}

}  // namespace eqdisc

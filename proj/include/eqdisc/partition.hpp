// partition.hpp - set partitions of parameter indices, their assignment-matrix
// form, partition enumeration, partition distance, and the equivariance-group
// symmetric-difference oracle.
//
// Canonical form everywhere: clusters sorted by their minimum element, indices
// sorted within each cluster. Sharing schemes assign cluster l (in first-
// appearance order over element index) to column l, so scheme <-> partition
// round-trips exactly.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eqdisc/numerics.hpp"

namespace eqdisc {

struct Partition {
  int k = 0;                                // number of elements
  std::vector<std::vector<int>> clusters;   // canonical order

  int cluster_count() const { return static_cast<int>(clusters.size()); }
  bool operator==(const Partition& other) const = default;
};

// Validates disjointness/coverage/non-emptiness and canonicalizes.
Partition make_partition(int k, std::vector<std::vector<int>> clusters);

// Binary row-stochastic K x K assignment matrix; exactly one 1 per row.
struct SharingScheme {
  int k = 0;
  Matrix assignment;
};

// Validates the row-stochastic integrality invariant.
SharingScheme make_scheme(Matrix assignment);

struct PermutationAction {
  std::vector<int> mapping;  // bijection on {0, ..., K-1}
};

PermutationAction make_permutation(std::vector<int> mapping);

// Clusters are the non-empty column supports of the assignment matrix.
Partition partition_from_scheme(const SharingScheme& scheme);
SharingScheme scheme_from_partition(const Partition& p);

// Restricted-growth-string labels (label of element 0 is 0, each new label is
// the smallest unused integer) and the canonical partition they encode.
std::vector<int> to_rgs(const Partition& p);
Partition partition_from_rgs(const std::vector<int>& labels);

// Yields every set partition of {0,...,k-1} exactly once, in lexicographic
// restricted-growth-string order. k <= 12 (Bell-number capacity guard).
void enumerate_partitions(int k, const std::function<void(const Partition&)>& fn);

// Maximum-weight assignment over a square non-negative matrix, O(n^3).
struct AssignmentResult {
  double total = 0.0;
  std::vector<int> row_to_col;
};
AssignmentResult max_assignment(const Matrix& weights);

// Number of elements that must move between clusters to make the partitions
// identical: K minus the maximum-weight matching of cluster intersections.
int partition_distance(const Partition& a, const Partition& b);

// True iff pi is the identity or every index it moves lies in one cluster.
bool group_member(const PermutationAction& pi, const Partition& p);

// |G1 xor G2| where G = union over clusters of all within-cluster
// permutations. Enumerates all K! permutations; K <= 6.
long symmetric_difference_size(const Partition& a, const Partition& b);

// PD <= |G1 xor G2| <= (K! - 1) * PD.
bool verify_claim3(const Partition& a, const Partition& b);

// Text format: line 1 "K <n>", line 2 the K RGS labels space-separated.
std::string write_partition_text(const Partition& p);
// Throws std::invalid_argument with line/column diagnostics on bad input.
Partition parse_partition_text(const std::string& text);

}  // namespace eqdisc

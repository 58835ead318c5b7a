// discovery.hpp - the bi-level sharing-scheme search: exact enumeration over
// partitions, and the relaxed gradient method on row-softmax logits with
// entropy and nuclear-norm penalties, argmax rounding, and full-data refit.
//
// Both routes share one task abstraction. The lower level is always solved in
// closed form: shared-mean averaging (or its pseudo-inverse generalization
// for relaxed schemes) for mean estimation, ordinary least squares for the
// linear regression tasks.

#pragma once

#include <vector>

#include "eqdisc/gaussian.hpp"
#include "eqdisc/numerics.hpp"
#include "eqdisc/partition.hpp"

namespace eqdisc {

enum class TaskKind { MeanEstimation, Regression };

// Train/val splits are disjoint; the full set is their concatenation (train
// rows first). Mean estimation leaves the x matrices empty; regression
// flattens the out_dim x in_dim weight matrix row-major into param_count
// parameters.
struct LinearSharedTask {
  TaskKind kind = TaskKind::MeanEstimation;
  Matrix x_train, y_train;
  Matrix x_val, y_val;
  Matrix x_full, y_full;
  int param_count = 0;
  int out_dim = 0;
  int in_dim = 0;
};

LinearSharedTask make_mean_task(const SampleSet& train, const SampleSet& val);
LinearSharedTask make_regression_task(const Matrix& x_train, const Matrix& y_train,
                                      const Matrix& x_val, const Matrix& y_val);

// psi* = A^+ (column means of train). Binary schemes take the exact
// per-cluster averaging path and agree with mle_shared_mean bit for bit.
std::vector<double> lower_solve_mean(const Matrix& a, const Matrix& train_samples);

// Two-step solver from the relaxed path: unconstrained least squares, then
// psi* = A^+ Flatten(G*).
std::vector<double> lower_solve_regression(const Matrix& a, const Matrix& x,
                                           const Matrix& y, int out_dim);

// Exact constrained minimizer of |pred(A psi) - Y|^2; the lower-level argmin
// used for binary schemes (enumeration and final refits).
std::vector<double> lower_solve_regression_direct(const Matrix& a, const Matrix& x,
                                                  const Matrix& y, int out_dim);

// Row-softmax logits; the optimization variable of the relaxed method.
struct RelaxedScheme {
  int k = 0;
  Matrix logits;
};

struct RelaxHyperparams {
  double learning_rate = 2e-2;
  double weight_decay = 1e-4;
  // Unweighted penalty terms by default, as the training loop's objective
  // spells them; flags scale them when a task needs it.
  double lambda_entropy = 1.0;
  double lambda_nuclear = 1.0;
  int max_epochs = 1000;
  int patience = 50;
  double minibatch_fraction = 1.0;
  double init_noise = 0.01;
  // Logits start at init_identity * I plus noise: the search begins at the
  // independent (no-sharing) model and the penalties must earn each merge.
  double init_identity = 2.0;
  // Spectral gate of the relaxed lower solve: directions of A with singular
  // value above the gate are solved exactly, below it the solve fades out
  // smoothly. Binary schemes (all singular values >= 1) always pass intact.
  double sigma_gate = 0.3;
};

// L(A psi*(A), batch) + lambda_e H(A) + lambda_n |A|_* with A = softmax(logits)
// and psi* from the task's (relaxed-path) lower solver on the train set.
double upper_objective(const RelaxedScheme& rs, const LinearSharedTask& task,
                       const std::vector<int>& batch_rows, const RelaxHyperparams& hp);

// Gradient of upper_objective with respect to the logits, differentiating
// through psi*(A) via the pseudo-inverse (Golub-Pereyra differential).
Matrix upper_gradient(const RelaxedScheme& rs, const LinearSharedTask& task,
                      const std::vector<int>& batch_rows, const RelaxHyperparams& hp);

std::vector<int> all_val_rows(const LinearSharedTask& task);

struct EpochRecord {
  int epoch = 0;
  double val_loss = 0.0;  // loss term on the full validation set
  double entropy = 0.0;   // H(A), unweighted
  double nuclear = 0.0;   // |A|_*, unweighted
};

struct DiscoveryResult {
  SharingScheme scheme;
  Partition partition;
  std::vector<double> psi_final;  // refit on the full dataset
  // Validation loss of the returned binary scheme with psi fit on the train
  // set only; comparable across the exact and relaxed routes.
  double val_loss = 0.0;
  std::vector<EpochRecord> history;
  int epochs_used = 0;
};

// Enumerates every partition (param_count <= 12), fits each on the train set,
// scores on the full validation set, refits the winner on everything. Ties
// break toward fewer clusters, then the lexicographically smaller restricted
// growth string.
DiscoveryResult discover_brute_force(const LinearSharedTask& task);

// Algorithm: init logits with Gaussian noise, loop { sample batch, solve the
// lower level analytically, one Adam step on the logits }, monitor the
// full-validation objective for convergence (patience epochs without a 1e-8
// improvement), round by row argmax, refit on the full dataset.
DiscoveryResult discover_relaxed(const LinearSharedTask& task, const RelaxHyperparams& hp,
                                 Rng& rng);

// One-hot per row at the row argmax; ties resolve to the lowest column index.
SharingScheme round_scheme(const Matrix& a_relaxed);

}  // namespace eqdisc

#include "eqdisc/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace eqdisc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  require(top.cols() == bottom.cols(), "stack_rows: column mismatch");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  for (int i = 0; i < top.rows(); ++i)
    for (int j = 0; j < top.cols(); ++j) out(i, j) = top(i, j);
  for (int i = 0; i < bottom.rows(); ++i)
    for (int j = 0; j < bottom.cols(); ++j) out(top.rows() + i, j) = bottom(i, j);
  return out;
}

// Exactly binary row-stochastic?
bool is_binary_scheme(const Matrix& a) {
  if (a.rows() != a.cols()) return false;
  for (int i = 0; i < a.rows(); ++i) {
    int ones = 0;
    for (int j = 0; j < a.cols(); ++j) {
      const double x = a(i, j);
      if (x == 1.0) ++ones;
      else if (x != 0.0) return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

std::vector<std::vector<int>> column_supports(const Matrix& a) {
  std::vector<std::vector<int>> sup(a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) == 1.0) sup[j].push_back(i);
  return sup;
}

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out[j] += m(i, j);
  for (double& x : out) x /= m.rows();
  return out;
}

std::vector<double> flatten(const Matrix& m) {
  return m.data();
}

// Unconstrained train solution the relaxed path projects from: column means
// for mean estimation, Flatten(G*) with G* = argmin |X G^T - Y|_F for
// regression.
std::vector<double> unconstrained_target(const LinearSharedTask& task) {
  if (task.kind == TaskKind::MeanEstimation) return column_means(task.y_train);
  const Matrix w = solve_least_squares(task.x_train, task.y_train);  // in x out
  return flatten(transpose(w));                                      // out x in, row-major
}

// ---------------------------------------------------------------------------
// Loss terms (sum of squared errors over the chosen validation rows)
// ---------------------------------------------------------------------------

double loss_on_rows(const LinearSharedTask& task, const std::vector<double>& theta,
                    const std::vector<int>& rows) {
  double loss = 0.0;
  if (task.kind == TaskKind::MeanEstimation) {
    for (int r : rows)
      for (int j = 0; j < task.y_val.cols(); ++j) {
        const double d = theta[j] - task.y_val(r, j);
        loss += d * d;
      }
    return loss;
  }
  for (int r : rows) {
    for (int m = 0; m < task.out_dim; ++m) {
      double pred = 0.0;
      for (int n = 0; n < task.in_dim; ++n)
        pred += theta[m * task.in_dim + n] * task.x_val(r, n);
      const double d = pred - task.y_val(r, m);
      loss += d * d;
    }
  }
  return loss;
}

std::vector<double> loss_grad_theta(const LinearSharedTask& task,
                                    const std::vector<double>& theta,
                                    const std::vector<int>& rows) {
  std::vector<double> g(task.param_count, 0.0);
  if (task.kind == TaskKind::MeanEstimation) {
    for (int r : rows)
      for (int j = 0; j < task.y_val.cols(); ++j)
        g[j] += 2.0 * (theta[j] - task.y_val(r, j));
    return g;
  }
  for (int r : rows) {
    for (int m = 0; m < task.out_dim; ++m) {
      double pred = 0.0;
      for (int n = 0; n < task.in_dim; ++n)
        pred += theta[m * task.in_dim + n] * task.x_val(r, n);
      const double resid = 2.0 * (pred - task.y_val(r, m));
      for (int n = 0; n < task.in_dim; ++n)
        g[m * task.in_dim + n] += resid * task.x_val(r, n);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Exact binary fits (lower-level argmin for integral schemes)
// ---------------------------------------------------------------------------

std::vector<double> binary_fit(const LinearSharedTask& task, const Matrix& assignment,
                               const Matrix& x, const Matrix& y) {
  if (task.kind == TaskKind::MeanEstimation) {
    std::vector<double> psi(assignment.cols(), 0.0);
    const auto supports = column_supports(assignment);
    for (int j = 0; j < assignment.cols(); ++j)
      if (!supports[j].empty()) psi[j] = cluster_mean(y, supports[j]);
    return psi;
  }
  return lower_solve_regression_direct(assignment, x, y, task.out_dim);
}

std::vector<double> theta_from_binary(const Matrix& assignment,
                                      const std::vector<double>& psi) {
  std::vector<double> theta(assignment.rows(), 0.0);
  for (int i = 0; i < assignment.rows(); ++i)
    for (int j = 0; j < assignment.cols(); ++j)
      if (assignment(i, j) == 1.0) theta[i] = psi[j];
  return theta;
}

// ---------------------------------------------------------------------------
// Relaxed-path evaluation: one SVD feeds the lower solve, both penalties,
// and the hypergradient.
//
// The relaxed lower solve uses a smooth spectral gate instead of the hard
// pseudo-inverse cutoff: theta = sum_i h(sigma_i^2) u_i u_i^T target with
// h == 1 above the gate. Binary schemes (all singular values >= 1) are
// untouched, so every integral-scheme identity still holds exactly, while a
// row merge in the relaxed iterate now shows up in the validation loss as
// its singular value descends through the gate, instead of being hidden by
// an exact inverse until rounding. theta is h(A A^T) target, a smooth matrix
// function, so the gradient needs no spectral-gap guards.
// ---------------------------------------------------------------------------

// h(lambda) on eigenvalues of A A^T: smoothstep on lambda / gate^2, exactly
// 1 above the gate.
double gate_h(double lambda, double gate) {
  const double t = lambda / (gate * gate);
  if (t >= 1.0) return 1.0;
  if (t <= 0.0) return 0.0;
  return t * t * (3.0 - 2.0 * t);
}

double gate_h_prime(double lambda, double gate) {
  const double g2 = gate * gate;
  const double t = lambda / g2;
  if (t >= 1.0 || t <= 0.0) return 0.0;
  return (6.0 * t - 6.0 * t * t) / g2;
}

// Divided difference (h(a) - h(b)) / (a - b), continuous at a == b.
double gate_h_slope(double a, double b, double gate) {
  if (std::fabs(a - b) <= 1e-12 * std::max({1.0, a, b}))
    return gate_h_prime(0.5 * (a + b), gate);
  return (gate_h(a, gate) - gate_h(b, gate)) / (a - b);
}

struct UpperEval {
  double objective = 0.0;
  double loss_term = 0.0;
  double entropy_raw = 0.0;
  double nuclear_raw = 0.0;
  Matrix soft_a;
  Matrix grad_logits;
};

UpperEval upper_eval(const Matrix& logits, const LinearSharedTask& task,
                     const std::vector<double>& target,
                     const std::vector<int>& grad_rows,
                     const std::vector<int>& loss_rows, const RelaxHyperparams& hp,
                     bool want_grad, const Matrix* v_warm, Matrix* v_out) {
  const int k = logits.rows();
  const Matrix a = row_softmax(logits);
  const Svd dec = svd(a, v_warm);
  if (v_out != nullptr) *v_out = dec.v;

  std::vector<double> lambda(k), trans(k);
  for (int i = 0; i < k; ++i) {
    lambda[i] = dec.sigma[i] * dec.sigma[i];
    trans[i] = gate_h(lambda[i], hp.sigma_gate);
  }

  // theta = sum_i h(lambda_i) u_i (u_i^T target); psi carries the matching
  // V-side coefficients so theta = A psi holds.
  const std::vector<double> ut_target = matvec_transposed(dec.u, target);
  std::vector<double> theta(k, 0.0), psi(k, 0.0);
  for (int c = 0; c < k; ++c) {
    if (trans[c] == 0.0) continue;
    const double coeff = trans[c] * ut_target[c];
    for (int i = 0; i < k; ++i) theta[i] += dec.u(i, c) * coeff;
    const double psi_coeff = dec.sigma[c] > 0.0 ? coeff / dec.sigma[c] : 0.0;
    for (int i = 0; i < k; ++i) psi[i] += dec.v(i, c) * psi_coeff;
  }

  UpperEval ev;
  ev.soft_a = a;
  ev.loss_term = loss_on_rows(task, theta, loss_rows);
  ev.entropy_raw = entropy_penalty(a);
  ev.nuclear_raw = std::accumulate(dec.sigma.begin(), dec.sigma.end(), 0.0);
  ev.objective = ev.loss_term + hp.lambda_entropy * ev.entropy_raw +
                 hp.lambda_nuclear * ev.nuclear_raw;
  if (!want_grad) return ev;

  // d loss / dA via the Daleckii-Krein derivative of h(A A^T):
  // grad_A = U [ Kdd o (G1 C1^T + C1 G1^T) ] U^T A, with G1 = U^T g,
  // C1 = U^T target, and Kdd the divided-difference kernel of h.
  const std::vector<double> g = loss_grad_theta(task, theta, grad_rows);
  const std::vector<double> ut_g = matvec_transposed(dec.u, g);
  Matrix w(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      w(i, j) = gate_h_slope(lambda[i], lambda[j], hp.sigma_gate) *
                (ut_g[i] * ut_target[j] + ut_target[i] * ut_g[j]);
  const Matrix uw = multiply(dec.u, w);
  Matrix grad_a = multiply(uw, multiply(transpose(dec.u), a));
  // Entropy term of the clamped form: -(log a + 1) above the clamp,
  // -log(1e-12) below it.
  if (hp.lambda_entropy != 0.0) {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const double x = a(i, j);
        const double d = x > 1e-12 ? -(std::log(x) + 1.0) : -std::log(1e-12);
        grad_a(i, j) += hp.lambda_entropy * d;
      }
  }
  // Nuclear norm subgradient U V^T (null-space u columns are zeroed).
  if (hp.lambda_nuclear != 0.0) {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double s = 0.0;
        for (int c = 0; c < k; ++c) s += dec.u(i, c) * dec.v(j, c);
        grad_a(i, j) += hp.lambda_nuclear * s;
      }
  }

  // Chain through the row softmax.
  ev.grad_logits = Matrix(k, k, 0.0);
  for (int i = 0; i < k; ++i) {
    double row_dot = 0.0;
    for (int j = 0; j < k; ++j) row_dot += a(i, j) * grad_a(i, j);
    for (int j = 0; j < k; ++j)
      ev.grad_logits(i, j) = a(i, j) * (grad_a(i, j) - row_dot);
  }
  return ev;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

LinearSharedTask make_mean_task(const SampleSet& train, const SampleSet& val) {
  require(train.n() >= 1 && val.n() >= 1, "make_mean_task: empty split");
  require(train.k() == val.k(), "make_mean_task: dimension mismatch");
  LinearSharedTask task;
  task.kind = TaskKind::MeanEstimation;
  task.y_train = train.samples;
  task.y_val = val.samples;
  task.y_full = stack_rows(train.samples, val.samples);
  task.param_count = train.k();
  return task;
}

LinearSharedTask make_regression_task(const Matrix& x_train, const Matrix& y_train,
                                      const Matrix& x_val, const Matrix& y_val) {
  require(x_train.rows() == y_train.rows() && x_val.rows() == y_val.rows(),
          "make_regression_task: sample count mismatch");
  require(x_train.cols() == x_val.cols() && y_train.cols() == y_val.cols(),
          "make_regression_task: dimension mismatch");
  require(x_train.rows() >= 1 && x_val.rows() >= 1, "make_regression_task: empty split");
  LinearSharedTask task;
  task.kind = TaskKind::Regression;
  task.x_train = x_train;
  task.y_train = y_train;
  task.x_val = x_val;
  task.y_val = y_val;
  task.x_full = stack_rows(x_train, x_val);
  task.y_full = stack_rows(y_train, y_val);
  task.in_dim = x_train.cols();
  task.out_dim = y_train.cols();
  task.param_count = task.in_dim * task.out_dim;
  return task;
}

std::vector<int> all_val_rows(const LinearSharedTask& task) {
  std::vector<int> rows(task.y_val.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// ---------------------------------------------------------------------------
// Lower solvers
// ---------------------------------------------------------------------------

std::vector<double> lower_solve_mean(const Matrix& a, const Matrix& train_samples) {
  require(a.rows() == train_samples.cols(), "lower_solve_mean: dimension mismatch");
  require(train_samples.rows() >= 1, "lower_solve_mean: empty train set");
  if (is_binary_scheme(a)) {
    std::vector<double> psi(a.cols(), 0.0);
    const auto supports = column_supports(a);
    for (int j = 0; j < a.cols(); ++j)
      if (!supports[j].empty()) psi[j] = cluster_mean(train_samples, supports[j]);
    return psi;
  }
  return matvec(pseudo_inverse(a), column_means(train_samples));
}

std::vector<double> lower_solve_regression(const Matrix& a, const Matrix& x,
                                           const Matrix& y, int out_dim) {
  require(x.rows() == y.rows(), "lower_solve_regression: row count mismatch");
  require(y.cols() == out_dim, "lower_solve_regression: out_dim mismatch");
  require(x.cols() * out_dim == a.rows(),
          "lower_solve_regression: flattened size must equal A's K");
  const Matrix w = solve_least_squares(x, y);
  const std::vector<double> target = transpose(w).data();
  if (is_binary_scheme(a)) {
    std::vector<double> psi(a.cols(), 0.0);
    const auto supports = column_supports(a);
    for (int j = 0; j < a.cols(); ++j) {
      if (supports[j].empty()) continue;
      double s = 0.0;
      for (int i : supports[j]) s += target[i];
      psi[j] = s / supports[j].size();
    }
    return psi;
  }
  return matvec(pseudo_inverse(a), target);
}

std::vector<double> lower_solve_regression_direct(const Matrix& a, const Matrix& x,
                                                  const Matrix& y, int out_dim) {
  require(x.rows() == y.rows(), "lower_solve_regression_direct: row count mismatch");
  require(y.cols() == out_dim, "lower_solve_regression_direct: out_dim mismatch");
  const int in_dim = x.cols();
  require(in_dim * out_dim == a.rows(),
          "lower_solve_regression_direct: flattened size must equal A's K");
  const int n = x.rows();
  // Design over the free parameters: prediction[s][m] = sum_j psi_j *
  // (sum_n A[m*in+n, j] x[s][n]).
  Matrix design(n * out_dim, a.cols(), 0.0);
  for (int s = 0; s < n; ++s)
    for (int m = 0; m < out_dim; ++m)
      for (int nn = 0; nn < in_dim; ++nn) {
        const double xv = x(s, nn);
        if (xv == 0.0) continue;
        const int flat = m * in_dim + nn;
        for (int j = 0; j < a.cols(); ++j) {
          const double av = a(flat, j);
          if (av != 0.0) design(s * out_dim + m, j) += av * xv;
        }
      }
  Matrix targets(n * out_dim, 1);
  for (int s = 0; s < n; ++s)
    for (int m = 0; m < out_dim; ++m) targets(s * out_dim + m, 0) = y(s, m);
  return solve_least_squares(design, targets).data();
}

// ---------------------------------------------------------------------------
// Upper level
// ---------------------------------------------------------------------------

double upper_objective(const RelaxedScheme& rs, const LinearSharedTask& task,
                       const std::vector<int>& batch_rows, const RelaxHyperparams& hp) {
  require(!batch_rows.empty(), "upper_objective: empty batch");
  return upper_eval(rs.logits, task, unconstrained_target(task), batch_rows, batch_rows,
                    hp, false, nullptr, nullptr)
      .objective;
}

Matrix upper_gradient(const RelaxedScheme& rs, const LinearSharedTask& task,
                      const std::vector<int>& batch_rows, const RelaxHyperparams& hp) {
  require(!batch_rows.empty(), "upper_gradient: empty batch");
  return upper_eval(rs.logits, task, unconstrained_target(task), batch_rows, batch_rows,
                    hp, true, nullptr, nullptr)
      .grad_logits;
}

SharingScheme round_scheme(const Matrix& a_relaxed) {
  require(a_relaxed.rows() == a_relaxed.cols() && a_relaxed.rows() >= 1,
          "round_scheme: matrix must be square and non-empty");
  for (int i = 0; i < a_relaxed.rows(); ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < a_relaxed.cols(); ++j) row_sum += a_relaxed(i, j);
    require(std::fabs(row_sum - 1.0) <= 1e-3, "round_scheme: row does not sum to ~1");
  }
  Matrix binary(a_relaxed.rows(), a_relaxed.cols(), 0.0);
  for (int i = 0; i < a_relaxed.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < a_relaxed.cols(); ++j)
      if (a_relaxed(i, j) > a_relaxed(i, best)) best = j;  // ties keep lowest index
    binary(i, best) = 1.0;
  }
  return make_scheme(std::move(binary));
}

// ---------------------------------------------------------------------------
// Discovery
// ---------------------------------------------------------------------------

namespace {

DiscoveryResult finalize_result(const LinearSharedTask& task, SharingScheme scheme,
                                std::vector<EpochRecord> history, int epochs_used) {
  DiscoveryResult res;
  res.partition = partition_from_scheme(scheme);
  const std::vector<double> psi_train =
      binary_fit(task, scheme.assignment, task.x_train, task.y_train);
  res.val_loss = loss_on_rows(task, theta_from_binary(scheme.assignment, psi_train),
                              all_val_rows(task));
  res.psi_final = binary_fit(task, scheme.assignment, task.x_full, task.y_full);
  res.scheme = std::move(scheme);
  res.history = std::move(history);
  res.epochs_used = epochs_used;
  return res;
}

}  // namespace

DiscoveryResult discover_brute_force(const LinearSharedTask& task) {
  if (task.param_count > 12)
    throw std::invalid_argument(
        "discover_brute_force: parameter count > 12 exceeds the Bell-number guard");
  const std::vector<int> val_rows = all_val_rows(task);

  bool have_best = false;
  double best_loss = 0.0;
  int best_clusters = 0;
  SharingScheme best_scheme;
  enumerate_partitions(task.param_count, [&](const Partition& p) {
    SharingScheme scheme = scheme_from_partition(p);
    const std::vector<double> psi =
        binary_fit(task, scheme.assignment, task.x_train, task.y_train);
    const double loss =
        loss_on_rows(task, theta_from_binary(scheme.assignment, psi), val_rows);
    // Enumeration is in lexicographic RGS order, so the first candidate seen
    // wins full ties at equal cluster count.
    const bool better =
        !have_best || loss < best_loss ||
        (loss == best_loss && p.cluster_count() < best_clusters);
    if (better) {
      have_best = true;
      best_loss = loss;
      best_clusters = p.cluster_count();
      best_scheme = std::move(scheme);
    }
  });
  DiscoveryResult res = finalize_result(task, std::move(best_scheme), {}, 0);
  res.val_loss = best_loss;
  return res;
}

DiscoveryResult discover_relaxed(const LinearSharedTask& task, const RelaxHyperparams& hp,
                                 Rng& rng) {
  require(hp.max_epochs >= 1, "discover_relaxed: max_epochs must be >= 1");
  require(hp.minibatch_fraction > 0.0 && hp.minibatch_fraction <= 1.0,
          "discover_relaxed: minibatch fraction must lie in (0,1]");
  require(hp.sigma_gate > 0.0 && hp.sigma_gate < 1.0,
          "discover_relaxed: sigma gate must lie in (0,1)");
  const int k = task.param_count;

  Matrix logits(k, k);
  for (double& x : logits.data()) x = rng.normal(0.0, hp.init_noise);
  for (int i = 0; i < k; ++i) logits(i, i) += hp.init_identity;

  const std::vector<double> target = unconstrained_target(task);
  const std::vector<int> val_rows = all_val_rows(task);
  const int n_val = static_cast<int>(val_rows.size());
  const int batch_size =
      std::max(1, std::min(n_val, static_cast<int>(hp.minibatch_fraction * n_val)));

  AdamState adam = make_adam(k, k, hp.learning_rate, hp.weight_decay);
  std::vector<EpochRecord> history;
  history.reserve(hp.max_epochs);

  // The returned scheme is the rounded candidate the trajectory visits with
  // the lowest upper objective at the binary point: validation loss plus the
  // nuclear penalty (sum over clusters of sqrt(size); a binary scheme's
  // entropy term is identically zero). Each distinct rounding is scored once.
  std::map<std::vector<int>, std::pair<double, double>> rounded_scores;  // (loss, objective)
  SharingScheme best_scheme;
  double best_loss = 0.0;
  double best_score = 0.0;
  int best_clusters = 0;
  bool have_rounded = false;
  auto consider_rounding = [&](const Matrix& soft_a) {
    SharingScheme scheme = round_scheme(soft_a);
    const Partition p = partition_from_scheme(scheme);
    auto [it, fresh] = rounded_scores.try_emplace(to_rgs(p), std::pair{0.0, 0.0});
    if (fresh) {
      const std::vector<double> psi =
          binary_fit(task, scheme.assignment, task.x_train, task.y_train);
      const double loss =
          loss_on_rows(task, theta_from_binary(scheme.assignment, psi), val_rows);
      double nuclear = 0.0;
      for (const auto& c : p.clusters) nuclear += std::sqrt(static_cast<double>(c.size()));
      it->second = {loss, loss + hp.lambda_nuclear * nuclear};
    }
    const auto [loss, score] = it->second;
    // Fewer clusters win exact ties, as in the exact search.
    const bool better = !have_rounded || score < best_score ||
                        (score == best_score && p.cluster_count() < best_clusters);
    if (better) {
      have_rounded = true;
      best_loss = loss;
      best_score = score;
      best_clusters = p.cluster_count();
      best_scheme = std::move(scheme);
    }
  };

  Matrix v_warm;
  double best_objective = 0.0;
  bool have_best = false;
  int stale = 0;
  int steps = 0;
  std::vector<int> batch = val_rows;
  std::vector<int> pool = val_rows;
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    if (batch_size < n_val) {
      // Partial Fisher-Yates; deterministic given the rng stream.
      for (int i = 0; i < batch_size; ++i)
        std::swap(pool[i], pool[rng.uniform_int(i, n_val - 1)]);
      batch.assign(pool.begin(), pool.begin() + batch_size);
    }

    Matrix v_next;
    const UpperEval ev =
        upper_eval(logits, task, target, batch, val_rows, hp, true,
                   v_warm.rows() == k ? &v_warm : nullptr, &v_next);
    v_warm = std::move(v_next);
    if (!std::isfinite(ev.objective))
      throw std::runtime_error("discover_relaxed: non-finite objective at epoch " +
                               std::to_string(epoch));
    history.push_back({epoch, ev.loss_term, ev.entropy_raw, ev.nuclear_raw});
    consider_rounding(ev.soft_a);

    // Patience watches the full-validation objective (penalties included);
    // the loss term alone is flat wherever the spectral gate is inactive.
    // The improvement threshold is relative so that it means the same thing
    // across tasks whose loss scales differ by orders of magnitude.
    const double tol = 1e-8 * std::max(1.0, std::fabs(have_best ? best_objective : ev.objective));
    if (!have_best || ev.objective < best_objective - tol) {
      have_best = true;
      best_objective = ev.objective;
      stale = 0;
    } else if (++stale >= hp.patience) {
      break;
    }

    adam_step(adam, logits, ev.grad_logits);
    ++steps;
  }
  consider_rounding(row_softmax(logits));

  DiscoveryResult res =
      finalize_result(task, std::move(best_scheme), std::move(history), steps);
  res.val_loss = best_loss;
  return res;
}

}  // namespace eqdisc

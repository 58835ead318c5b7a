// eqdisc - CLI for the equivariance-discovery experiments.
//
// Subcommands: gaussian, shift, denoise, sum, pd, verify.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "eqdisc/harness.hpp"

namespace {

using namespace eqdisc;

struct CliOptions {
  ExperimentConfig cfg;
  std::string method = "relaxed";
};

void add_common_options(CLI::App* sub, CliOptions& opt) {
  sub->add_option("--dims", opt.cfg.dims, "Dimension K (input length for shift)");
  sub->add_option("--rank-gt", opt.cfg.rank_gt, "Ground-truth cluster count");
  sub->add_option("--sigma", opt.cfg.sigma, "Noise standard deviation");
  sub->add_option("--n", opt.cfg.n_total, "Total dataset size");
  sub->add_option("--train-ratio", opt.cfg.train_ratio, "Train fraction r in (0,1)");
  sub->add_option("--runs", opt.cfg.runs, "Number of seeded runs");
  sub->add_option("--seed", opt.cfg.base_seed, "Base seed");
  sub->add_option("--method", opt.method, "brute | relaxed | no-sharing | oracle");
  sub->add_option("--lambda-entropy", opt.cfg.lambda_entropy_override, "Entropy penalty weight");
  sub->add_option("--lambda-nuclear", opt.cfg.lambda_nuclear_override, "Nuclear-norm penalty weight");
  sub->add_option("--lr", opt.cfg.lr_override, "Adam learning rate");
  sub->add_option("--weight-decay", opt.cfg.wd_override, "Adam weight decay");
  sub->add_option("--epochs", opt.cfg.hp.max_epochs, "Maximum relaxed epochs");
  sub->add_option("--patience", opt.cfg.hp.patience, "Early-stop patience (epochs)");
  sub->add_option("--minibatch-frac", opt.cfg.hp.minibatch_fraction,
                  "Validation minibatch fraction in (0,1]");
  sub->add_option("--kernel-len", opt.cfg.kernel_len, "Kernel length (shift)");
  sub->add_option("--seq-len", opt.cfg.seq_len, "Sequence length (sum)");
  sub->add_flag("--negated", opt.cfg.negated, "Negate even positions (sum)");
  sub->add_option("--alpha", opt.cfg.alpha, "Confidence level for the claim-2 bound");
  sub->add_option("--n-test", opt.cfg.n_test, "Held-out test set size");
  sub->add_option("--threads", opt.cfg.threads, "Worker threads (0 = hardware)");
  sub->add_option("--out", opt.cfg.out_path, "CSV output path");
  sub->add_option("--plot", opt.cfg.plot_path, "SVG plot output path");
  sub->set_config("--config", "", "key=value config file; flags override file values");
}

void print_summaries(const std::vector<RunRecord>& records, double seconds) {
  const auto sums = summarize(records);
  std::printf("%-12s %6s %14s %12s %12s %12s\n", "method", "runs", "mse_mean", "mse_ci95",
              "pd_mean", "pd_ci95");
  for (const auto& s : sums)
    std::printf("%-12s %6d %14.6g %12.4g %12.4g %12.4g\n", s.method.c_str(), s.count,
                s.mse_mean, s.mse_half_width, s.pd_mean, s.pd_half_width);
  std::printf("total wall time: %.2f s\n", seconds);
}

int run_experiment_command(CliOptions& opt, ExperimentKind kind) {
  opt.cfg.kind = kind;
  opt.cfg.method = method_from_name(opt.method);
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<RunRecord> records = run_experiment(opt.cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  print_summaries(records, seconds);
  if (!opt.cfg.out_path.empty()) write_csv(records, opt.cfg.out_path);
  if (!opt.cfg.plot_path.empty()) {
    PlotSeries series;
    series.name = records.empty() ? "metric" : records.front().method;
    for (const auto& r : records) {
      series.x.push_back(r.run_index);
      series.y.push_back(r.metric_mse);
    }
    emit_plot({series}, "per-run error", "run", "squared error", opt.cfg.plot_path);
  }
  return 0;
}

int pd_command(const std::string& file1, const std::string& file2) {
  auto read_file = [](const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open partition file '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
  };
  const Partition a = parse_partition_text(read_file(file1));
  const Partition b = parse_partition_text(read_file(file2));
  std::printf("%d\n", partition_distance(a, b));
  return 0;
}

int verify_command(const std::string& which, CliOptions& opt) {
  if (which == "claim1") {
    const Claim1Report r = verify_claim1(20, opt.cfg.dims, opt.cfg.sigma < 0 ? 1.0 : opt.cfg.sigma,
                                          opt.cfg.n_total < 0 ? 50 : opt.cfg.n_total,
                                          20000, opt.cfg.base_seed);
    std::printf("claim1: %d/%d configurations within 3 SE (worst z = %.3f) -> %s\n",
                r.within_tolerance, r.configs, r.worst_z, r.pass ? "PASS" : "FAIL");
    return 0;
  }
  if (which == "claim2") {
    opt.cfg.kind = ExperimentKind::Gaussian;
    opt.cfg.method = method_from_name(opt.method);
    if (opt.cfg.dims == 4 && opt.cfg.rank_gt == 1) opt.cfg.dims = 20;  // claim-2 default
    const Claim2Report r = verify_claim2(opt.cfg);
    std::printf("claim2: empirical gap %.6g <= bound %.6g -> %s\n", r.empirical_gap,
                r.bound, r.holds ? "PASS" : "FAIL");
    std::printf("bound curve (r, bound):\n");
    for (const auto& [rr, bb] : r.bound_curve) std::printf("  %.2f %.6g\n", rr, bb);
    if (!opt.cfg.plot_path.empty()) {
      PlotSeries series;
      series.name = "bound";
      for (const auto& [rr, bb] : r.bound_curve) {
        series.x.push_back(rr);
        series.y.push_back(bb);
      }
      emit_plot({series}, "MSE-gap bound vs train fraction", "r", "bound",
                opt.cfg.plot_path);
    }
    return 0;
  }
  if (which == "claim3") {
    const Claim3Report r = verify_claim3(std::min(opt.cfg.dims, 4));
    std::printf("claim3: %d/%d partition pairs satisfy the sandwich -> %s\n", r.satisfied,
                r.pairs, r.pass ? "PASS" : "FAIL");
    return 0;
  }
  if (which == "chi2") {
    const Chi2Report r = verify_chi2({5, 10}, {1.0, 2.0}, 100000, opt.cfg.base_seed);
    for (const auto& c : r.cells)
      std::printf("chi2 K=%d t=%.1f: empirical %.6g <= bound %.6g\n", c.k, c.t,
                  c.empirical, c.bound);
    std::printf("chi2 -> %s\n", r.pass ? "PASS" : "FAIL");
    return 0;
  }
  throw std::invalid_argument("unknown verify target '" + which +
                              "' (expected claim1|claim2|claim3|chi2)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equivariance discovery via learned parameter-sharing"};
  app.require_subcommand(1);

  CliOptions opt;
  auto* gaussian = app.add_subcommand("gaussian", "Gaussian shared-means experiment");
  auto* shift = app.add_subcommand("shift", "cross-correlation recovery experiment");
  auto* denoise = app.add_subcommand("denoise", "step-signal denoising experiment");
  auto* sum = app.add_subcommand("sum", "sum-of-numbers regression experiment");
  for (auto* sub : {gaussian, shift, denoise, sum}) add_common_options(sub, opt);

  auto* pd = app.add_subcommand("pd", "partition distance between two partition files");
  std::string pd_file1, pd_file2;
  pd->add_option("file1", pd_file1, "first partition file")->required();
  pd->add_option("file2", pd_file2, "second partition file")->required();

  auto* verify = app.add_subcommand("verify", "run a claim verifier");
  std::string which;
  verify->add_option("which", which, "claim1 | claim2 | claim3 | chi2")->required();
  add_common_options(verify, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gaussian->parsed()) return run_experiment_command(opt, ExperimentKind::Gaussian);
    if (shift->parsed()) return run_experiment_command(opt, ExperimentKind::Shift);
    if (denoise->parsed()) return run_experiment_command(opt, ExperimentKind::Denoise);
    if (sum->parsed()) return run_experiment_command(opt, ExperimentKind::Sum);
    if (pd->parsed()) return pd_command(pd_file1, pd_file2);
    if (verify->parsed()) return verify_command(which, opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

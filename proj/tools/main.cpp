#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <thread>

#include "ddpmlab/experiments.hpp"
#include "ddpmlab/validation.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "flat key = value config file ('#' comments, "
                  "comma-separated lists)");
  cmd->add_option("--out", args.out_path, "CSV output path (default stdout)");
  cmd->add_option("--seed", args.seed, "master seed (default 1)");
  cmd->add_option("--threads", args.threads,
                  "worker threads (default: hardware concurrency)");
}

ddpmlab::SweepOptions make_options(const CommonArgs& args) {
  ddpmlab::SweepOptions opt;
  if (!args.config_path.empty())
    opt.config = ddpmlab::Config::from_file(args.config_path);
  opt.seed = args.seed;
  opt.threads = args.threads > 0
                    ? args.threads
                    : std::max(1u, std::thread::hardware_concurrency());
  return opt;
}

/// Runs fn with `out` bound to --out (or stdout) and prints `summary` to
/// stdout, or to stderr when the CSV itself goes to stdout.
template <typename Fn>
int with_output(const CommonArgs& args, Fn&& fn) {
  if (args.out_path.empty()) {
    const std::string summary = fn(std::cout);
    if (!summary.empty()) std::cerr << summary << '\n';
  } else {
    std::ofstream file(args.out_path);
    if (!file) {
      std::cerr << "cannot open output file: " << args.out_path << '\n';
      return 2;
    }
    const std::string summary = fn(file);
    if (!summary.empty()) std::cout << summary << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ddpmlab: exact and Monte Carlo error metrics for DDPM coefficient "
      "designs on analytically tractable low-dimensional targets"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* dump = app.add_subcommand(
      "dump-schedule",
      "Emit t,beta,alpha,alpha_bar,eta,sigma2 for a schedule and design.\n"
      "Config keys: schedule (linear|warmup), T, c0, c1, beta_min, beta_max,\n"
      "design (star|simple), eta_shift, sigma_scale.");
  add_common(dump, args);

  auto* figure1 = app.add_subcommand(
      "figure1",
      "Sweep exact KL(q1||p1), MC TV and the chain decomposition over\n"
      "(design, T, d) grids. Config keys: schedule, T_list, d_list, k,\n"
      "designs, c0, c1, beta_min, beta_max, tv_samples.");
  add_common(figure1, args);

  auto* theorem2 = app.add_subcommand(
      "theorem2",
      "Per-step KL vs its design lower bound over an\n"
      "(eta_shift, sigma_scale) grid. Config keys: schedule, T, d, k,\n"
      "t_list, eta_shift_min/max/count, sigma_scale_min/max/count, c0, c1,\n"
      "beta_min, beta_max.");
  add_common(theorem2, args);

  auto* rate = app.add_subcommand(
      "rate",
      "Exact KL(q1||p1) vs T under the star design; prints the\n"
      "least-squares slope of log KL vs log T. Config keys: schedule,\n"
      "T_list, d, k, c0, c1, beta_min, beta_max, tv_samples.");
  add_common(rate, args);

  auto* perturb = app.add_subcommand(
      "perturb",
      "Reverse runs with synthetically perturbed scores over an eps grid;\n"
      "fits a block Gaussian to the Y1 ensemble and reports MC TV vs q1.\n"
      "Config keys: schedule, T, d, k, eps_list, model\n"
      "(constant-bias|random-field), ensemble, tv_samples, target\n"
      "(gaussian|mixture), atoms_csv, c0, c1, beta_min, beta_max.\n"
      "atoms_csv: one atom per row, weight in the first column, coordinates\n"
      "after it (weights are renormalized to sum to 1).");
  add_common(perturb, args);

  auto* covering = app.add_subcommand(
      "covering",
      "Greedy eps-net and metric-entropy dimension estimate of a point\n"
      "cloud. Config keys: cloud_csv (one point per row, numeric, no\n"
      "header; at most 1e5 rows), T, c_eps, C_cover. eps = T^-c_eps.");
  add_common(covering, args);

  auto* validate = app.add_subcommand(
      "validate",
      "Run every module's invariant suite at fixed seeds; exit 1 on any\n"
      "failure.");
  add_common(validate, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" ? 0 : 2;
  }

  try {
    if (dump->parsed()) {
      const auto opt = make_options(args);
      return with_output(args, [&](std::ostream& out) {
        ddpmlab::dump_schedule(opt, out);
        return std::string();
      });
    }
    if (figure1->parsed()) {
      const auto opt = make_options(args);
      return with_output(args, [&](std::ostream& out) {
        const int rows = ddpmlab::run_figure1_sweep(opt, out);
        return "figure1: " + std::to_string(rows) + " rows";
      });
    }
    if (theorem2->parsed()) {
      const auto opt = make_options(args);
      return with_output(args, [&](std::ostream& out) {
        const int rows = ddpmlab::run_theorem2_grid(opt, out);
        return "theorem2: " + std::to_string(rows) + " rows";
      });
    }
    if (rate->parsed()) {
      const auto opt = make_options(args);
      return with_output(args, [&](std::ostream& out) {
        const auto summary = ddpmlab::run_rate_sweep(opt, out);
        return "rate: slope of log kl_exact vs log T = " +
               std::to_string(summary.slope);
      });
    }
    if (perturb->parsed()) {
      const auto opt = make_options(args);
      return with_output(args, [&](std::ostream& out) {
        const int rows = ddpmlab::run_perturbation_sweep(opt, out);
        return "perturb: " + std::to_string(rows) + " rows";
      });
    }
    if (covering->parsed()) {
      const auto opt = make_options(args);
      return with_output(args, [&](std::ostream& out) {
        const auto sum = ddpmlab::run_covering(opt, out);
        return "covering: eps = " + std::to_string(sum.eps) + ", net size = " +
               std::to_string(sum.net_size) + ", dimension estimate = " +
               std::to_string(sum.estimate);
      });
    }
    if (validate->parsed()) {
      return ddpmlab::run_validation_report(std::cout) ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "bad config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

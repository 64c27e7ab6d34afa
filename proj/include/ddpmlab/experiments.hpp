#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ddpmlab/config.hpp"

namespace ddpmlab {

/// Shared CLI options. `seed` is the master seed; grid point i of a sweep
/// derives its child seed as mix_seed(seed, i) where i indexes the canonical
/// grid enumeration (documented per sweep), so values never depend on
/// execution or completion order.
struct SweepOptions {
  Config config;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Keys: schedule (linear|warmup), T, c0, c1, beta_min, beta_max,
/// design (star|simple), eta_shift, sigma_scale.
/// Emits columns t,beta,alpha,alpha_bar,eta,sigma2.
void dump_schedule(const SweepOptions& opt, std::ostream& out);

/// Figure-style sweep over (design, T, d) grids of the exact terminal KL,
/// the Monte Carlo TV estimate and the chain-rule decomposition.
/// Keys: schedule, T_list, d_list, k, designs, c0, c1, beta_min, beta_max,
/// tv_samples. Row order: designs (outer), then T_list, then d_list.
int run_figure1_sweep(const SweepOptions& opt, std::ostream& out);

/// Exact per-step KL against its coefficient-design lower bound over a
/// (t, eta_shift, sigma_scale) grid around the star design.
/// Keys: schedule, T, d, k, t_list, eta_shift_min, eta_shift_max,
/// eta_shift_count, sigma_scale_min, sigma_scale_max, sigma_scale_count,
/// c0, c1, beta_min, beta_max.
int run_theorem2_grid(const SweepOptions& opt, std::ostream& out);

struct RateSweepSummary {
  double slope = 0;   // least-squares slope of log kl_exact vs log T
  int rows = 0;
};

/// Exact terminal KL as a function of T under the star design.
/// Keys: schedule, T_list, d, k, c0, c1, beta_min, beta_max, tv_samples.
RateSweepSummary run_rate_sweep(const SweepOptions& opt, std::ostream& out);

/// Reverse-process runs with synthetically perturbed scores over an eps
/// grid; block-Gaussian law fitted to the Y_1 ensemble and compared to q_1
/// by Monte Carlo TV. All eps rows share the ensemble, oracle-direction and
/// TV streams (paired design), so differences across rows isolate eps.
/// Keys: schedule, T, d, k, eps_list, model (constant-bias|random-field),
/// ensemble, tv_samples, target (gaussian|mixture), atoms_csv,
/// c0, c1, beta_min, beta_max.
int run_perturbation_sweep(const SweepOptions& opt, std::ostream& out);

struct CoveringSummary {
  double eps = 0;
  int net_size = 0;
  double estimate = 0;
};

/// Greedy eps-net and the metric-entropy dimension estimate of a point
/// cloud read from CSV (one point per row).
/// Keys: cloud_csv, T, c_eps, C_cover.
CoveringSummary run_covering(const SweepOptions& opt, std::ostream& out);

}  // namespace ddpmlab

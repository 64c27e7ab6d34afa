#include "ddpmlab/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <set>
#include <thread>
#include <vector>

#include "ddpmlab/analytic.hpp"
#include "ddpmlab/covering.hpp"
#include "ddpmlab/csv.hpp"
#include "ddpmlab/metrics.hpp"
#include "ddpmlab/sampler.hpp"
#include "ddpmlab/schedule.hpp"
#include "ddpmlab/target.hpp"

namespace ddpmlab {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::string sanitize_error(const std::string& msg) {
  std::string out = msg;
  for (char& c : out)
    if (c == ',' || c == '\n') c = ';';
  return out;
}

struct ScheduleSpec {
  std::string name;  // "linear" or "warmup"
  double c0 = 2, c1 = 4;
  double beta_min = 1e-4, beta_max = 0.02;

  static ScheduleSpec from_config(const Config& cfg,
                                  const std::string& dflt_name) {
    ScheduleSpec s;
    s.name = cfg.get_string("schedule", dflt_name);
    if (s.name != "linear" && s.name != "warmup")
      throw std::invalid_argument("schedule must be 'linear' or 'warmup'");
    s.c0 = cfg.get_double("c0", 2.0);
    s.c1 = cfg.get_double("c1", 4.0);
    s.beta_min = cfg.get_double("beta_min", 1e-4);
    s.beta_max = cfg.get_double("beta_max", 0.02);
    return s;
  }

  Schedule<double> build(int T) const {
    if (name == "warmup") return make_warmup_schedule<double>(T, c0, c1);
    return make_linear_schedule<double>(T, beta_min, beta_max);
  }
};

CoefficientDesign<double> build_design(const std::string& name,
                                       const Schedule<double>& s) {
  if (name == "star") return star_design(s);
  if (name == "simple") return simple_design(s);
  throw std::invalid_argument("design must be 'star' or 'simple'");
}

/// Computes rows[i] = fn(i) for i in [0, count), possibly on several
/// threads; rows keep their canonical index regardless of scheduling.
void compute_rows(int count, int threads,
                  const std::function<std::string(int)>& fn,
                  std::vector<std::string>& rows) {
  rows.assign(count, "");
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) rows[i] = fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      rows[i] = fn(i);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(threads, count); ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

constexpr const char* kSweepHeader =
    "design_name,schedule_name,T,d,k,eps_score,seed,kl_exact,tv_estimate,"
    "tv_stderr,step_kl_sum,init_kl,runtime_ms,error";

struct SweepRecord {
  std::string design_name, schedule_name;
  int T = 0, d = 0, k = 0;
  double eps_score = 0;
  std::uint64_t seed = 0;
  double kl_exact = 0, tv_estimate = 0, tv_stderr = 0;
  double step_kl_sum = 0, init_kl = 0;
  double runtime_ms = 0;
  bool has_tv = false;
  std::string error;

  std::string to_csv() const {
    std::string row = design_name + "," + schedule_name + "," +
                      std::to_string(T) + "," + std::to_string(d) + "," +
                      std::to_string(k) + "," + format_double(eps_score) +
                      "," + std::to_string(seed) + ",";
    if (error.empty()) {
      row += format_double(kl_exact) + ",";
      row += has_tv ? format_double(tv_estimate) + "," +
                          format_double(tv_stderr) + ","
                    : std::string(",,");
      row += format_double(step_kl_sum) + "," + format_double(init_kl);
    } else {
      row += ",,,,";
    }
    row += "," + format_double(runtime_ms) + "," + error;
    return row;
  }
};

}  // namespace

void dump_schedule(const SweepOptions& opt, std::ostream& out) {
  opt.config.require_known_keys({"schedule", "T", "c0", "c1", "beta_min",
                                 "beta_max", "design", "eta_shift",
                                 "sigma_scale"});
  const auto spec = ScheduleSpec::from_config(opt.config, "linear");
  const int T = opt.config.get_int("T", 1000);
  const auto schedule = spec.build(T);
  auto design = build_design(opt.config.get_string("design", "star"), schedule);
  const double eta_shift = opt.config.get_double("eta_shift", 0.0);
  const double sigma_scale = opt.config.get_double("sigma_scale", 1.0);
  if (eta_shift != 0.0 || sigma_scale != 1.0)
    design = perturbed_design(design, eta_shift, sigma_scale);

  out << "t,beta,alpha,alpha_bar,eta,sigma2\n";
  for (int t = 1; t <= T; ++t) {
    out << t << ',' << format_double(schedule.beta(t)) << ','
        << format_double(schedule.alpha(t)) << ','
        << format_double(schedule.alpha_bar(t)) << ','
        << format_double(design.eta(t)) << ','
        << format_double(design.sigma2(t)) << '\n';
  }
}

int run_figure1_sweep(const SweepOptions& opt, std::ostream& out) {
  opt.config.require_known_keys({"schedule", "T_list", "d_list", "k",
                                 "designs", "c0", "c1", "beta_min", "beta_max",
                                 "tv_samples"});
  const auto spec = ScheduleSpec::from_config(opt.config, "linear");
  const auto T_list =
      opt.config.get_int_list("T_list", {100, 200, 500, 1000});
  const auto d_list =
      opt.config.get_int_list("d_list", {10, 20, 50, 100, 200, 500, 1000});
  const int k = opt.config.get_int("k", 8);
  const auto designs =
      opt.config.get_string_list("designs", {"star", "simple"});
  const std::int64_t tv_samples = opt.config.get_int("tv_samples", 200000);

  struct Point {
    std::string design;
    int T, d;
  };
  std::vector<Point> grid;
  for (const auto& design : designs)
    for (int T : T_list)
      for (int d : d_list) grid.push_back({design, T, d});

  auto row_fn = [&](int i) {
    const auto start = Clock::now();
    SweepRecord rec;
    rec.design_name = grid[i].design;
    rec.schedule_name = spec.name;
    rec.T = grid[i].T;
    rec.d = grid[i].d;
    rec.k = k;
    rec.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(i));
    try {
      const auto schedule = spec.build(rec.T);
      const auto design = build_design(rec.design_name, schedule);
      const auto q1 = forward_marginal_law(schedule, 1, k, rec.d);
      const auto p1 = propagate_reverse_law(schedule, design, k, rec.d, 1);
      rec.kl_exact = diag_gaussian_kl(q1, p1);
      const auto chain = chain_kl_upper_bound(schedule, design, k, rec.d);
      rec.step_kl_sum = chain.step_sum;
      rec.init_kl = chain.init_kl;
      if (tv_samples > 0) {
        const auto tv = mc_tv_diag_gaussians(q1, p1, tv_samples, rec.seed);
        rec.tv_estimate = tv.value;
        rec.tv_stderr = tv.std_error;
        rec.has_tv = true;
      }
    } catch (const std::exception& e) {
      rec.error = sanitize_error(e.what());
    }
    rec.runtime_ms = elapsed_ms(start);
    return rec.to_csv();
  };

  std::vector<std::string> rows;
  compute_rows(static_cast<int>(grid.size()), opt.threads, row_fn, rows);
  out << kSweepHeader << '\n';
  for (const auto& row : rows) out << row << '\n';
  return static_cast<int>(rows.size());
}

int run_theorem2_grid(const SweepOptions& opt, std::ostream& out) {
  opt.config.require_known_keys(
      {"schedule", "T", "d", "k", "t_list", "eta_shift_min", "eta_shift_max",
       "eta_shift_count", "sigma_scale_min", "sigma_scale_max",
       "sigma_scale_count", "c0", "c1", "beta_min", "beta_max"});
  const auto spec = ScheduleSpec::from_config(opt.config, "warmup");
  const int T = opt.config.get_int("T", 100);
  const int d = opt.config.get_int("d", 64);
  const int k = opt.config.get_int("k", 8);
  const auto t_list = opt.config.get_int_list("t_list", {2, T / 2, T});
  const double es_min = opt.config.get_double("eta_shift_min", -0.05);
  const double es_max = opt.config.get_double("eta_shift_max", 0.05);
  const int es_count = opt.config.get_int("eta_shift_count", 21);
  const double sc_min = opt.config.get_double("sigma_scale_min", 0.5);
  const double sc_max = opt.config.get_double("sigma_scale_max", 2.0);
  const int sc_count = opt.config.get_int("sigma_scale_count", 21);
  if (es_count < 1 || sc_count < 1)
    throw std::invalid_argument("theorem2: grid counts must be >= 1");

  const auto schedule = spec.build(T);
  const auto star = star_design(schedule);

  auto linspace = [](double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i)
      v[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
    return v;
  };
  const auto shifts = linspace(es_min, es_max, es_count);
  const auto scales = linspace(sc_min, sc_max, sc_count);

  struct Point {
    int t;
    double shift, scale;
  };
  std::vector<Point> grid;
  for (int t : t_list)
    for (double shift : shifts)
      for (double scale : scales) grid.push_back({t, shift, scale});

  auto row_fn = [&](int i) {
    const auto& pt = grid[i];
    std::string prefix = std::to_string(T) + "," + std::to_string(d) + "," +
                         std::to_string(k) + "," + std::to_string(pt.t) + "," +
                         format_double(pt.shift) + "," +
                         format_double(pt.scale) + ",";
    try {
      const auto design = perturbed_design(star, pt.shift, pt.scale);
      const double kl = conditional_step_kl(schedule, design, pt.t, k, d);
      const double lb = step_kl_lower_bound(schedule, design, pt.t, d);
      return prefix + format_double(kl) + "," + format_double(lb) + "," +
             format_double(kl - lb) + ",";
    } catch (const std::exception& e) {
      return prefix + ",,," + sanitize_error(e.what());
    }
  };

  std::vector<std::string> rows;
  compute_rows(static_cast<int>(grid.size()), opt.threads, row_fn, rows);
  out << "T,d,k,t,eta_shift,sigma_scale,step_kl,lower_bound,diff,error\n";
  for (const auto& row : rows) out << row << '\n';
  return static_cast<int>(rows.size());
}

RateSweepSummary run_rate_sweep(const SweepOptions& opt, std::ostream& out) {
  opt.config.require_known_keys({"schedule", "T_list", "d", "k", "c0", "c1",
                                 "beta_min", "beta_max", "tv_samples"});
  const auto spec = ScheduleSpec::from_config(opt.config, "warmup");
  const auto T_list =
      opt.config.get_int_list("T_list", {100, 200, 400, 800, 1600});
  const int d = opt.config.get_int("d", 64);
  const int k = opt.config.get_int("k", 8);
  const std::int64_t tv_samples = opt.config.get_int("tv_samples", 0);

  std::vector<double> log_T, log_kl;
  out << kSweepHeader << '\n';
  for (size_t i = 0; i < T_list.size(); ++i) {
    const auto start = Clock::now();
    SweepRecord rec;
    rec.design_name = "star";
    rec.schedule_name = spec.name;
    rec.T = T_list[i];
    rec.d = d;
    rec.k = k;
    rec.seed = mix_seed(opt.seed, i);
    try {
      const auto schedule = spec.build(rec.T);
      const auto design = star_design(schedule);
      const auto q1 = forward_marginal_law(schedule, 1, k, d);
      const auto p1 = propagate_reverse_law(schedule, design, k, d, 1);
      rec.kl_exact = diag_gaussian_kl(q1, p1);
      const auto chain = chain_kl_upper_bound(schedule, design, k, d);
      rec.step_kl_sum = chain.step_sum;
      rec.init_kl = chain.init_kl;
      if (tv_samples > 0) {
        const auto tv = mc_tv_diag_gaussians(q1, p1, tv_samples, rec.seed);
        rec.tv_estimate = tv.value;
        rec.tv_stderr = tv.std_error;
        rec.has_tv = true;
      }
      log_T.push_back(std::log(double(rec.T)));
      log_kl.push_back(std::log(rec.kl_exact));
    } catch (const std::exception& e) {
      rec.error = sanitize_error(e.what());
    }
    rec.runtime_ms = elapsed_ms(start);
    out << rec.to_csv() << '\n';
  }

  RateSweepSummary summary;
  summary.rows = static_cast<int>(T_list.size());
  if (log_T.size() >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < log_T.size(); ++i) {
      mx += log_T[i];
      my += log_kl[i];
    }
    mx /= double(log_T.size());
    my /= double(log_T.size());
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < log_T.size(); ++i) {
      sxx += (log_T[i] - mx) * (log_T[i] - mx);
      sxy += (log_T[i] - mx) * (log_kl[i] - my);
    }
    summary.slope = sxy / sxx;
  }
  return summary;
}

namespace {

/// (trajectory_id, t, coord_0..coord_{d-1}) rows for every recorded state.
void write_trajectory_csv(const std::string& path,
                          const ReverseRunResult& run) {
  std::ofstream file(path);
  if (!file)
    throw std::invalid_argument("cannot open trajectory_csv path: " + path);
  const int d = static_cast<int>(run.ensemble.cols());
  file << "trajectory_id,t";
  for (int j = 0; j < d; ++j) file << ",coord_" << j;
  file << '\n';
  for (int i = 0; i < run.ensemble.rows(); ++i) {
    for (const auto& [t, state] : run.trajectory) {
      file << i << ',' << t;
      for (int j = 0; j < d; ++j) file << ',' << format_double(state(i, j));
      file << '\n';
    }
  }
}

}  // namespace

int run_perturbation_sweep(const SweepOptions& opt, std::ostream& out) {
  opt.config.require_known_keys({"schedule", "T", "d", "k", "eps_list",
                                 "model", "ensemble", "tv_samples", "target",
                                 "atoms_csv", "c0", "c1", "beta_min",
                                 "beta_max", "trajectory_csv",
                                 "trajectory_limit"});
  const auto spec = ScheduleSpec::from_config(opt.config, "linear");
  const int T = opt.config.get_int("T", 200);
  const int d = opt.config.get_int("d", 32);
  const auto eps_list =
      opt.config.get_double_list("eps_list", {0, 0.01, 0.02, 0.05, 0.1});
  const std::string model_name =
      opt.config.get_string("model", "constant-bias");
  PerturbationModel model;
  if (model_name == "constant-bias") {
    model = PerturbationModel::ConstantBias;
  } else if (model_name == "random-field") {
    model = PerturbationModel::RandomField;
  } else {
    throw std::invalid_argument(
        "model must be 'constant-bias' or 'random-field'");
  }
  const int n_ensemble = opt.config.get_int("ensemble", 50000);
  const std::int64_t tv_samples = opt.config.get_int("tv_samples", 200000);
  const std::string target_name = opt.config.get_string("target", "gaussian");

  TargetDistribution target = TargetDistribution::degenerate_gaussian(1, 1);
  int k = opt.config.get_int("k", 8);
  if (target_name == "gaussian") {
    target = TargetDistribution::degenerate_gaussian(k, d);
  } else if (target_name == "mixture") {
    const std::string path = opt.config.get_string("atoms_csv", "");
    if (path.empty())
      throw std::invalid_argument("target=mixture requires atoms_csv");
    const Eigen::MatrixXd raw = read_numeric_csv(path);
    if (raw.cols() < 2)
      throw std::invalid_argument(
          "atoms_csv: need weight column plus coordinates");
    Eigen::VectorXd w = raw.col(0);
    target = TargetDistribution::point_mixture(raw.rightCols(raw.cols() - 1),
                                               w / w.sum());
    if (target.dim() != d)
      throw std::invalid_argument("atoms_csv dimension does not match d");
    if (!opt.config.has("k")) k = d;  // no natural block split for a mixture
  } else {
    throw std::invalid_argument("target must be 'gaussian' or 'mixture'");
  }

  const auto schedule = spec.build(T);
  const auto design = star_design(schedule);

  // Paired streams shared by all eps rows: differences between rows are
  // then driven by eps alone. mix(seed,0): ensemble, 1: oracle directions,
  // 2: TV sampler, 3: mixture reference ensemble.
  const std::uint64_t ensemble_seed = mix_seed(opt.seed, 0);
  const std::uint64_t oracle_seed = mix_seed(opt.seed, 1);
  const std::uint64_t tv_seed = mix_seed(opt.seed, 2);

  // Reference law for q_1: exact for the degenerate Gaussian target,
  // block-Gaussian fit of a forward ensemble for a mixture (diagnostic).
  BlockGaussian q1{Eigen::VectorXd::Zero(d), k, 1.0, 1.0};
  if (target.kind() == TargetKind::DegenerateGaussian) {
    q1 = BlockGaussian::from_law(forward_marginal_law(schedule, 1, k, d));
  } else {
    const Eigen::MatrixXd fwd = forward_marginal_sample(
        target, schedule, 1, n_ensemble, mix_seed(opt.seed, 3));
    const auto mom = empirical_block_moments(fwd, k);
    q1.mean = fwd.colwise().mean();
    q1.on_var = mom.on_var;
    q1.off_var = k < d ? mom.off_var : 1.0;
  }

  // Optional trajectory dump (large): the first eps row's leading
  // trajectories, reproduced exactly via the per-trajectory child streams.
  const std::string trajectory_csv =
      opt.config.get_string("trajectory_csv", "");
  if (!trajectory_csv.empty() && !eps_list.empty()) {
    const int limit =
        std::min(n_ensemble, opt.config.get_int("trajectory_limit", 8));
    ReverseRunConfig cfg{schedule,
                         design,
                         make_perturbed_oracle(target, schedule, eps_list[0],
                                               model, oracle_seed),
                         d,
                         limit,
                         1,
                         ensemble_seed,
                         true,
                         1};
    write_trajectory_csv(trajectory_csv, run_reverse(cfg));
  }

  out << "design_name,schedule_name,T,d,k,model,eps_score,seed,tv_estimate,"
         "tv_stderr,fit_on_var,fit_off_var,fit_mean_norm,fit_residual,"
         "runtime_ms,error\n";
  int rows = 0;
  for (size_t i = 0; i < eps_list.size(); ++i) {
    const auto start = Clock::now();
    const double eps = eps_list[i];
    std::string prefix = "star," + spec.name + "," + std::to_string(T) + "," +
                         std::to_string(d) + "," + std::to_string(k) + "," +
                         model_name + "," + format_double(eps) + "," +
                         std::to_string(mix_seed(opt.seed, i)) + ",";
    std::string body;
    std::string error;
    try {
      ReverseRunConfig cfg{schedule,
                           design,
                           make_perturbed_oracle(target, schedule, eps, model,
                                                 oracle_seed),
                           d,
                           n_ensemble,
                           1,
                           ensemble_seed,
                           false,
                           opt.threads};
      const auto run = run_reverse(cfg);
      const auto mom = empirical_block_moments(run.ensemble, k);
      BlockGaussian fit{run.ensemble.colwise().mean(), k, mom.on_var,
                        k < d ? mom.off_var : 1.0};
      const auto tv = mc_tv_block_gaussians(fit, q1, tv_samples, tv_seed);

      // Residual of the two-block fit: rms deviation of the per-coordinate
      // variances from their block values.
      Eigen::MatrixXd c = run.ensemble.rowwise() - fit.mean.transpose();
      Eigen::RowVectorXd var =
          c.colwise().squaredNorm() / double(n_ensemble - 1);
      double ss = 0;
      for (int j = 0; j < d; ++j) {
        const double ref = j < k ? fit.on_var : fit.off_var;
        ss += (var[j] - ref) * (var[j] - ref);
      }
      const double residual = std::sqrt(ss / d);

      body = format_double(tv.value) + "," + format_double(tv.std_error) +
             "," + format_double(fit.on_var) + "," +
             format_double(fit.off_var) + "," +
             format_double(fit.mean.norm()) + "," + format_double(residual);
    } catch (const std::exception& e) {
      body = ",,,,,";
      error = sanitize_error(e.what());
    }
    out << prefix << body << ',' << format_double(elapsed_ms(start)) << ','
        << error << '\n';
    ++rows;
  }
  return rows;
}

CoveringSummary run_covering(const SweepOptions& opt, std::ostream& out) {
  opt.config.require_known_keys({"cloud_csv", "T", "c_eps", "C_cover"});
  const std::string path = opt.config.get_string("cloud_csv", "");
  if (path.empty())
    throw std::invalid_argument("covering requires cloud_csv = PATH");
  const int T = opt.config.get_int("T", 20);
  const double c_eps = opt.config.get_double("c_eps", 1.0);
  const double C_cover = opt.config.get_double("C_cover", 1.0);

  const auto cloud = PointCloud::from_matrix(read_numeric_csv(path));
  CoveringSummary summary;
  summary.eps = std::pow(double(T), -c_eps);
  const auto net = greedy_epsilon_net(cloud, summary.eps);
  summary.net_size = static_cast<int>(net.size());
  summary.estimate =
      std::log(double(net.size())) / (C_cover * std::log(double(T)));

  out << "rank,point_index,eps,net_size,estimate\n";
  for (size_t r = 0; r < net.size(); ++r) {
    out << r << ',' << net[r] << ',' << format_double(summary.eps) << ','
        << net.size() << ',' << format_double(summary.estimate) << '\n';
  }
  return summary;
}

}  // namespace ddpmlab

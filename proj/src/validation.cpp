#include "ddpmlab/validation.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>

#include "ddpmlab/analytic.hpp"
#include "ddpmlab/covering.hpp"
#include "ddpmlab/csv.hpp"
#include "ddpmlab/experiments.hpp"
#include "ddpmlab/metrics.hpp"
#include "ddpmlab/sampler.hpp"

namespace ddpmlab {

namespace oracle {

namespace {

double simpson_slice(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                            double fa, double b, double fb, double m,
                            double fm, double whole, double tol, int depth) {
  const double lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_slice(a, fa, m, fm, flm);
  const double right = simpson_slice(m, fm, b, fb, frm);
  if (depth > 50 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, tol / 2,
                              depth + 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, tol / 2,
                              depth + 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  // Pre-partition so narrow features cannot slip between the probe points
  // of a single wide panel.
  constexpr int kPanels = 64;
  double total = 0;
  for (int p = 0; p < kPanels; ++p) {
    const double pa = a + (b - a) * p / kPanels;
    const double pb = a + (b - a) * (p + 1) / kPanels;
    const double m = (pa + pb) / 2;
    const double fa = f(pa), fb = f(pb), fm = f(m);
    const double whole = simpson_slice(pa, fa, pb, fb, fm);
    total += adaptive_simpson_rec(f, pa, fa, pb, fb, m, fm, whole,
                                  tol / kPanels, 0);
  }
  return total;
}

double tv_1d_gaussians(double mean_p, double var_p, double mean_q,
                       double var_q) {
  const double sp = std::sqrt(var_p), sq = std::sqrt(var_q);
  const double smax = std::max(sp, sq);
  const double lo = std::min(mean_p, mean_q) - 20.0 * smax;
  const double hi = std::max(mean_p, mean_q) + 20.0 * smax;
  auto pdf = [](double x, double m, double s) {
    const double z = (x - m) / s;
    return std::exp(-0.5 * z * z) / (s * 2.5066282746310005024);
  };
  auto f = [&](double x) {
    return 0.5 * std::abs(pdf(x, mean_p, sp) - pdf(x, mean_q, sq));
  };
  return adaptive_simpson(f, lo, hi, 1e-10);
}

Eigen::ArrayXd log_space_alpha_bar(const Eigen::ArrayXd& beta) {
  Eigen::ArrayXd out(beta.size());
  double acc = 0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    acc += std::log1p(-beta[i]);
    out[i] = std::exp(acc);
  }
  return out;
}

Eigen::VectorXd finite_difference_score(const TargetDistribution& target,
                                        const Schedule<double>& s, int t,
                                        const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd fd(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    fd[j] = (log_density(target, s, t, xp) - log_density(target, s, t, xm)) /
            (2 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return fd;
}

}  // namespace oracle

namespace {

class Suite {
 public:
  void check(const std::string& name, bool pass, const std::string& detail) {
    results_.push_back({name, pass, detail});
  }

  template <typename T>
  static std::string str(const T& v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
  }

  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::vector<CheckResult> results_;
};

std::string rel_str(double measured, double bound) {
  return "measured " + format_double(measured) + ", bound " +
         format_double(bound);
}

double score_rel_err(const Eigen::VectorXd& approx,
                     const Eigen::VectorXd& exact) {
  return (approx - exact).norm() / std::max(1.0, exact.norm());
}

TargetDistribution test_mixture(int m, int d, std::uint64_t seed) {
  NormalStream rng(seed);
  Eigen::MatrixXd atoms(m, d);
  rng.fill(atoms);
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w[i] = 0.5 + std::abs(rng());
  w /= w.sum();
  return TargetDistribution::point_mixture(atoms, w);
}

void check_schedules(Suite& s) {
  {
    const auto warmup = make_warmup_schedule<double>(1000);
    const auto linear = make_linear_schedule<double>(1000);
    double worst = 0;
    for (const auto* sched : {&warmup, &linear}) {
      const auto ls = oracle::log_space_alpha_bar(sched->betas());
      worst = std::max(
          worst,
          ((sched->alpha_bars() - ls).abs() / sched->alpha_bars()).maxCoeff());
    }
    s.check("schedules.log_space_alpha_bar_agreement", worst < 1e-12,
            rel_str(worst, 1e-12));
  }
  {
    bool ok = true;
    double worst_alpha = 1, worst_ratio = 0, worst_bound = 0;
    for (int T : {100, 1000}) {
      const auto sched = make_warmup_schedule<double>(T);
      const double bound = 8.0 * 4.0 * std::log(double(T)) / double(T);
      worst_alpha = std::min(worst_alpha, sched.alphas().minCoeff());
      for (int t = 2; t <= T; ++t) {
        const double r = (1 - sched.alpha(t)) /
                         (sched.alpha(t) - sched.alpha_bar(t));
        if (r > worst_ratio) {
          worst_ratio = r;
          worst_bound = bound;
        }
        ok = ok && r <= bound;
      }
    }
    ok = ok && worst_alpha >= 0.5;
    s.check("schedules.warmup_step_size_bounds", ok,
            "min alpha " + format_double(worst_alpha) + ", max ratio " +
                format_double(worst_ratio) + " vs 8 c1 log T / T = " +
                format_double(worst_bound));
  }
  {
    const auto warmup = make_warmup_schedule<double>(500);
    const auto linear = make_linear_schedule<double>(500);
    bool strict = true;
    for (const auto* sched : {&warmup, &linear}) {
      const auto star = star_design(*sched);
      for (int t = 2; t <= sched->steps(); ++t)
        strict = strict && star.sigma2(t) < 1 - sched->alpha(t);
    }
    s.check("schedules.star_sigma2_strictly_below_simple", strict,
            "sigma*_t^2 < 1 - alpha_t for all t >= 2");
  }
  {
    const auto sched = make_warmup_schedule<double>(300);
    const auto star = star_design(sched);
    const auto same = perturbed_design(star, 0.0, 1.0);
    const bool bitwise = (same.etas() == star.etas()).all() &&
                         (same.sigma2s() == star.sigma2s()).all();
    s.check("schedules.perturbed_identity_bitwise", bitwise,
            "perturbed_design(d, 0, 1) == d");
  }
}

void check_targets(Suite& s) {
  const auto sched = make_linear_schedule<double>(100);
  const auto mixture = test_mixture(5, 8, 21u);
  const auto gauss = TargetDistribution::degenerate_gaussian(3, 7);
  {
    double worst = 0;
    for (const auto* target : {&mixture, &gauss}) {
      for (int t : {2, 50, 100}) {
        const auto pts =
            forward_marginal_sample(*target, sched, t, 100, 77u + t);
        for (int i = 0; i < pts.rows(); ++i) {
          const Eigen::VectorXd x = pts.row(i);
          const auto fd =
              oracle::finite_difference_score(*target, sched, t, x, 1e-5);
          worst = std::max(
              worst, score_rel_err(fd, exact_score(*target, sched, t, x)));
        }
      }
    }
    s.check("targets.score_matches_logdensity_gradient", worst < 1e-5,
            rel_str(worst, 1e-5));
  }
  {
    double worst = 0;
    NormalStream rng(5u);
    for (int rep = 0; rep < 200; ++rep) {
      const int t = 1 + (rep % sched.steps());
      Eigen::VectorXd x(mixture.dim());
      rng.fill(x);
      x *= 2.0;
      const double abar = sched.alpha_bar(t);
      const Eigen::VectorXd via_pm =
          -(x - std::sqrt(abar) * posterior_mean(mixture, sched, t, x)) /
          (1 - abar);
      worst = std::max(
          worst, (exact_score(mixture, sched, t, x) - via_pm).norm());
    }
    s.check("targets.posterior_mean_score_identity", worst < 1e-12,
            rel_str(worst, 1e-12));
  }
  {
    Eigen::MatrixXd atom(1, 3);
    atom << 0.7, -1.2, 0.4;
    const auto single =
        TargetDistribution::point_mixture(atom, Eigen::VectorXd::Ones(1));
    double worst = 0;
    NormalStream rng(9u);
    for (int rep = 0; rep < 50; ++rep) {
      const int t = 1 + (rep % sched.steps());
      Eigen::VectorXd x(3);
      rng.fill(x);
      const double abar = sched.alpha_bar(t);
      const Eigen::VectorXd expected =
          -(x - std::sqrt(abar) * atom.row(0).transpose()) / (1 - abar);
      worst = std::max(worst,
                       (exact_score(single, sched, t, x) - expected).norm());
      worst = std::max(
          worst,
          (posterior_mean(single, sched, t, x) - atom.row(0).transpose())
              .norm());
    }
    s.check("targets.tweedie_single_atom", worst < 1e-9, rel_str(worst, 1e-9));
  }
  {
    // Sample second moments vs the density's implied diagonal covariance.
    const int n = 100000;
    double worst_z = 0;
    for (const auto* target : {&gauss, &mixture}) {
      const int t = 60, d = target->dim();
      const double abar = sched.alpha_bar(t);
      const auto sample = forward_marginal_sample(*target, sched, t, n, 13u);
      Eigen::VectorXd implied(d);
      if (target->kind() == TargetKind::DegenerateGaussian) {
        for (int j = 0; j < d; ++j)
          implied[j] = j < target->intrinsic_dim() ? 1.0 : 1 - abar;
      } else {
        const Eigen::VectorXd mean_atom =
            target->atoms().transpose() * target->weights();
        for (int j = 0; j < d; ++j) {
          const double ex2 =
              target->atoms().col(j).array().square().matrix().dot(
                  target->weights());
          implied[j] =
              abar * (ex2 - mean_atom[j] * mean_atom[j]) + (1 - abar);
        }
      }
      const Eigen::RowVectorXd mean = sample.colwise().mean();
      for (int j = 0; j < d; ++j) {
        const Eigen::ArrayXd c = sample.col(j).array() - mean[j];
        const double m2 = (c * c).mean();
        const double m4 = (c * c * c * c).mean();
        const double se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
        worst_z = std::max(worst_z, std::abs(m2 - implied[j]) / se);
      }
    }
    s.check("targets.forward_moments_match_density", worst_z < 5,
            "worst |z| " + format_double(worst_z) + " vs 5");
  }
  {
    const auto target = TargetDistribution::degenerate_gaussian(2, 6);
    const auto sched40 = make_linear_schedule<double>(40);
    const auto zero = make_perturbed_oracle(target, sched40, 0.0,
                                            PerturbationModel::ConstantBias,
                                            3u);
    const auto bias = make_perturbed_oracle(target, sched40, 0.1,
                                            PerturbationModel::ConstantBias,
                                            3u);
    const auto field = make_perturbed_oracle(target, sched40, 0.1,
                                             PerturbationModel::RandomField,
                                             3u);
    NormalStream rng(31u);
    bool zero_ok = true;
    double worst_norm = 0;
    double sum_sq = 0;
    int count = 0;
    for (int t = 1; t <= 40; ++t) {
      for (int rep = 0; rep < 25; ++rep) {
        Eigen::VectorXd x(6);
        rng.fill(x);
        const Eigen::VectorXd exact = exact_score(target, sched40, t, x);
        zero_ok = zero_ok && (zero.eval(t, x) == exact);
        const double nb = (bias.eval(t, x) - exact).norm();
        const double nf = (field.eval(t, x) - exact).norm();
        worst_norm = std::max({worst_norm, std::abs(nb - 0.1),
                               std::abs(nf - 0.1)});
        sum_sq += nb * nb;
        ++count;
      }
    }
    const double eps_score = std::sqrt(sum_sq / count);
    s.check("targets.perturbed_oracle_eps_score",
            zero_ok && worst_norm < 1e-10 && std::abs(eps_score - 0.1) < 1e-10,
            "eps=0 pointwise exact; pointwise error norm dev " +
                format_double(worst_norm) + "; MC eps_score " +
                format_double(eps_score));
  }
}

void check_sampler(Suite& s) {
  const auto sched = make_linear_schedule<double>(100);
  const auto target = TargetDistribution::degenerate_gaussian(2, 8);
  const auto star = star_design(sched);
  const auto oracle_fn = exact_oracle(target, sched);
  {
    ReverseRunConfig cfg{sched, star, oracle_fn, 8, 500, 1, 42u, false, 1};
    const auto a = run_reverse(cfg);
    const auto b = run_reverse(cfg);
    s.check("sampler.determinism_bitwise",
            (a.ensemble.array() == b.ensemble.array()).all(),
            "two runs, same config");
    cfg.threads = 3;
    const auto c = run_reverse(cfg);
    s.check("sampler.partition_independence",
            (a.ensemble.array() == c.ensemble.array()).all(),
            "threads=1 vs threads=3");
  }
  {
    auto count = std::make_shared<std::atomic<long>>(0);
    ScoreOracle counting(
        [count, &sched, &target](int t, Eigen::Ref<const Eigen::VectorXd> x,
                                 Eigen::Ref<Eigen::VectorXd> out) {
          count->fetch_add(1);
          out = exact_score(target, sched, t, x);
        },
        "exact");
    ReverseRunConfig cfg{sched, star, counting, 8, 7, 1, 4u, false, 1};
    run_reverse(cfg);
    const long evals_stop1 = count->load();
    count->store(0);
    cfg.stop_t = 0;
    run_reverse(cfg);
    const long evals_stop0 = count->load();
    s.check("sampler.score_eval_count",
            evals_stop1 == 7 * 99 && evals_stop0 == 7 * 100,
            "n(T - stop_t): got " + Suite::str(evals_stop1) + " and " +
                Suite::str(evals_stop0));
  }
  {
    ReverseRunConfig cfg{sched, star, oracle_fn, 8, 20000, 1, 7u, false, 1};
    const auto run = run_reverse(cfg);
    const auto mom = empirical_block_moments(run.ensemble, 2);
    const auto law = propagate_reverse_law(sched, star, 2, 8, 1);
    const int n = 20000;
    const double se_on = law.on_var * std::sqrt(2.0 / (n * 2.0));
    const double se_off = law.off_var * std::sqrt(2.0 / (n * 6.0));
    const double se_cross =
        std::sqrt(law.on_var * law.off_var / double(n - 1));
    const bool ok = std::abs(mom.on_var - law.on_var) < 5 * se_on &&
                    std::abs(mom.off_var - law.off_var) < 5 * se_off &&
                    mom.cross_max < 5 * se_cross;
    s.check("sampler.moments_match_analytic_law", ok,
            "on z " +
                format_double(std::abs(mom.on_var - law.on_var) / se_on) +
                ", off z " +
                format_double(std::abs(mom.off_var - law.off_var) / se_off) +
                ", cross_max/se " + format_double(mom.cross_max / se_cross));
  }
}

void check_analytic(Suite& s) {
  {
    const auto warmup = make_warmup_schedule<double>(1000);
    const auto linear = make_linear_schedule<double>(1000);
    double worst_rel = 0, worst_off = 0;
    for (const auto* sched : {&warmup, &linear}) {
      const auto star = star_design(*sched);
      for (int t = 2; t <= sched->steps(); ++t) {
        const double rho = (1 - sched->alpha_bar(t - 1)) /
                           (1 - sched->alpha_bar(t));
        const double sa = std::sqrt(sched->alpha(t));
        const double m_x = sa * rho;
        const double v_x = (1 - sched->alpha(t)) * rho;
        const double m_y =
            (1 - star.eta(t) / (1 - sched->alpha_bar(t))) / sa;
        const double v_y = star.sigma2(t) / sched->alpha(t);
        worst_rel = std::max({worst_rel, std::abs(m_x - m_y) / m_x,
                              std::abs(v_x - v_y) / v_x});
        worst_off = std::max(
            worst_off,
            conditional_step_kl_parts(*sched, star, t, 8, 64).off);
      }
    }
    s.check("analytic.star_off_support_exact",
            worst_rel < 1e-10 && worst_off < 1e-16,
            "worst factor rel err " + format_double(worst_rel) +
                ", worst off-KL " + format_double(worst_off));
  }
  {
    const auto sched = make_linear_schedule<double>(200);
    const int T = 200;
    CoefficientDesign<double> frozen(Eigen::ArrayXd::Zero(T),
                                     Eigen::ArrayXd::Zero(T));
    const auto law = propagate_reverse_law(sched, frozen, 2, 6, 1);
    const double expected = sched.alpha_bar(1) / sched.alpha_bar(T);
    const double rel = std::abs(law.on_var - expected) / expected;
    const double rel2 = std::abs(law.off_var - expected) / expected;
    s.check("analytic.zero_design_pure_rescaling",
            rel < 1e-12 && rel2 < 1e-12, rel_str(std::max(rel, rel2), 1e-12));
  }
  {
    const auto sched = make_warmup_schedule<double>(100);
    const auto star = star_design(sched);
    double worst = 0;
    bool d_free = true;
    for (int t : {2, 17, 50, 100}) {
      const double closed =
          8 * variance_mismatch_kl(sched.alpha(t) * (1 - sched.alpha(t)) /
                                   star.sigma2(t));
      const double via_parts = conditional_step_kl(sched, star, t, 8, 16);
      worst = std::max(worst, std::abs(via_parts - closed) /
                                  std::max(closed, 1e-300));
      d_free = d_free && std::abs(conditional_step_kl(sched, star, t, 8, 16) -
                                  conditional_step_kl(sched, star, t, 8, 64)) <
                             1e-18;
    }
    s.check("analytic.star_step_kl_closed_form", worst < 1e-12 && d_free,
            "rel err " + format_double(worst) + "; d-independent at star");
  }
  {
    // MC cross-check of the expected conditional KL at one (t, design):
    // x_t ~ q_t, per-sample conditional-Gaussian KL, averaged.
    const auto sched = make_warmup_schedule<double>(50);
    const auto design = simple_design(sched);
    const int t = 7, k = 3, d = 9, n = 40000;
    const double alpha = sched.alpha(t), abar = sched.alpha_bar(t);
    const double rho = (1 - sched.alpha_bar(t - 1)) / (1 - abar);
    const double v_y = design.sigma2(t) / alpha;
    const double m_x_on = std::sqrt(alpha), v_x_on = 1 - alpha;
    const double m_x_off = std::sqrt(alpha) * rho,
                 v_x_off = (1 - alpha) * rho;
    const double m_y_on = (1 - design.eta(t)) / std::sqrt(alpha);
    const double m_y_off =
        (1 - design.eta(t) / (1 - abar)) / std::sqrt(alpha);
    const double g_on = variance_mismatch_kl(v_x_on / v_y);
    const double g_off = variance_mismatch_kl(v_x_off / v_y);
    NormalStream rng(2024u);
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
      double kl = 0;
      for (int j = 0; j < d; ++j) {
        const bool on = j < k;
        const double x = (on ? 1.0 : std::sqrt(1 - abar)) * rng();
        const double dm = (on ? m_x_on - m_y_on : m_x_off - m_y_off) * x;
        kl += dm * dm / (2 * v_y) + (on ? g_on : g_off);
      }
      sum += kl;
      sumsq += kl * kl;
    }
    const double mc = sum / n;
    const double se =
        std::sqrt((sumsq - sum * sum / n) / double(n - 1) / double(n));
    const double exact = conditional_step_kl(sched, design, t, k, d);
    s.check("analytic.step_kl_mc_crosscheck",
            std::abs(mc - exact) < 5 * se,
            "|mc - exact| = " + format_double(std::abs(mc - exact)) +
                ", 5 se = " + format_double(5 * se));
  }
  {
    const auto sched = make_warmup_schedule<double>(100);
    const auto star = star_design(sched);
    double min_margin = 1e300;
    for (int t : {2, 50, 100}) {
      for (int ie = 0; ie < 21; ++ie) {
        for (int is = 0; is < 21; ++is) {
          const double shift = -0.05 + 0.1 * ie / 20.0;
          const double scale = 0.5 + 1.5 * is / 20.0;
          const auto design = perturbed_design(star, shift, scale);
          const double kl = conditional_step_kl(sched, design, t, 8, 64);
          const double lb = step_kl_lower_bound(sched, design, t, 64);
          min_margin = std::min(min_margin, kl - lb);
        }
      }
    }
    s.check("analytic.step_kl_dominance_grid", min_margin >= -1e-12,
            "min(step_kl - lower_bound) = " + format_double(min_margin));
  }
  {
    bool ok = true;
    double worst_gap = 0;
    for (int i = 0; i < 10000; ++i) {
      const double z = std::pow(10.0, -6.0 + 12.0 * i / 9999.0);
      const double lhs = 2 * variance_mismatch_kl(z);
      const double rhs = 0.1 * std::min(1.0, (z - 1) * (z - 1));
      ok = ok && lhs >= rhs;
      worst_gap = std::min(worst_gap, lhs - rhs);
    }
    s.check("analytic.g_inequality", ok,
            "z - log z - 1 >= 0.1 min{1,(z-1)^2} on 1e4 log-spaced z");
  }
  {
    bool ok = true;
    std::string worst;
    for (const std::string sched_name : {"warmup", "linear"}) {
      for (int T : {100, 1000}) {
        const auto sched = sched_name == "warmup"
                               ? make_warmup_schedule<double>(T)
                               : make_linear_schedule<double>(T);
        for (int d : {16, 256}) {
          for (int k : {4, 8}) {
            for (const std::string design_name : {"star", "simple"}) {
              const auto design = design_name == "star"
                                      ? star_design(sched)
                                      : simple_design(sched);
              const auto chain = chain_kl_upper_bound(sched, design, k, d);
              const double exact = diag_gaussian_kl(
                  forward_marginal_law(sched, 1, k, d),
                  propagate_reverse_law(sched, design, k, d, 1));
              if (chain.total < exact) {
                ok = false;
                worst = sched_name + " " + design_name;
              }
            }
          }
        }
      }
    }
    s.check("analytic.chain_bound_dominates_terminal_kl", ok,
            ok ? "total >= KL(q1||p1) on all combos" : "violated: " + worst);
  }
  {
    const auto sched = make_warmup_schedule<double>(1000);
    const double init =
        56 * variance_mismatch_kl(1 - sched.alpha_bar(1000));
    s.check("analytic.init_kl_small", init < 1e-6, rel_str(init, 1e-6));
  }
}

void check_metrics(Suite& s) {
  {
    const DiagGaussianLaw<double> p{3, 10, 1.4, 0.6};
    const DiagGaussianLaw<double> q{3, 10, 0.9, 1.2};
    const DiagGaussianLaw<double> ps{7, 10, 0.6, 1.4};
    const DiagGaussianLaw<double> qs{7, 10, 1.2, 0.9};
    const auto a = mc_tv_diag_gaussians(p, q, 50000, 88u);
    const auto b = mc_tv_diag_gaussians(ps, qs, 50000, 88u);
    const double tol = 4 * std::hypot(a.std_error, b.std_error);
    s.check("metrics.tv_block_swap_symmetry",
            std::abs(a.value - b.value) < tol,
            "diff " + format_double(std::abs(a.value - b.value)) + ", tol " +
                format_double(tol));
  }
  {
    const DiagGaussianLaw<double> p{2, 6, 1.5, 0.8};
    const DiagGaussianLaw<double> q{2, 6, 1.0, 1.0};
    double scaled[3];
    int i = 0;
    for (int n : {1000, 10000, 100000}) {
      const auto est = mc_tv_diag_gaussians(p, q, n, 5u);
      scaled[i++] = est.std_error * std::sqrt(double(n));
    }
    const double ratio = std::max({scaled[0], scaled[1], scaled[2]}) /
                         std::min({scaled[0], scaled[1], scaled[2]});
    s.check("metrics.tv_stderr_scaling", ratio < 2,
            "stderr*sqrt(n) spread factor " + format_double(ratio));
  }
  {
    NormalStream rng(17u);
    bool ok = true;
    double worst_z = 0;
    for (int rep = 0; rep < 20; ++rep) {
      const double vp = std::exp(rng() * 0.6), vq = std::exp(rng() * 0.6);
      const DiagGaussianLaw<double> p{1, 1, vp, 1.0};
      const DiagGaussianLaw<double> q{1, 1, vq, 1.0};
      const auto mc = mc_tv_diag_gaussians(p, q, 20000, 100u + rep);
      const double quad = oracle::tv_1d_gaussians(0, vp, 0, vq);
      const double z = std::abs(mc.value - quad) /
                       std::max(mc.std_error, 1e-300);
      worst_z = std::max(worst_z, z);
      ok = ok && z < 4;
    }
    s.check("metrics.tv_matches_quadrature_1d", ok,
            "worst |mc - quad|/stderr " + format_double(worst_z));
  }
  {
    NormalStream rng(71u);
    bool ok = true;
    for (int rep = 0; rep < 100; ++rep) {
      const int d = 2 + (rep % 7);
      const int k = 1 + (rep % d);
      DiagGaussianLaw<double> p{k, d, std::exp(rng() * 0.5),
                                std::exp(rng() * 0.5)};
      DiagGaussianLaw<double> q{k, d, std::exp(rng() * 0.5),
                                std::exp(rng() * 0.5)};
      const auto mc = mc_tv_diag_gaussians(p, q, 20000, 500u + rep);
      const double pinsker = std::sqrt(0.5 * diag_gaussian_kl(p, q));
      ok = ok && mc.value <= pinsker + 4 * mc.std_error;
    }
    s.check("metrics.pinsker_bound", ok,
            "TV <= sqrt(KL/2) + 4 stderr on 100 random pairs");
  }
}

void check_covering(Suite& s) {
  NormalStream rng(23u);
  Eigen::MatrixXd pts(2000, 10);
  for (int i = 0; i < 2000; ++i)
    for (int j = 0; j < 10; ++j)
      pts(i, j) = j < 2 ? std::abs(rng()) : 0.0;  // planar cloud
  const auto cloud = PointCloud::from_matrix(pts);
  {
    bool covered = true;
    double worst = 0;
    for (double eps : {0.05, 0.2}) {
      const auto net = greedy_epsilon_net(cloud, eps);
      for (int i = 0; i < pts.rows(); ++i) {
        double best = 1e300;
        for (int c : net)
          best = std::min(best,
                          (pts.row(i) - pts.row(c)).norm());
        worst = std::max(worst, best - eps);
        covered = covered && best <= eps;
      }
    }
    s.check("covering.net_covers_brute_force", covered,
            "max(dist - eps) = " + format_double(worst));
  }
  {
    bool mono = true;
    size_t prev = SIZE_MAX;
    for (double eps : {0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
      const size_t sz = greedy_epsilon_net(cloud, eps).size();
      mono = mono && sz <= prev;
      prev = sz;
    }
    s.check("covering.net_size_monotone_in_eps", mono,
            "net size non-increasing over eps grid");
  }
  {
    Eigen::MatrixXd wide(pts.rows(), 25);
    wide.setZero();
    wide.leftCols(10) = pts;
    const auto padded = PointCloud::from_matrix(wide);
    const bool same =
        greedy_epsilon_net(cloud, 0.1) == greedy_epsilon_net(padded, 0.1) &&
        intrinsic_dim_estimate(cloud, 20, 1.0, 1.0) ==
            intrinsic_dim_estimate(padded, 20, 1.0, 1.0);
    s.check("covering.embedding_invariance", same,
            "zero-padding leaves net and estimate unchanged");
  }
}

void check_experiments(Suite& s) {
  const char* cfg_text =
      "schedule = linear\nT_list = 50,100\nd_list = 10,20\nk = 4\n"
      "tv_samples = 2000\n";
  SweepOptions opt{Config::from_string(cfg_text), 99u, 1};
  {
    std::ostringstream a, b;
    run_figure1_sweep(opt, a);
    run_figure1_sweep(opt, b);
    auto strip_runtime = [](const std::string& text) {
      std::istringstream in(text);
      std::string line, out;
      while (std::getline(in, line)) {
        const auto fields = split_csv_line(line);
        for (size_t i = 0; i < fields.size(); ++i) {
          if (i) out += ',';
          out += (i == 12 && fields[i] != "runtime_ms") ? "" : fields[i];
        }
        out += '\n';
      }
      return out;
    };
    s.check("experiments.sweep_determinism",
            strip_runtime(a.str()) == strip_runtime(b.str()),
            "two runs identical up to runtime_ms");
  }
  {
    std::ostringstream a;
    SweepOptions threaded = opt;
    threaded.threads = 3;
    run_figure1_sweep(threaded, a);
    std::ostringstream b;
    run_figure1_sweep(opt, b);
    auto strip_runtime = [](const std::string& text) {
      std::istringstream in(text);
      std::string line, out;
      while (std::getline(in, line)) {
        const auto fields = split_csv_line(line);
        for (size_t i = 0; i < fields.size(); ++i) {
          if (i) out += ',';
          out += (i == 12 && fields[i] != "runtime_ms") ? "" : fields[i];
        }
        out += '\n';
      }
      return out;
    };
    s.check("experiments.sweep_order_independent",
            strip_runtime(a.str()) == strip_runtime(b.str()),
            "threads=3 rows equal threads=1 rows");
  }
  {
    std::ostringstream a;
    run_figure1_sweep(opt, a);
    std::string header;
    std::istringstream in(a.str());
    std::getline(in, header);
    s.check("experiments.csv_schema_stable",
            header ==
                "design_name,schedule_name,T,d,k,eps_score,seed,kl_exact,"
                "tv_estimate,tv_stderr,step_kl_sum,init_kl,runtime_ms,error",
            header);
  }
  {
    bool threw = false;
    try {
      SweepOptions bad{Config::from_string("bogus_key = 1\n"), 1u, 1};
      std::ostringstream sink;
      run_figure1_sweep(bad, sink);
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    s.check("experiments.unknown_config_key_rejected", threw,
            "unknown keys are an error");
  }
}

}  // namespace

std::vector<CheckResult> run_validation() {
  Suite s;
  check_schedules(s);
  check_targets(s);
  check_sampler(s);
  check_analytic(s);
  check_metrics(s);
  check_covering(s);
  check_experiments(s);
  return s.take();
}

bool run_validation_report(std::ostream& out) {
  bool all = true;
  for (const auto& r : run_validation()) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.pass;
  }
  out << (all ? "validation: all invariants hold\n"
              : "validation: FAILURES present\n");
  return all;
}

}  // namespace ddpmlab

#include <doctest.h>

#include <cmath>

#include "ddpmlab/analytic.hpp"
#include "ddpmlab/rng.hpp"

using namespace ddpmlab;

TEST_CASE("variance mismatch kl") {
  CHECK(variance_mismatch_kl(1.0) == 0.0);
  CHECK(variance_mismatch_kl(2.0) ==
        doctest::Approx(0.1534264097200273).epsilon(1e-15));
  CHECK_THROWS_AS(variance_mismatch_kl(0.0), std::invalid_argument);
  CHECK_THROWS_AS(variance_mismatch_kl(-1.0), std::invalid_argument);

  // Series and direct evaluation agree across the switchover.
  for (double u : {9.9e-5, 1.000001e-4, 5e-5, -9.9e-5, -1.000001e-4}) {
    const double direct = ((1 + u) - std::log1p(u) - 1) / 2;
    CHECK(variance_mismatch_kl(1 + u) ==
          doctest::Approx(direct).epsilon(1e-6));
  }
  // Non-negativity on a wide log grid.
  for (int i = 0; i <= 1000; ++i) {
    const double r = std::pow(10.0, -8.0 + 16.0 * i / 1000.0);
    CHECK(variance_mismatch_kl(r) >= 0.0);
  }
}

TEST_CASE("forward marginal law") {
  const auto s = make_warmup_schedule<double>(1000);
  for (int t : {1, 500, 1000}) {
    const auto law = forward_marginal_law(s, t, 3, 10);
    CHECK(law.on_var == 1.0);
    CHECK(law.off_var == 1 - s.alpha_bar(t));
  }
  CHECK(forward_marginal_law(s, 1000, 3, 10).off_var > 1 - 1e-3);
  const auto full = forward_marginal_law(s, 7, 10, 10);
  CHECK(full.on_var == 1.0);
  CHECK_THROWS_AS(forward_marginal_law(s, 0, 3, 10), std::out_of_range);
  CHECK_THROWS_AS(forward_marginal_law(s, 1, 11, 10), std::invalid_argument);
}

TEST_CASE("propagate reverse law") {
  const auto s = make_warmup_schedule<double>(1000);
  const auto star = star_design(s);
  {
    // Star keeps the off-support block on the forward law.
    const auto law = propagate_reverse_law(s, star, 8, 64, 1);
    const double forward_off = 1 - s.alpha_bar(1);
    CHECK(std::abs(law.off_var - forward_off) / forward_off < 1e-10);
    CHECK(law.on_var < 1.0);
    CHECK(law.on_var > 0.5);
  }
  {
    // eta = sigma = 0: pure rescaling of N(0, I).
    CoefficientDesign<double> frozen(Eigen::ArrayXd::Zero(1000),
                                     Eigen::ArrayXd::Zero(1000));
    for (int stop : {1, 7}) {
      const auto law = propagate_reverse_law(s, frozen, 8, 64, stop);
      const double expected = s.alpha_bar(stop) / s.alpha_bar(1000);
      CHECK(law.on_var == doctest::Approx(expected).epsilon(1e-12));
      CHECK(law.off_var == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  {
    CoefficientDesign<double> wild(Eigen::ArrayXd::Constant(1000, -1e8),
                                   Eigen::ArrayXd::Zero(1000));
    CHECK_THROWS_AS(propagate_reverse_law(s, wild, 8, 64, 1),
                    std::overflow_error);
    CHECK_THROWS_AS(propagate_reverse_law(s, star, 8, 64, 0),
                    std::out_of_range);
  }
}

TEST_CASE("diag gaussian kl") {
  const DiagGaussianLaw<double> p{3, 8, 1.3, 0.7};
  CHECK(diag_gaussian_kl(p, p) == 0.0);

  const DiagGaussianLaw<double> one{1, 1, 2.0, 1.0};
  const DiagGaussianLaw<double> std1{1, 1, 1.0, 1.0};
  CHECK(diag_gaussian_kl(one, std1) ==
        doctest::Approx(0.1534264097200273).epsilon(1e-15));

  NormalStream rng(4u);
  for (int i = 0; i < 10000; ++i) {
    const DiagGaussianLaw<double> a{2, 5, std::exp(rng()), std::exp(rng())};
    const DiagGaussianLaw<double> b{2, 5, std::exp(rng()), std::exp(rng())};
    CHECK(diag_gaussian_kl(a, b) >= 0.0);
  }

  const DiagGaussianLaw<double> other{2, 8, 1.0, 1.0};
  CHECK_THROWS_AS(diag_gaussian_kl(p, other), std::invalid_argument);
}

TEST_CASE("conditional step kl at the star design") {
  const auto s = make_warmup_schedule<double>(100);
  const auto star = star_design(s);
  for (int t : {2, 31, 50, 100}) {
    const auto parts = conditional_step_kl_parts(s, star, t, 8, 64);
    CHECK(parts.off <= 1e-16);
    const double closed =
        8 * variance_mismatch_kl(s.alpha(t) * (1 - s.alpha(t)) /
                                 star.sigma2(t));
    CHECK(parts.on == doctest::Approx(closed).epsilon(1e-12));
    CHECK(parts.total() > 0.0);
    // Ambient-dimension independence at the star point.
    CHECK(std::abs(conditional_step_kl(s, star, t, 8, 16) -
                   conditional_step_kl(s, star, t, 8, 512)) < 1e-14);
  }
  CHECK_THROWS_AS(conditional_step_kl(s, star, 1, 8, 64), std::out_of_range);
  const auto zero_sigma = CoefficientDesign<double>(
      star.etas(), Eigen::ArrayXd::Zero(100));
  CHECK_THROWS_AS(conditional_step_kl(s, zero_sigma, 2, 8, 64),
                  std::invalid_argument);
}

TEST_CASE("conditional step kl MC cross-check") {
  // Sample x_t ~ q_t and average the per-sample conditional-Gaussian KL.
  const auto s = make_linear_schedule<double>(60);
  const auto design = perturbed_design(star_design(s), 0.013, 1.4);
  const int t = 12, k = 2, d = 7, n = 30000;
  const double alpha = s.alpha(t), abar = s.alpha_bar(t);
  const double rho = (1 - s.alpha_bar(t - 1)) / (1 - abar);
  const double v_y = design.sigma2(t) / alpha;
  const double dm_on =
      std::sqrt(alpha) - (1 - design.eta(t)) / std::sqrt(alpha);
  const double dm_off = std::sqrt(alpha) * rho -
                        (1 - design.eta(t) / (1 - abar)) / std::sqrt(alpha);
  const double g_on = variance_mismatch_kl((1 - alpha) / v_y);
  const double g_off = variance_mismatch_kl((1 - alpha) * rho / v_y);
  NormalStream rng(77u);
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    double kl = 0;
    for (int j = 0; j < d; ++j) {
      const bool on = j < k;
      const double x = (on ? 1.0 : std::sqrt(1 - abar)) * rng();
      const double dm = (on ? dm_on : dm_off) * x;
      kl += dm * dm / (2 * v_y) + (on ? g_on : g_off);
    }
    sum += kl;
    sumsq += kl * kl;
  }
  const double mc = sum / n;
  const double se =
      std::sqrt((sumsq - sum * sum / n) / double(n - 1) / double(n));
  const double exact = conditional_step_kl(s, design, t, k, d);
  CHECK(std::abs(mc - exact) < 5 * se);
}

TEST_CASE("per-step KL lower bound") {
  const auto s = make_warmup_schedule<double>(100);
  const auto star = star_design(s);
  for (int t : {2, 50, 100}) {
    CHECK(step_kl_lower_bound(s, star, t, 64) == 0.0);
    const auto shifted = perturbed_design(star, 0.1, 1.0);
    CHECK(step_kl_lower_bound(s, shifted, t, 64) ==
          doctest::Approx(64 * 0.0025).epsilon(1e-12));
    const auto scaled = perturbed_design(star, 0.0, 2.0);
    // sigma*^2/sigma^2 = 1/4 so the bound is d/40 (3/4)^2.
    CHECK(step_kl_lower_bound(s, scaled, t, 64) ==
          doctest::Approx(64.0 / 40 * 0.5625).epsilon(1e-12));
  }
  CHECK_THROWS_AS(step_kl_lower_bound(s, star, 1, 64), std::out_of_range);

  // Dominance on the full grid (spot check beyond the validation suite).
  double min_margin = 1e300;
  for (int t : {2, 50, 100}) {
    for (int ie = 0; ie <= 20; ++ie) {
      for (int is = 0; is <= 20; ++is) {
        const auto design = perturbed_design(star, -0.05 + 0.005 * ie,
                                             0.5 + 0.075 * is);
        min_margin = std::min(
            min_margin, conditional_step_kl(s, design, t, 8, 64) -
                            step_kl_lower_bound(s, design, t, 64));
      }
    }
  }
  CHECK(min_margin >= -1e-12);
}

TEST_CASE("step kl increases away from the star eta") {
  const auto s = make_warmup_schedule<double>(100);
  const auto star = star_design(s);
  for (int t : {2, 50}) {
    double prev_neg = 1e300, prev_pos = 0;
    for (int i = 0; i <= 10; ++i) {
      const double shift = -0.05 + 0.005 * i;  // -0.05 .. 0
      const double kl =
          conditional_step_kl(s, perturbed_design(star, shift, 1.0), t, 8, 64);
      CHECK(kl < prev_neg);
      prev_neg = kl;
    }
    for (int i = 0; i <= 10; ++i) {
      const double shift = 0.005 * i;  // 0 .. 0.05
      const double kl =
          conditional_step_kl(s, perturbed_design(star, shift, 1.0), t, 8, 64);
      if (i > 0) CHECK(kl > prev_pos);
      prev_pos = kl;
    }
  }
}

TEST_CASE("doubling the ambient dimension barely moves the star KL") {
  const auto s = make_warmup_schedule<double>(200);
  const auto star = star_design(s);
  const double kl64 =
      diag_gaussian_kl(forward_marginal_law(s, 1, 8, 64),
                       propagate_reverse_law(s, star, 8, 64, 1));
  const double kl128 =
      diag_gaussian_kl(forward_marginal_law(s, 1, 8, 128),
                       propagate_reverse_law(s, star, 8, 128, 1));
  CHECK(std::abs(kl128 - kl64) / kl64 < 0.10);
}

TEST_CASE("core types instantiate for other scalars") {
  const auto s = make_warmup_schedule<float>(100);
  const auto star = star_design(s);
  const auto law = propagate_reverse_law(s, star, 4, 16, 1);
  const auto q1 = forward_marginal_law(s, 1, 4, 16);
  const float kl = diag_gaussian_kl(q1, law);
  CHECK(kl >= 0.0f);
  CHECK(std::isfinite(conditional_step_kl(s, star, 50, 4, 16)));
  CHECK(step_kl_lower_bound(s, star, 50, 16) == 0.0f);

  // Long double agrees with double where double is already exact.
  const auto sd = make_linear_schedule<long double>(2, 0.5L, 0.5L);
  CHECK(sd.alpha_bar(2) == 0.25L);
}

TEST_CASE("chain kl upper bound") {
  const auto s = make_warmup_schedule<double>(1000);
  {
    const auto chain = chain_kl_upper_bound(s, star_design(s), 16, 16);
    CHECK(chain.init_kl == 0.0);  // k = d: q_T is exactly standard normal
  }
  {
    const auto chain = chain_kl_upper_bound(s, star_design(s), 8, 64);
    CHECK(chain.init_kl < 1e-6);
    CHECK(chain.total == chain.init_kl + chain.step_sum);
  }
  for (const bool use_star : {true, false}) {
    const auto design = use_star ? star_design(s) : simple_design(s);
    const auto chain = chain_kl_upper_bound(s, design, 8, 64);
    const double exact =
        diag_gaussian_kl(forward_marginal_law(s, 1, 8, 64),
                         propagate_reverse_law(s, design, 8, 64, 1));
    CHECK(chain.total >= exact);
  }
}

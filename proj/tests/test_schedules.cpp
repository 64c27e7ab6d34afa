#include <doctest.h>

#include <cmath>

#include "ddpmlab/schedule.hpp"
#include "ddpmlab/validation.hpp"

using namespace ddpmlab;

TEST_CASE("warmup schedule matches its defining recursion") {
  const auto s = make_warmup_schedule<double>(1000, 2.0, 4.0);
  CHECK(s.beta(1) == 1e-6);

  // Independent one-line evaluation of beta_2.
  const double rate = 4.0 * std::log(1000.0) / 1000.0;
  const double beta2 = rate * std::min(1e-6 * (1.0 + rate), 1.0);
  CHECK(s.beta(2) == doctest::Approx(beta2).epsilon(1e-15));
  CHECK(s.beta(2) == doctest::Approx(2.8394494443837434e-8).epsilon(1e-14));

  // Near-Gaussian terminal marginal; log-space accumulation as the oracle.
  const auto log_space = oracle::log_space_alpha_bar(s.betas());
  CHECK(s.alpha_bar(1000) < 1e-3);
  CHECK(std::abs(log_space[999] - s.alpha_bar(1000)) / s.alpha_bar(1000) <
        1e-12);
}

TEST_CASE("schedule invariants") {
  for (const bool warmup : {true, false}) {
    const auto s = warmup ? make_warmup_schedule<double>(500)
                          : make_linear_schedule<double>(500);
    CAPTURE(warmup);
    CHECK((s.betas() > 0.0).all());
    CHECK((s.betas() < 1.0).all());
    for (int t = 1; t <= 500; ++t) {
      CHECK(s.alpha(t) == 1.0 - s.beta(t));
      CHECK(s.alpha_bar(t) == s.alpha_bar(t - 1) * s.alpha(t));
      if (t >= 2) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
    CHECK(s.alpha_bar(0) == 1.0);
  }
}

TEST_CASE("warmup schedule step-size bounds at defaults") {
  for (int T : {100, 400}) {
    const auto s = make_warmup_schedule<double>(T);
    const double bound = 8.0 * 4.0 * std::log(double(T)) / double(T);
    CHECK(s.alphas().minCoeff() >= 0.5);
    CHECK(s.alphas().minCoeff() >= 1.0 - 4.0 * std::log(double(T)) / double(T));
    for (int t = 2; t <= T; ++t)
      CHECK((1 - s.alpha(t)) / (s.alpha(t) - s.alpha_bar(t)) <= bound);
  }
}

TEST_CASE("warmup schedule rejects bad parameters") {
  CHECK_THROWS_AS(make_warmup_schedule<double>(1), std::invalid_argument);
  CHECK_THROWS_AS(make_warmup_schedule<double>(100, 0.0, 4.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_warmup_schedule<double>(100, 2.0, -1.0),
                  std::invalid_argument);
}

TEST_CASE("linear schedule endpoints and midpoint") {
  const auto s = make_linear_schedule<double>(1000, 1e-4, 0.02);
  CHECK(s.beta(1) == 1e-4);
  CHECK(s.beta(1000) == 0.02);
  CHECK(s.beta(500) ==
        doctest::Approx(1e-4 + 499.0 / 999.0 * (0.02 - 1e-4)).epsilon(1e-15));

  const auto tiny = make_linear_schedule<double>(2, 0.5, 0.5);
  CHECK(tiny.beta(1) == 0.5);
  CHECK(tiny.beta(2) == 0.5);
  CHECK(tiny.alpha_bar(2) == 0.25);

  CHECK_THROWS_AS(make_linear_schedule<double>(1, 1e-4, 0.02),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_linear_schedule<double>(10, 0.0, 0.02),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_linear_schedule<double>(10, 0.03, 0.02),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_linear_schedule<double>(10, 1e-4, 1.0),
                  std::invalid_argument);
}

TEST_CASE("star design formula") {
  // Schedule engineered so that alpha_2 = 0.99 and alpha_bar_2 = 0.50.
  Eigen::ArrayXd beta(2);
  beta << 1.0 - 0.50 / 0.99, 0.01;
  const Schedule<double> s(beta);
  CHECK(s.alpha(2) == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(s.alpha_bar(2) == doctest::Approx(0.50).epsilon(1e-14));

  const auto d = star_design(s);
  CHECK(d.eta(2) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(d.sigma2(2) == doctest::Approx(0.01 * 0.49 / 0.50).epsilon(1e-12));
  CHECK(d.sigma2(1) == 0.0);  // abar_1 = alpha_1 exactly

  // beta -> 0 limit: both coefficients collapse with beta.
  const auto flat = make_linear_schedule<double>(10, 1e-12, 1e-12);
  const auto tiny = star_design(flat);
  for (int t = 1; t <= 10; ++t) {
    CHECK(tiny.eta(t) == doctest::Approx(1e-12).epsilon(1e-3));
    CHECK(tiny.sigma2(t) <= 1.001e-12);
  }
}

TEST_CASE("simple design and its strict gap to star") {
  const auto s = make_linear_schedule<double>(2, 0.5, 0.5);
  const auto d = simple_design(s);
  CHECK(d.eta(1) == 0.5);
  CHECK(d.eta(2) == 0.5);
  CHECK(d.sigma2(1) == 0.5);
  CHECK(d.sigma2(2) == 0.5);

  const auto sched = make_warmup_schedule<double>(300);
  const auto star = star_design(sched);
  const auto simple = simple_design(sched);
  for (int t = 2; t <= 300; ++t) {
    CHECK(star.sigma2(t) < simple.sigma2(t));
    CHECK(star.eta(t) == simple.eta(t));
  }
}

TEST_CASE("perturbed design") {
  const auto s = make_warmup_schedule<double>(100);
  const auto star = star_design(s);

  const auto same = perturbed_design(star, 0.0, 1.0);
  CHECK((same.etas() == star.etas()).all());
  CHECK((same.sigma2s() == star.sigma2s()).all());

  const auto shifted = perturbed_design(star, 0.01, 1.0);
  for (int t = 1; t <= 100; ++t)
    CHECK(shifted.eta(t) == star.eta(t) + 0.01);

  const auto scaled = perturbed_design(star, 0.0, 2.0);
  for (int t = 2; t <= 100; ++t)
    CHECK(star.sigma2(t) / scaled.sigma2(t) ==
          doctest::Approx(0.25).epsilon(1e-15));

  CHECK_THROWS_AS(perturbed_design(star, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(perturbed_design(star, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("schedule index bounds") {
  const auto s = make_linear_schedule<double>(10);
  CHECK_THROWS_AS(s.beta(0), std::out_of_range);
  CHECK_THROWS_AS(s.beta(11), std::out_of_range);
  CHECK_THROWS_AS(s.alpha_bar(11), std::out_of_range);
}

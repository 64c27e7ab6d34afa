#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "ddpmlab/csv.hpp"
#include "ddpmlab/experiments.hpp"
#include "ddpmlab/validation.hpp"

using namespace ddpmlab;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split_csv_line(line));
  return rows;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path(name) {
    std::ofstream f(path);
    f << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = Config::from_string(
      "a = 1.5\nlist = 1, 2,3\n# comment\nname= hello # trailing\n");
  CHECK(cfg.get_double("a", 0.0) == 1.5);
  CHECK(cfg.get_int_list("list", {}) == std::vector<int>{1, 2, 3});
  CHECK(cfg.get_string("name", "") == "hello");
  CHECK(cfg.get_string("missing", "dflt") == "dflt");
  CHECK_THROWS_AS(cfg.require_known_keys({"a", "list"}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Config::from_string("a = 1\na = 2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(Config::from_string("novalue\n"), std::invalid_argument);
  CHECK_THROWS_AS(Config::from_string("x = abc\n").get_double("x", 0.0),
                  std::invalid_argument);
}

TEST_CASE("dump-schedule output") {
  SweepOptions opt{Config::from_string(
                       "schedule = linear\nT = 2\nbeta_min = 0.5\n"
                       "beta_max = 0.5\ndesign = simple\n"),
                   1u, 1};
  std::ostringstream out;
  dump_schedule(opt, out);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"t", "beta", "alpha", "alpha_bar",
                                            "eta", "sigma2"});
  CHECK(rows[1][0] == "1");
  CHECK(std::stod(rows[1][1]) == 0.5);
  CHECK(std::stod(rows[2][3]) == 0.25);
  CHECK(std::stod(rows[2][4]) == 0.5);
}

TEST_CASE("figure1 sweep rows and grid order") {
  SweepOptions opt{Config::from_string("T_list = 50,100\nd_list = 10,20\n"
                                       "k = 4\ntv_samples = 1000\n"),
                   7u, 1};
  std::ostringstream out;
  const int n = run_figure1_sweep(opt, out);
  CHECK(n == 8);  // 2 designs x 2 T x 2 d
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 9);
  // Canonical order: designs outer, then T, then d.
  CHECK(rows[1][0] == "star");
  CHECK(rows[1][2] == "50");
  CHECK(rows[1][3] == "10");
  CHECK(rows[2][3] == "20");
  CHECK(rows[5][0] == "simple");
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].size() == 14);
    CHECK(rows[i][13] == "");                 // no errors
    CHECK(std::stod(rows[i][7]) >= 0.0);      // kl_exact
    CHECK(std::stod(rows[i][8]) >= 0.0);      // tv in [0,1]
    CHECK(std::stod(rows[i][8]) <= 1.0);
    // chain decomposition dominates the terminal KL
    CHECK(std::stod(rows[i][10]) + std::stod(rows[i][11]) >=
          std::stod(rows[i][7]));
  }
}

TEST_CASE("theorem2 grid rows") {
  // sigma_scale grid 0.75..2 in 6 steps contains the star point scale = 1.
  SweepOptions opt{Config::from_string("T = 40\nd = 16\nk = 4\nt_list = 2,40\n"
                                       "eta_shift_count = 5\n"
                                       "sigma_scale_min = 0.75\n"
                                       "sigma_scale_count = 6\n"),
                   1u, 1};
  std::ostringstream out;
  const int n = run_theorem2_grid(opt, out);
  CHECK(n == 2 * 5 * 6);
  const auto rows = parse_csv(out.str());
  int star_rows = 0;
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 10);
    REQUIRE(rows[i][9] == "");
    CHECK(std::stod(rows[i][8]) >= -1e-12);  // step_kl - lower_bound
    // Star point: lower bound vanishes while the step KL stays positive.
    if (std::stod(rows[i][4]) == 0.0 && std::stod(rows[i][5]) == 1.0) {
      ++star_rows;
      CHECK(std::stod(rows[i][7]) == 0.0);
      CHECK(std::stod(rows[i][6]) > 0.0);
    }
  }
  CHECK(star_rows == 2);
}

TEST_CASE("theorem2 grid records rejected sigma") {
  SweepOptions opt{Config::from_string(
                       "T = 10\nd = 4\nk = 2\nt_list = 2\n"
                       "eta_shift_count = 1\neta_shift_min = 0\n"
                       "eta_shift_max = 0\nsigma_scale_min = 0\n"
                       "sigma_scale_max = 1\nsigma_scale_count = 2\n"),
                   1u, 1};
  std::ostringstream out;
  run_theorem2_grid(opt, out);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][9] != "");  // sigma_scale = 0 rejected, recorded per row
  CHECK(rows[2][9] == "");
}

TEST_CASE("rate sweep emits decreasing kl and a slope") {
  SweepOptions opt{Config::from_string("T_list = 100,200,400\nd = 16\nk = 4\n"),
                   1u, 1};
  std::ostringstream out;
  const auto summary = run_rate_sweep(opt, out);
  CHECK(summary.rows == 3);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 4);
  std::vector<double> kl;
  for (size_t i = 1; i < rows.size(); ++i) kl.push_back(std::stod(rows[i][7]));
  CHECK(kl[1] < kl[0]);
  CHECK(kl[2] < kl[1]);
  // Slope consistent with a direct recomputation from the CSV.
  const double lx0 = std::log(100.0), lx1 = std::log(200.0),
               lx2 = std::log(400.0);
  const double mx = (lx0 + lx1 + lx2) / 3;
  const double my = (std::log(kl[0]) + std::log(kl[1]) + std::log(kl[2])) / 3;
  double sxx = 0, sxy = 0;
  const double lx[3] = {lx0, lx1, lx2};
  for (int i = 0; i < 3; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (std::log(kl[i]) - my);
  }
  CHECK(summary.slope == doctest::Approx(sxy / sxx).epsilon(1e-12));
}

TEST_CASE("perturbation sweep structure") {
  TempFile traj("test_traj.csv", "");
  SweepOptions opt{Config::from_string("T = 20\nd = 6\nk = 2\n"
                                       "eps_list = 0, 0.1\nensemble = 2000\n"
                                       "tv_samples = 2000\n"
                                       "trajectory_csv = test_traj.csv\n"
                                       "trajectory_limit = 3\n"),
                   11u, 1};
  std::ostringstream out;
  const int n = run_perturbation_sweep(opt, out);
  CHECK(n == 2);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 3);
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 16);
    CHECK(rows[i][15] == "");
    const double tv = std::stod(rows[i][8]);
    CHECK(tv >= 0.0);
    CHECK(tv <= 1.0);
    CHECK(std::stod(rows[i][10]) > 0.0);  // fitted on_var
  }
  // Trajectory dump: 3 trajectories x (T..1 states) rows + header.
  const auto traj_rows = parse_csv([&] {
    std::ifstream f("test_traj.csv");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }());
  REQUIRE(traj_rows.size() == size_t(1 + 3 * 20));
  CHECK(traj_rows[0][0] == "trajectory_id");
  CHECK(traj_rows[0][1] == "t");
  CHECK(traj_rows[0].size() == 2 + 6);
  CHECK(traj_rows[1][1] == "20");
}

TEST_CASE("perturbation sweep reads mixture atoms from CSV") {
  TempFile atoms("test_atoms.csv",
                 "1.0,0.5,0.5,0.0\n"
                 "3.0,-0.5,0.5,0.0\n");
  SweepOptions opt{Config::from_string("T = 15\nd = 3\neps_list = 0.05\n"
                                       "ensemble = 500\ntv_samples = 1000\n"
                                       "target = mixture\n"
                                       "atoms_csv = test_atoms.csv\n"),
                   3u, 1};
  std::ostringstream out;
  CHECK(run_perturbation_sweep(opt, out) == 1);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][15] == "");
  CHECK(rows[1][4] == "3");  // k defaults to d for mixtures
}

TEST_CASE("covering subcommand") {
  std::ostringstream cloud_csv;
  for (int i = 0; i < 200; ++i)
    cloud_csv << 0.005 * i << ",0.0,0.0\n";
  TempFile cloud("test_cloud.csv", cloud_csv.str());
  SweepOptions opt{Config::from_string("cloud_csv = test_cloud.csv\nT = 20\n"
                                       "c_eps = 1.0\nC_cover = 1.0\n"),
                   1u, 1};
  std::ostringstream out;
  const auto summary = run_covering(opt, out);
  CHECK(summary.eps == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(summary.net_size >= 10);
  CHECK(summary.net_size <= 21);
  CHECK(summary.estimate ==
        doctest::Approx(std::log(double(summary.net_size)) / std::log(20.0))
            .epsilon(1e-12));
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == size_t(summary.net_size) + 1);
}

TEST_CASE("sweeps reject unknown keys") {
  SweepOptions opt{Config::from_string("bogus = 1\n"), 1u, 1};
  std::ostringstream out;
  CHECK_THROWS_AS(run_figure1_sweep(opt, out), std::invalid_argument);
  CHECK_THROWS_AS(run_theorem2_grid(opt, out), std::invalid_argument);
  CHECK_THROWS_AS(run_rate_sweep(opt, out), std::invalid_argument);
  CHECK_THROWS_AS(run_perturbation_sweep(opt, out), std::invalid_argument);
  CHECK_THROWS_AS(run_covering(opt, out), std::invalid_argument);
  SweepOptions empty{Config::from_string(""), 1u, 1};
  CHECK_THROWS_AS(run_covering(empty, out), std::invalid_argument);
}

TEST_CASE("validation suite is deterministic and green") {
  const auto a = run_validation();
  const auto b = run_validation();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CAPTURE(a[i].name);
    CHECK(a[i].pass);
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].detail == b[i].detail);
  }
}

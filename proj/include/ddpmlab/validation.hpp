#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddpmlab/schedule.hpp"
#include "ddpmlab/target.hpp"

namespace ddpmlab {

/// Independent verification oracles. These deliberately avoid the library's
/// primary code paths so that agreement between the two is evidence, not
/// tautology.
namespace oracle {

/// Recursive adaptive Simpson quadrature to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol);

/// TV between two 1-d Gaussians by quadrature of |p - q|/2 over
/// [-20 max(sd), 20 max(sd)] around the means, tolerance 1e-10.
double tv_1d_gaussians(double mean_p, double var_p, double mean_q,
                       double var_q);

/// alpha_bar recomputed by log-space accumulation of the beta array.
Eigen::ArrayXd log_space_alpha_bar(const Eigen::ArrayXd& beta);

/// Central finite difference of log q_t at x with step h per coordinate.
Eigen::VectorXd finite_difference_score(const TargetDistribution& target,
                                        const Schedule<double>& s, int t,
                                        const Eigen::VectorXd& x, double h);

}  // namespace oracle

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // measured values
};

/// Runs every module's invariant/property suite at fixed seeds.
/// Deterministic: repeated calls produce identical reports.
std::vector<CheckResult> run_validation();

/// Prints one PASS/FAIL line per check; returns true iff all pass.
bool run_validation_report(std::ostream& out);

}  // namespace ddpmlab

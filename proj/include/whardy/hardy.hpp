#pragma once

#include <optional>
#include <string>
#include <vector>

#include "whardy/weights.hpp"

namespace whardy {

/// Classical Hardy constant ((n-2)/2)^2; n may be fractional (effective dimension).
double hardy_constant(double n);

/// U_mu = 1/4 (mu'/mu)^2 - 1/2 (Delta mu)/mu at radius r.
double compute_Umu(const WeightFamily& family, double r);
/// r^2 U_mu at log-radius s; finite wherever the scaled log-derivatives are.
double r2_Umu(const WeightFamily& family, double s);

struct ProfileOptions {
  int ladder_k_min = 10;        // dyadic ladder r = 2^-k for limsup/liminf at 0
  int ladder_k_max = 40;
  int tail_window = 10;
  double oscillation_tol = 1e-6;  // tail spread below this counts as converged
  int tail_dense_samples = 4096;  // resampling of the tail when it oscillates
  double n0_bisect_tol = 1e-10;
  double n0_delta_lo = -20.0;
  double n0_delta_hi = 40.0;
  double n0_agreement = 0.05;
};

struct HardyProfile {
  WeightFamily family;
  double c0_N = 0.0;
  double L = 0.0;         // limsup r^2 U_mu at 0
  double L_inf = 0.0;     // liminf r^2 U_mu at 0
  bool L_converged = true;
  double c0_mu = 0.0;     // c0_N - L
  double N0 = 0.0;        // last delta found integrable by bisection
  double N0_slope = 0.0;  // N - local power exponent of mu near 0
  double c0_N0 = 0.0;
  std::vector<std::pair<double, bool>> N0_probes;  // (delta, integrable)
  std::vector<double> ladder_r;
  std::vector<double> ladder_r2Umu;
  std::vector<std::string> warnings;
};

HardyProfile compute_profile(const WeightFamily& family, const ProfileOptions& opt = {});

/// limsup and liminf of r^2 U_mu at the origin with the ladder rules of ProfileOptions.
struct LimitEstimate {
  double limsup = 0.0;
  double liminf = 0.0;
  bool converged = true;
  std::vector<double> r;
  std::vector<double> values;
};
LimitEstimate estimate_r2Umu_limit(const WeightFamily& family, const ProfileOptions& opt = {});

/// U = U_mu - L / r^2.
double compute_U(const HardyProfile& profile, double r);
double compute_U(const WeightFamily& family, double r);

/// Bisection on delta for integrability of r^-delta on B_1 against mu.
struct N0Estimate {
  double value = 0.0;
  std::vector<std::pair<double, bool>> probes;  // (delta, integrable)
};
N0Estimate estimate_N0(const WeightFamily& family, const ProfileOptions& opt = {});
double estimate_N0_slope(const WeightFamily& family, const ProfileOptions& opt = {});

struct HypothesisOptions {
  ProfileOptions profile;
  std::vector<double> iii_radii{0.1, 1.0, 10.0};
  double iii_outer = 1e3;
  int iii_mesh = 400;
  int iv_k_max = 40;
  int iv_min_tail = 10;  // the log bound must hold on at least this many finest rungs
  int h3p_j_max = 20;
  double h3p_threshold = 1e3;
  int cond1_k_min = 20;
  int cond1_k_max = 40;
  std::vector<double> cond1_p{1.0, 2.0, 3.0};
  double cond1_exponent_tol = 1e-6;
};

struct BoundOutside {
  double R = 0.0;
  bool bounded = false;
  double bound = 0.0;  // max of U on the mesh over [R, outer]
};

struct Cond1Entry {
  double p = 0.0;
  bool holds = false;
  double exponent = 0.0;
};

enum class HypothesisClass { H2, H2PrimeOnly, Neither };
std::string_view to_string(HypothesisClass c);

struct HypothesisReport {
  HardyProfile profile;
  std::optional<bool> h1;  // closed-form knowledge only
  bool h2_i = false;
  double h2_i_grad_sqrt_mu = 0.0;  // int_{B_1} |grad mu^{1/2}|^2 dx
  double h2_i_abs_lap_mu = 0.0;    // int_{B_1} |Delta mu| dx
  bool h2_ii = false;
  std::vector<BoundOutside> h2_iii;
  bool h2_iii_all = false;
  bool h2_iv = false;
  double h2_iv_R0 = 0.0;
  std::vector<std::pair<double, double>> h2_iv_samples;  // (r, r^2 U |log r|^2)
  bool h3 = false;
  double h3_N0 = 0.0;
  std::vector<std::pair<double, bool>> h3_probes;
  bool h3p_iii = false;
  std::vector<std::pair<double, double>> h3p_samples;  // (lambda, lambda int r^{lambda-N0} dmu)
  std::vector<Cond1Entry> cond1;
  bool h2 = false;
  bool h2_prime = false;
  HypothesisClass classification = HypothesisClass::Neither;
};

HypothesisReport check_hypotheses(const WeightFamily& family, const HypothesisOptions& opt = {});

std::string report_to_json(const HypothesisReport& report);
std::string report_to_table(const HypothesisReport& report);

}  // namespace whardy

#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "whardy/hardy.hpp"
#include "whardy/weights.hpp"

namespace whardy {

/// Symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }
  std::vector<double> apply(const std::vector<double>& x) const;
};

/// Radial form of -(L + c/r^2) on a geometric grid with Dirichlet ends.
struct SpectralProblem {
  WeightFamily family;
  double c = 0.0;
  RadialGrid grid;
};

/// P1 finite elements on the interior nodes. All forms are per unit sphere area:
/// gradient ~ int phi' psi' mu r^{N-1}, inverse_square ~ int phi psi mu r^{N-3},
/// mass is the lumped int phi mu r^{N-1}.
struct Assembly {
  Tridiagonal gradient;
  Tridiagonal inverse_square;
  std::vector<double> mass;
  Tridiagonal stiffness;  // gradient - c * inverse_square

  Tridiagonal stiffness_at(double c) const;
};

/// Grid actually used for a family: r_max is pulled inside a compact support.
RadialGrid effective_grid(const WeightFamily& family, double r_min, double r_max, int n_points);

Assembly assemble(const SpectralProblem& problem);
/// Single-threaded reference with the same arithmetic.
Assembly assemble_serial(const SpectralProblem& problem);

struct EigenOptions {
  int max_inverse_iterations = 50;
  double residual_tol = 1e-8;  // relative to max(1, |lambda|)
};

struct EigenPair {
  double lambda = 0.0;
  std::vector<double> vector;  // interior nodes, M-normalized
  double residual = 0.0;
  int iterations = 0;
};

/// Number of generalized eigenvalues of (K, M) below sigma, by LDL^T inertia.
int count_below(const Tridiagonal& k, const std::vector<double>& m, double sigma);
/// Smallest generalized eigenpair: bisection on the inertia count, then inverse iteration.
EigenPair smallest_eigenpair(const Tridiagonal& k, const std::vector<double>& m, const EigenOptions& opt = {});
/// Discrete Rayleigh quotient v^T K v / v^T M v.
double discrete_rayleigh(const Tridiagonal& k, const std::vector<double>& m, const std::vector<double>& v);

enum class SpectralVerdict { Bounded, Diverging };
std::string_view to_string(SpectralVerdict v);

struct LadderOptions {
  int rungs = 4;
  double r_min_factor = 0.25;
  int n_factor = 2;
  double divergence_ratio = 4.0;  // per-rung drop that counts as divergence
  EigenOptions eigen;
};

struct LadderRung {
  int n_points = 0;
  double r_min = 0.0;
  double lambda1 = 0.0;
};

struct RayleighResult {
  double lambda1 = 0.0;
  std::vector<double> eigvec;  // on all grid nodes, zero at the Dirichlet ends
  std::vector<double> nodes;
  double residual = 0.0;
  std::vector<LadderRung> ladder;
  SpectralVerdict verdict = SpectralVerdict::Bounded;
};

/// Verdict rule on a ladder: the last three values negative, non-increasing, and
/// dropping by more than divergence_ratio per rung on average over the last two steps.
SpectralVerdict ladder_verdict(const std::vector<LadderRung>& ladder, double divergence_ratio);

RayleighResult lambda1(const SpectralProblem& problem, const LadderOptions& opt = {});

/// c-independent assemblies of every rung; lets sweeps re-solve without re-integrating.
class LadderCache {
 public:
  LadderCache(const WeightFamily& family, const RadialGrid& base, const LadderOptions& opt = {});

  RayleighResult solve(double c) const;
  const LadderOptions& options() const { return opt_; }

 private:
  WeightFamily family_;
  LadderOptions opt_;
  std::vector<RadialGrid> grids_;
  std::vector<Assembly> assemblies_;
};

struct SweepPoint {
  double c = 0.0;
  double r_min = 0.0;
  int n_points = 0;
  double lambda1 = 0.0;
  SpectralVerdict verdict = SpectralVerdict::Bounded;
};

struct SweepResult {
  double c_hat = 0.0;
  double c_lo = 0.0;  // last Bounded
  double c_hi = 0.0;  // first Diverging
  std::vector<SweepPoint> trace;  // one row per ladder rung per probed c
};

struct SweepGrid {
  double r_min = 1e-10;
  double r_max = 20.0;
  int n_points = 1024;
};

SweepResult critical_sweep(const WeightFamily& family, double c_lo, double c_hi, double tol,
                           const SweepGrid& grid = {}, const LadderOptions& opt = {});

// ---- explicit test functions -------------------------------------------------

/// Cutoff theta: 1 on [0, 1], 0 on [2, inf), C-infinity in between.
StepValue sharpness_cutoff(double r);
/// sup |theta'| of the cutoff, sampled.
double sharpness_cutoff_gradient_bound();

struct GammaInterval {
  double lo = 0.0;  // exclusive
  double hi = 0.0;  // exclusive
  bool empty() const { return !(lo < hi); }
};
/// max{-sqrt c, -N0/2} < gamma < min{(2-N0)/2, 0}
GammaInterval phi_n_gamma_interval(double c, double N0);

struct QuotientResult {
  double quotient = 0.0;     // exact Rayleigh quotient of the test function
  double numerator = 0.0;    // int (|phi'|^2 - c phi^2/r^2) dmu
  double denominator = 0.0;  // int phi^2 dmu
  // upper estimate (gamma^2-c) I + C1 over C2, as printed next to the construction
  double bound_numerator = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double bound = 0.0;  // NaN when C2 == 0 (support inside the unit ball)
};

/// Uses N0 from estimate_N0 for the admissibility check.
QuotientResult quotient_phi_n(const WeightFamily& family, double c, double gamma, int n);
/// enforce_admissible=false skips the gamma interval check (the boundary gamma = -sqrt c is excluded by it).
QuotientResult quotient_phi_n(const WeightFamily& family, double N0, double c, double gamma, int n,
                              bool enforce_admissible = true);

QuotientResult quotient_phi_gamma(const WeightFamily& family, double c, double gamma);
QuotientResult quotient_phi_gamma(const WeightFamily& family, double N0, double c, double gamma);

struct PhiGammaLadder {
  std::vector<double> gammas;
  std::vector<QuotientResult> quotients;
  bool diverges = false;  // strictly decreasing on the tail and below -threshold at the end
  double min_quotient = 0.0;
};

struct PhiGammaOptions {
  int j_max = 20;  // gamma_j = g* + |g*| 2^-j, g* = (2 - N0)/2
  double divergence_threshold = 1e2;
  int tail = 5;
};

PhiGammaLadder phi_gamma_ladder(const WeightFamily& family, double N0, double c, const PhiGammaOptions& opt = {});

/// A radial function with its derivative.
struct RadialTestFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// exp(-1/(1-(r/a)^2)) on [0, a), 0 beyond.
RadialTestFunction bump(double a);
/// Bump supported in (lo, hi).
RadialTestFunction shell_bump(double lo, double hi);

struct ImprovedHardySlack {
  double slack = 0.0;
  double gradient_sq = 0.0;   // int |grad u|^2
  double hardy_term = 0.0;    // c0(N) int u^2 / r^2
  double log_term = 0.0;      // 1/4 int u^2 / (r^2 log^2 r)
};

ImprovedHardySlack improved_hardy_slack(const RadialTestFunction& u, int dimension);

struct Crosscheck {
  double lhs = 0.0;  // c0_mu int phi^2 / r^2 dmu
  double rhs = 0.0;  // int |grad phi|^2 dmu + int U phi^2 dmu
  double gap = 0.0;  // rhs - lhs
  double flat = 0.0;      // int |grad(phi sqrt mu)|^2 dx
  double weighted = 0.0;  // int |grad phi|^2 dmu + int U_mu phi^2 dmu
  double identity_residual = 0.0;  // relative
};

/// phi must be supported in a compact subset of (0, support radius).
Crosscheck weighted_vs_flat_crosscheck(const HardyProfile& profile, const RadialTestFunction& phi,
                                       double r_lo, double r_hi);
Crosscheck weighted_vs_flat_crosscheck(const WeightFamily& family, const RadialTestFunction& phi,
                                       double r_lo, double r_hi);

}  // namespace whardy

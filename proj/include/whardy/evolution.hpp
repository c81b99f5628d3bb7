#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "whardy/spectral.hpp"
#include "whardy/weights.hpp"

namespace whardy {

enum class OuterBoundary { Dirichlet, Neumann };

/// Lumped P1 discretization of -L on the unknown nodes of a grid. Node 0 is
/// always Dirichlet; the last node is an unknown only for a Neumann outer end.
struct EvolutionOperator {
  Tridiagonal gradient;
  std::vector<double> mass;
  std::vector<double> nodes;  // radii of the unknowns
  std::size_t first_node = 1;
  double sphere_area = 0.0;
  OuterBoundary outer = OuterBoundary::Dirichlet;
};

EvolutionOperator build_evolution_operator(const WeightFamily& family, const RadialGrid& grid,
                                           OuterBoundary outer = OuterBoundary::Dirichlet);
EvolutionOperator build_evolution_operator_serial(const WeightFamily& family, const RadialGrid& grid,
                                                  OuterBoundary outer = OuterBoundary::Dirichlet);

/// One capped run. norm[k] = ||u(t_k)||_{L^2_mu}; log_norm is kept separately because
/// the solution is rescaled internally and the norm may outgrow what is useful in linear form.
struct NormSeries {
  double cap = 0.0;
  std::vector<double> t;
  std::vector<double> norm;
  std::vector<double> log_norm;
  std::vector<double> mass;       // int u dmu
  std::vector<double> min_value;  // smallest nodal value per slice
};

struct CappedRunOptions {
  OuterBoundary outer = OuterBoundary::Dirichlet;
};

/// Implicit Euler for u_t = Lu + min(c/r^2, cap) u. Throws SchemeDivergence when the
/// implicit operator is not positive definite (dt too large for the cap) or the norm overflows.
NormSeries run_capped(const WeightFamily& family, double c, double cap, const RadialFn& u0, double T, double dt,
                      const RadialGrid& grid, const CappedRunOptions& opt = {});
NormSeries run_capped(const EvolutionOperator& op, double c, double cap, const RadialFn& u0, double T, double dt);

/// All caps on one operator; caps run concurrently.
std::vector<NormSeries> run_caps(const EvolutionOperator& op, double c, const std::vector<double>& caps,
                                 const RadialFn& u0, double T, double dt);
std::vector<NormSeries> run_caps_serial(const EvolutionOperator& op, double c, const std::vector<double>& caps,
                                        const RadialFn& u0, double T, double dt);

struct Envelope {
  double M = 1.0;
  double omega = 0.0;
};

/// Least squares of log norm against t on the second half; M is the smallest
/// constant >= 1 with norm(t) <= M e^{omega (t - t_0)} norm(t_0) on the whole series.
Envelope fit_envelope(std::span<const double> t, std::span<const double> norm);
Envelope fit_envelope(const NormSeries& series);

enum class DichotomyVerdict { ExistenceSignature, BlowupSignature, Inconclusive };
std::string_view to_string(DichotomyVerdict v);

struct EvolutionConfig {
  std::vector<double> caps{1e5, 1e6, 1e7, 1e8};
  double T = 2.0;
  double dt = 1e-3;
  double r_min = 1e-9;
  double r_max = 6.0;
  int n_points = 1200;
  double u0_lo = 0.25;  // u0 is a bump supported in (u0_lo, u0_hi)
  double u0_hi = 1.0;
  double blowup_ratio = 2.0;   // per decade of cap
  double envelope_rtol = 0.1;  // Cauchy tolerance on (M, omega) between the top two caps
  double contraction_ratio = 0.8;  // successive omega increments must shrink by this factor
  long max_steps = 200000;     // dt is halved while the implicit operator is indefinite, up to this many steps
  bool control_run = true;     // doubled r_max, top cap
  bool spectral_check = true;
};

struct CapRun {
  NormSeries series;
  Envelope envelope;
  double log_norm_at_t_star = 0.0;
};

struct EvolutionRun {
  EvolutionRun(WeightFamily f, double c_, EvolutionConfig cfg, RadialGrid g)
      : family(std::move(f)), c(c_), config(std::move(cfg)), grid(std::move(g)) {}

  WeightFamily family;
  double c = 0.0;
  EvolutionConfig config;
  RadialGrid grid;
  double dt = 0.0;  // step actually used
  double t_star = 0.0;
  std::vector<CapRun> runs;
  std::vector<double> growth_per_decade;  // norm ratio at t_star between successive caps, per decade
  DichotomyVerdict verdict = DichotomyVerdict::Inconclusive;
  std::optional<SpectralVerdict> spectral;
  double spectral_lambda1 = 0.0;
  bool agrees = true;  // false flags a disagreement with a definite spectral verdict
  double truncation_sensitivity = 0.0;  // relative change of the top-cap norm at t_star on the doubled domain
  std::string note;  // why the run is Inconclusive when the scheme gave up
};

EvolutionRun dichotomy_verdict(const WeightFamily& family, double c, const EvolutionConfig& config = {});

}  // namespace whardy

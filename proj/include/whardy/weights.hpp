#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whardy/errors.hpp"
#include "whardy/quadrature.hpp"

namespace whardy {

enum class WeightKind { Lebesgue, ExpPower, PowerExpPower, LogWeight, Oscillating, Custom };

std::string_view to_string(WeightKind kind);
WeightKind parse_weight_kind(std::string_view name);

/// User-supplied radial profile. `second_ratio` (mu''/mu) may be left empty,
/// in which case it is recovered from centred differences of `d1`.
struct CustomProfile {
  std::function<double(double)> mu;
  std::function<double(double)> d1;
  std::function<double(double)> second_ratio;
};

/// mu'/mu, mu''/mu and the radial Laplacian ratio (Delta mu)/mu at a radius.
struct LogDerivatives {
  double d1 = 0.0;
  double second = 0.0;
  double lap_ratio = 0.0;
};

/// Same quantities pre-multiplied by r and r^2. These stay bounded near the
/// origin for every shipped family, so they can be evaluated at log-radii far
/// below the double range of r itself.
struct ScaledLogDerivatives {
  double r_d1 = 0.0;
  double r2_second = 0.0;
  double r2_lap = 0.0;
};

/// Radial density mu on R^N. Immutable after construction.
class WeightFamily {
 public:
  static WeightFamily lebesgue(int dimension);
  static WeightFamily exp_power(int dimension, double b, double m);
  static WeightFamily power_exp_power(int dimension, double b, double m, double beta);
  static WeightFamily log_weight(int dimension, double alpha);
  static WeightFamily oscillating(int dimension);
  static WeightFamily custom(int dimension, CustomProfile profile);

  WeightKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  double b() const { return b_; }
  double m() const { return m_; }
  double beta() const { return beta_; }
  double alpha() const { return alpha_; }

  /// mu vanishes identically for r >= support_radius().
  double support_radius() const;

  double mu(double r) const;
  /// log mu(e^s); -inf outside the support.
  double log_mu(double s) const;
  LogDerivatives log_derivatives(double r) const;
  ScaledLogDerivatives scaled_log_derivatives(double s) const;

  std::string describe() const;

 private:
  WeightFamily() = default;

  WeightKind kind_ = WeightKind::Lebesgue;
  int dimension_ = 3;
  double b_ = 0.0;
  double m_ = 1.0;
  double beta_ = 0.0;
  double alpha_ = 0.0;
  std::optional<CustomProfile> custom_;
};

// Free-function entry points mirroring the operation names used across the toolkit.
double eval_mu(const WeightFamily& family, double r);
LogDerivatives log_derivatives(const WeightFamily& family, double r);

/// Smooth transitions used as cutoffs. Values and first two r-derivatives.
struct StepValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// C-infinity step: 1 on (-inf, a], 0 on [b, inf), built from exp(-1/t).
StepValue smooth_step_down(double r, double a, double b);
/// log-derivatives (theta'/theta, theta''/theta) of smooth_step_down for r in (a, b).
std::pair<double, double> smooth_step_down_log_ratios(double r, double a, double b);
/// C^2 quintic Hermite step: 0 at a, 1 at b, vanishing first and second derivatives at both ends.
StepValue hermite_step_up(double r, double a, double b);

/// Geometric grid r_i = r_min * rho^i, i = 0..n_points-1.
class RadialGrid {
 public:
  RadialGrid(double r_min, double r_max, int n_points);

  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  int n_points() const { return static_cast<int>(nodes_.size()); }
  double ratio() const { return ratio_; }
  double log_step() const { return log_step_; }
  const std::vector<double>& nodes() const { return nodes_; }
  double operator[](std::size_t i) const { return nodes_[i]; }
  /// log r_i, exact to rounding (used where r_i itself would underflow comparisons)
  double log_node(std::size_t i) const { return log_min_ + static_cast<double>(i) * log_step_; }

 private:
  double r_min_;
  double r_max_;
  double ratio_;
  double log_min_;
  double log_step_;
  std::vector<double> nodes_;
};

/// Surface measure of the unit sphere in R^N.
double unit_sphere_area(int dimension);

/// A value carried in log form: sign * exp(log_abs).
struct LogValue {
  double log_abs = -std::numeric_limits<double>::infinity();
  double sign = 1.0;
};

using RadialFn = std::function<double(double)>;
using LogRadialFn = std::function<LogValue(double)>;  // argument is s = log r

struct IntegrationOptions {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_intervals = 4000;
};

/// omega_N * int_{r_lo}^{r_hi} f(r) mu(r) r^{N-1} dr, integrated in s = log r.
/// r_lo == 0 integrates the half-line in s by doubling blocks; a tail that does
/// not die out raises DivergentIntegral. Linear-form integrands are skipped where
/// the measure factor underflows; pass singular integrands in log form instead.
double weighted_integral(const WeightFamily& family, const RadialFn& f, double r_lo, double r_hi,
                         const IntegrationOptions& opt = {});

/// Outcome of a weighted integration without the error mapping of weighted_integral.
struct WeightedIntegral {
  double value = 0.0;
  double error = 0.0;
  bool divergent = false;  // non-integrable at the origin
  bool converged = false;  // requested accuracy reached
};

WeightedIntegral integrate_weighted_log(const WeightFamily& family, const LogRadialFn& f,
                                        double r_lo, double r_hi, const IntegrationOptions& opt = {});

/// Log-form variant: f is given as s -> LogValue.
double weighted_integral_log(const WeightFamily& family, const LogRadialFn& f, double r_lo,
                             double r_hi, const IntegrationOptions& opt = {});

/// Several moments int_{r_lo}^{r_hi} f_k(r) mu(r) r^{N-1} dr from one sweep, without the
/// sphere area. f(r) returns std::array<double, K>. Finite intervals only.
template <std::size_t K, class F>
std::array<double, K> radial_moments(const WeightFamily& family, F&& f, double r_lo, double r_hi,
                                     const IntegrationOptions& opt = {}) {
  if (!(r_lo > 0.0) || !(r_hi > r_lo))
    throw Error(ErrorCode::InvalidParams, "radial_moments needs 0 < r_lo < r_hi");
  const int n = family.dimension();
  auto g = [&](double s) {
    std::array<double, K> v{};
    const double lw = family.log_mu(s) + n * s;
    if (lw < -745.0) return v;
    const double w = std::exp(lw);
    v = f(std::exp(s));
    for (auto& x : v) x *= w;
    return v;
  };
  const auto res = quad::integrate_vec<K>(g, std::log(r_lo), std::log(r_hi),
                                          quad::Options{opt.rel_tol, opt.abs_tol, opt.max_intervals});
  if (!res.converged || !res.finite)
    throw Error(ErrorCode::QuadratureFailure, "radial_moments failed for " + family.describe());
  return res.value;
}

}  // namespace whardy

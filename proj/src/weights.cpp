#include "whardy/weights.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace whardy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Near-origin window for LogWeight / Oscillating; the cutoff or blend acts on [kInner, kOuter].
constexpr double kInner = 0.5;
constexpr double kOuter = 1.0;
constexpr double kOscFar = 2.0;  // value Oscillating blends into

void require_radius(double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "radius must be positive");
}

double smooth_g(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

}  // namespace

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Lebesgue: return "Lebesgue";
    case WeightKind::ExpPower: return "ExpPower";
    case WeightKind::PowerExpPower: return "PowerExpPower";
    case WeightKind::LogWeight: return "LogWeight";
    case WeightKind::Oscillating: return "Oscillating";
    case WeightKind::Custom: return "Custom";
  }
  return "Unknown";
}

WeightKind parse_weight_kind(std::string_view name) {
  for (auto k : {WeightKind::Lebesgue, WeightKind::ExpPower, WeightKind::PowerExpPower,
                 WeightKind::LogWeight, WeightKind::Oscillating, WeightKind::Custom})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::InvalidParams, "unknown weight kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// cutoffs

StepValue smooth_step_down(double r, double a, double b) {
  const double w = b - a;
  const double t = (r - a) / w;
  if (t <= 0.0) return {1.0, 0.0, 0.0};
  if (t >= 1.0) return {0.0, 0.0, 0.0};
  const double u = 1.0 - t;
  const double A = smooth_g(u);
  const double B = smooth_g(t);
  const double S = A + B;
  const double dA = -A / (u * u);
  const double dB = B / (t * t);
  const double d2A = A * (1.0 / (u * u * u * u) - 2.0 / (u * u * u));
  const double d2B = B * (1.0 / (t * t * t * t) - 2.0 / (t * t * t));
  const double dS = dA + dB;
  const double d2S = d2A + d2B;
  const double theta = A / S;
  const double d1 = (dA * S - A * dS) / (S * S);
  const double d2 = (d2A * S - A * d2S) / (S * S) - 2.0 * dS * (dA * S - A * dS) / (S * S * S);
  return {theta, d1 / w, d2 / (w * w)};
}

std::pair<double, double> smooth_step_down_log_ratios(double r, double a, double b) {
  const double w = b - a;
  const double t = (r - a) / w;
  if (t <= 0.0) return {0.0, 0.0};
  if (!(t < 1.0)) throw Error(ErrorCode::OutsideSupport, "cutoff vanishes beyond its outer radius");
  const double u = 1.0 - t;
  const double A = smooth_g(u);
  const double B = smooth_g(t);
  const double S = A + B;
  // log-derivatives of A in closed form so they survive A underflowing
  const double a1 = -1.0 / (u * u);
  const double a2_minus_a1sq = -2.0 / (u * u * u);
  const double dS = -A / (u * u) + B / (t * t);
  const double d2S = A * (1.0 / (u * u * u * u) - 2.0 / (u * u * u)) +
                     B * (1.0 / (t * t * t * t) - 2.0 / (t * t * t));
  const double s1 = dS / S;
  const double s2 = d2S / S;
  const double l1 = a1 - s1;
  const double l2 = a2_minus_a1sq - (s2 - s1 * s1);
  return {l1 / w, (l2 + l1 * l1) / (w * w)};
}

StepValue hermite_step_up(double r, double a, double b) {
  const double w = b - a;
  const double t = (r - a) / w;
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double h = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
  const double dh = 30.0 * t * t * (1.0 - t) * (1.0 - t);
  const double d2h = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
  return {h, dh / w, d2h / (w * w)};
}

RadialGrid::RadialGrid(double r_min, double r_max, int n_points)
    : r_min_(r_min), r_max_(r_max) {
  if (!(r_min > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "grid r_min must be positive");
  if (!(r_max > r_min) || !std::isfinite(r_max))
    throw Error(ErrorCode::InvalidParams, "grid needs r_max > r_min");
  if (n_points < 16) throw Error(ErrorCode::InvalidParams, "grid needs at least 16 points");
  log_min_ = std::log(r_min);
  log_step_ = (std::log(r_max) - log_min_) / (n_points - 1);
  ratio_ = std::exp(log_step_);
  nodes_.resize(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) nodes_[i] = std::exp(log_min_ + i * log_step_);
  nodes_.front() = r_min;
  nodes_.back() = r_max;
}

double unit_sphere_area(int dimension) {
  const double half = 0.5 * dimension;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

// ---------------------------------------------------------------------------
// construction

WeightFamily WeightFamily::lebesgue(int dimension) {
  if (dimension < 3) throw Error(ErrorCode::InvalidParams, "dimension must be >= 3");
  WeightFamily w;
  w.kind_ = WeightKind::Lebesgue;
  w.dimension_ = dimension;
  return w;
}

WeightFamily WeightFamily::exp_power(int dimension, double b, double m) {
  WeightFamily w = lebesgue(dimension);
  if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorCode::InvalidParams, "ExpPower needs b >= 0");
  if (!(m > 0.0) || !std::isfinite(m)) throw Error(ErrorCode::InvalidParams, "ExpPower needs m > 0");
  w.kind_ = WeightKind::ExpPower;
  w.b_ = b;
  w.m_ = m;
  return w;
}

WeightFamily WeightFamily::power_exp_power(int dimension, double b, double m, double beta) {
  WeightFamily w = exp_power(dimension, b, m);
  if (!std::isfinite(beta)) throw Error(ErrorCode::InvalidParams, "PowerExpPower needs finite beta");
  w.kind_ = WeightKind::PowerExpPower;
  w.beta_ = beta;
  return w;
}

WeightFamily WeightFamily::log_weight(int dimension, double alpha) {
  WeightFamily w = lebesgue(dimension);
  if (!std::isfinite(alpha)) throw Error(ErrorCode::InvalidParams, "LogWeight needs finite alpha");
  w.kind_ = WeightKind::LogWeight;
  w.alpha_ = alpha;
  return w;
}

WeightFamily WeightFamily::oscillating(int dimension) {
  WeightFamily w = lebesgue(dimension);
  w.kind_ = WeightKind::Oscillating;
  return w;
}

WeightFamily WeightFamily::custom(int dimension, CustomProfile profile) {
  WeightFamily w = lebesgue(dimension);
  if (!profile.mu || !profile.d1)
    throw Error(ErrorCode::InvalidParams, "Custom profile needs mu and mu'/mu callables");
  w.kind_ = WeightKind::Custom;
  w.custom_ = std::move(profile);
  return w;
}

double WeightFamily::support_radius() const {
  return kind_ == WeightKind::LogWeight ? kOuter : kInf;
}

std::string WeightFamily::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(N=" << dimension_;
  switch (kind_) {
    case WeightKind::ExpPower: os << ", b=" << b_ << ", m=" << m_; break;
    case WeightKind::PowerExpPower: os << ", b=" << b_ << ", m=" << m_ << ", beta=" << beta_; break;
    case WeightKind::LogWeight: os << ", alpha=" << alpha_; break;
    default: break;
  }
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// evaluation

double WeightFamily::log_mu(double s) const {
  switch (kind_) {
    case WeightKind::Lebesgue: return 0.0;
    case WeightKind::ExpPower: return -b_ * std::exp(m_ * s);
    case WeightKind::PowerExpPower: return -beta_ * s - b_ * std::exp(m_ * s);
    case WeightKind::LogWeight: {
      const double r = std::exp(s);
      if (r >= kOuter) return -kInf;
      const double core = alpha_ == 0.0 ? 0.0 : alpha_ * std::log(-s);
      if (r <= kInner) return core;
      const double theta = smooth_step_down(r, kInner, kOuter).value;
      return theta > 0.0 ? core + std::log(theta) : -kInf;
    }
    case WeightKind::Oscillating: {
      const double r = std::exp(s);
      const double inner = 2.0 + std::sin(s);
      if (r <= kInner) return std::log(inner);
      const double h = hermite_step_up(r, kInner, kOuter).value;
      return std::log((1.0 - h) * inner + h * kOscFar);
    }
    case WeightKind::Custom: {
      const double r = std::exp(s);
      require_radius(r);
      const double v = custom_->mu(r);
      return v > 0.0 ? std::log(v) : -kInf;
    }
  }
  return 0.0;
}

double WeightFamily::mu(double r) const {
  require_radius(r);
  switch (kind_) {
    case WeightKind::Lebesgue: return 1.0;
    case WeightKind::ExpPower: return std::exp(-b_ * std::pow(r, m_));
    case WeightKind::PowerExpPower: return std::pow(r, -beta_) * std::exp(-b_ * std::pow(r, m_));
    case WeightKind::Custom: return custom_->mu(r);
    default: return std::exp(log_mu(std::log(r)));
  }
}

ScaledLogDerivatives WeightFamily::scaled_log_derivatives(double s) const {
  const int n = dimension_;
  auto finish = [n](double r_d1, double r2_second) {
    return ScaledLogDerivatives{r_d1, r2_second, r2_second + (n - 1) * r_d1};
  };
  switch (kind_) {
    case WeightKind::Lebesgue: return {};
    case WeightKind::ExpPower:
    case WeightKind::PowerExpPower: {
      // log mu = -beta s - b e^{m s}
      const double bm = b_ * m_ * std::exp(m_ * s);  // b m r^m
      const double beta = kind_ == WeightKind::PowerExpPower ? beta_ : 0.0;
      const double r_d1 = -beta - bm;
      // r^2 (log mu)'' = beta - b m (m-1) r^m
      const double r2_logpp = beta - (m_ - 1.0) * bm;
      return finish(r_d1, r2_logpp + r_d1 * r_d1);
    }
    case WeightKind::LogWeight: {
      const double r = std::exp(s);
      if (r >= kOuter) throw Error(ErrorCode::OutsideSupport, "LogWeight vanishes for r >= 1");
      const double l = -s;  // log(1/r)
      double r_d1 = -alpha_ / l;
      double r2_logpp = alpha_ / l - alpha_ / (l * l);
      if (r > kInner) {
        const auto [t1, t2] = smooth_step_down_log_ratios(r, kInner, kOuter);
        const double t_logpp = t2 - t1 * t1;
        r_d1 += r * t1;
        r2_logpp += r * r * t_logpp;
      }
      return finish(r_d1, r2_logpp + r_d1 * r_d1);
    }
    case WeightKind::Oscillating: {
      const double r = std::exp(s);
      const double sn = std::sin(s);
      const double cs = std::cos(s);
      const double inner = 2.0 + sn;
      if (r <= kInner) return finish(cs / inner, (-sn - cs) / inner);
      // mu = (1-h) mu1 + h * far, in r-derivatives
      const StepValue h = hermite_step_up(r, kInner, kOuter);
      const double mu1 = inner;
      const double r_mu1p = cs;              // r mu1'
      const double r2_mu1pp = -sn - cs;      // r^2 mu1''
      const double mu = (1.0 - h.value) * mu1 + h.value * kOscFar;
      const double r_mup = (1.0 - h.value) * r_mu1p + r * h.d1 * (kOscFar - mu1);
      const double r2_mupp = (1.0 - h.value) * r2_mu1pp - 2.0 * r * h.d1 * r_mu1p +
                             r * r * h.d2 * (kOscFar - mu1);
      return finish(r_mup / mu, r2_mupp / mu);
    }
    case WeightKind::Custom: {
      const double r = std::exp(s);
      require_radius(r);
      const double d1 = custom_->d1(r);
      double second = 0.0;
      if (custom_->second_ratio) {
        second = custom_->second_ratio(r);
      } else {
        // (log mu)'' from centred differences of d1, then mu''/mu = (log mu)'' + d1^2
        const double h = 1e-5 * r;
        const double logpp = (custom_->d1(r + h) - custom_->d1(r - h)) / (2.0 * h);
        second = logpp + d1 * d1;
      }
      return finish(r * d1, r * r * second);
    }
  }
  return {};
}

LogDerivatives WeightFamily::log_derivatives(double r) const {
  require_radius(r);
  if (r >= support_radius())
    throw Error(ErrorCode::OutsideSupport, describe() + " vanishes at r=" + std::to_string(r));
  const ScaledLogDerivatives sc = scaled_log_derivatives(std::log(r));
  return {sc.r_d1 / r, sc.r2_second / (r * r), sc.r2_lap / (r * r)};
}

double eval_mu(const WeightFamily& family, double r) { return family.mu(r); }

LogDerivatives log_derivatives(const WeightFamily& family, double r) {
  return family.log_derivatives(r);
}

// ---------------------------------------------------------------------------
// weighted integration

namespace {

constexpr double kMinLinearLogRadius = -690.0;  // r ~ 1e-300
constexpr double kMinLogWeight = -745.0;        // exp() underflows to zero below this

template <class Eval>
WeightedIntegral integrate_in_log_radius(const WeightFamily& family, Eval&& eval, double r_lo,
                                         double r_hi, const IntegrationOptions& opt) {
  if (!(r_lo >= 0.0) || !(r_hi > r_lo))
    throw Error(ErrorCode::InvalidParams, "weighted_integral needs 0 <= r_lo < r_hi");
  r_hi = std::min(r_hi, family.support_radius());
  WeightedIntegral out;
  if (r_hi <= r_lo) {
    out.converged = true;
    return out;
  }
  const int n = family.dimension();
  // integrand in s, including the Jacobian r: f(r) mu(r) r^N
  auto g = [&](double s) -> double {
    const double lw = family.log_mu(s) + n * s;
    if (lw == -kInf) return 0.0;
    const LogValue f = eval(s, lw);
    if (f.sign == 0.0 || f.log_abs == -kInf) return 0.0;
    return f.sign * std::exp(f.log_abs + lw);
  };
  const quad::Options qo{opt.rel_tol, opt.abs_tol, opt.max_intervals};
  const double s_hi = std::log(r_hi);
  const double area = unit_sphere_area(n);
  const quad::Result res = r_lo == 0.0 ? quad::integrate_to_minus_infinity(g, s_hi, qo)
                                       : quad::integrate(g, std::log(r_lo), s_hi, qo);
  out.value = area * res.value;
  out.error = area * res.error;
  out.divergent = !res.finite || !res.tail_settled;
  out.converged = res.converged;
  return out;
}

double checked(const WeightedIntegral& r, const WeightFamily& family, double r_lo) {
  if (r.divergent && r_lo == 0.0)
    throw Error(ErrorCode::DivergentIntegral, "refinement toward the origin failed for " + family.describe());
  if (!r.converged)
    throw Error(ErrorCode::QuadratureFailure, "adaptive quadrature failed for " + family.describe());
  return r.value;
}

}  // namespace

double weighted_integral(const WeightFamily& family, const RadialFn& f, double r_lo, double r_hi,
                         const IntegrationOptions& opt) {
  auto eval = [&f](double s, double lw) -> LogValue {
    // skip points where the measure factor underflows; f may overflow there
    if (s < kMinLinearLogRadius || lw < kMinLogWeight) return {};
    const double v = f(std::exp(s));
    if (v == 0.0) return {};
    return {std::log(std::abs(v)), v > 0.0 ? 1.0 : -1.0};
  };
  return checked(integrate_in_log_radius(family, eval, r_lo, r_hi, opt), family, r_lo);
}

WeightedIntegral integrate_weighted_log(const WeightFamily& family, const LogRadialFn& f,
                                        double r_lo, double r_hi, const IntegrationOptions& opt) {
  auto eval = [&f](double s, double) { return f(s); };
  return integrate_in_log_radius(family, eval, r_lo, r_hi, opt);
}

double weighted_integral_log(const WeightFamily& family, const LogRadialFn& f, double r_lo,
                             double r_hi, const IntegrationOptions& opt) {
  return checked(integrate_weighted_log(family, f, r_lo, r_hi, opt), family, r_lo);
}

}  // namespace whardy

#include "whardy/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>

namespace whardy {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Moments = std::array<double, 6>;

// {int w, int (1-t)^2 w/r^2, int t(1-t) w/r^2, int t^2 w/r^2, int (1-t) w, int t w}
// on element [a, b], t = (r - a)/(b - a), w = mu r^{N-1}
Moments element_moments(const WeightFamily& family, double a, double b) {
  const double h = b - a;
  auto f = [a, h](double r) -> Moments {
    const double t = (r - a) / h;
    const double u = 1.0 - t;
    const double ir2 = 1.0 / (r * r);
    return {1.0, u * u * ir2, t * u * ir2, t * t * ir2, u, t};
  };
  return radial_moments<6>(family, f, a, b);
}

Assembly scatter(const std::vector<double>& r, const std::vector<Moments>& mom, double c) {
  const std::size_t n = r.size();
  const std::size_t m = n - 2;
  Assembly out;
  out.gradient.diag.assign(m, 0.0);
  out.gradient.off.assign(m - 1, 0.0);
  out.inverse_square.diag.assign(m, 0.0);
  out.inverse_square.off.assign(m - 1, 0.0);
  out.mass.assign(m, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::size_t j = i - 1;
    const double hl = r[i] - r[i - 1];
    const double hr = r[i + 1] - r[i];
    const Moments& L = mom[i - 1];
    const Moments& R = mom[i];
    out.gradient.diag[j] = L[0] / (hl * hl) + R[0] / (hr * hr);
    out.inverse_square.diag[j] = L[3] + R[1];
    out.mass[j] = L[5] + R[4];
    if (j + 1 < m) {
      out.gradient.off[j] = -R[0] / (hr * hr);
      out.inverse_square.off[j] = R[2];
    }
  }
  for (double v : out.mass)
    if (!(v > 0.0)) throw Error(ErrorCode::QuadratureFailure, "mass matrix has a non-positive diagonal entry");
  out.stiffness = out.stiffness_at(c);
  return out;
}

void check_problem(const SpectralProblem& p) {
  if (p.grid.n_points() < 4) throw Error(ErrorCode::InvalidParams, "grid too small");
  if (p.grid.r_max() > p.family.support_radius())
    throw Error(ErrorCode::OutsideSupport, "grid extends beyond the support of " + p.family.describe());
  if (!std::isfinite(p.c)) throw Error(ErrorCode::InvalidParams, "coupling c must be finite");
}

// LDL^T of K - sigma M, pivots only
template <class Visit>
void ldl_pivots(const Tridiagonal& k, const std::vector<double>& m, double sigma, Visit&& visit) {
  const double pivmin = std::numeric_limits<double>::min() * 4.0;
  double d = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    double a = k.diag[i] - sigma * m[i];
    if (i > 0) a -= k.off[i - 1] * (k.off[i - 1] / d);
    if (std::abs(a) < pivmin) a = pivmin;
    d = a;
    visit(i, d);
  }
}

std::int64_t ordered(double x) {
  const auto b = std::bit_cast<std::int64_t>(x);
  return b >= 0 ? b : -(b & std::numeric_limits<std::int64_t>::max());
}

double from_ordered(std::int64_t o) {
  if (o >= 0) return std::bit_cast<double>(o);
  return std::bit_cast<double>((-o) | std::numeric_limits<std::int64_t>::min());
}

std::vector<double> solve_shifted(const Tridiagonal& k, const std::vector<double>& m, double sigma,
                                  const std::vector<double>& rhs) {
  const std::size_t n = k.size();
  std::vector<double> d(n), x(rhs);
  ldl_pivots(k, m, sigma, [&](std::size_t i, double p) { d[i] = p; });
  for (std::size_t i = 1; i < n; ++i) x[i] -= (k.off[i - 1] / d[i - 1]) * x[i - 1];
  for (std::size_t i = 0; i < n; ++i) x[i] /= d[i];
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= (k.off[i] / d[i]) * x[i + 1];
  return x;
}

double m_norm(const std::vector<double>& m, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += m[i] * v[i] * v[i];
  return std::sqrt(s);
}

// runs body(i) for i in [0, n) in parallel and rethrows the first exception
template <class Body>
void parallel_for(int n, Body&& body) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(whardy_spectral_err)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

std::vector<double> Tridiagonal::apply(const std::vector<double>& x) const {
  const std::size_t n = size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += off[i - 1] * x[i - 1];
    if (i + 1 < n) s += off[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

Tridiagonal Assembly::stiffness_at(double c) const {
  Tridiagonal k = gradient;
  for (std::size_t i = 0; i < k.diag.size(); ++i) k.diag[i] -= c * inverse_square.diag[i];
  for (std::size_t i = 0; i < k.off.size(); ++i) k.off[i] -= c * inverse_square.off[i];
  return k;
}

RadialGrid effective_grid(const WeightFamily& family, double r_min, double r_max, int n_points) {
  const double R = family.support_radius();
  if (r_max >= R) r_max = 0.98 * R;
  return RadialGrid(r_min, r_max, n_points);
}

Assembly assemble(const SpectralProblem& problem) {
  check_problem(problem);
  const auto& r = problem.grid.nodes();
  std::vector<Moments> mom(r.size() - 1);
  parallel_for(static_cast<int>(mom.size()),
               [&](int e) { mom[e] = element_moments(problem.family, r[e], r[e + 1]); });
  return scatter(r, mom, problem.c);
}

Assembly assemble_serial(const SpectralProblem& problem) {
  check_problem(problem);
  const auto& r = problem.grid.nodes();
  std::vector<Moments> mom(r.size() - 1);
  for (std::size_t e = 0; e < mom.size(); ++e) mom[e] = element_moments(problem.family, r[e], r[e + 1]);
  return scatter(r, mom, problem.c);
}

int count_below(const Tridiagonal& k, const std::vector<double>& m, double sigma) {
  int neg = 0;
  ldl_pivots(k, m, sigma, [&](std::size_t, double d) { neg += d < 0.0; });
  return neg;
}

double discrete_rayleigh(const Tridiagonal& k, const std::vector<double>& m, const std::vector<double>& v) {
  const auto kv = k.apply(v);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    num += v[i] * kv[i];
    den += m[i] * v[i] * v[i];
  }
  return num / den;
}

EigenPair smallest_eigenpair(const Tridiagonal& k, const std::vector<double>& m, const EigenOptions& opt) {
  const std::size_t n = k.size();
  if (n == 0 || m.size() != n || k.off.size() + 1 != n)
    throw Error(ErrorCode::InvalidParams, "inconsistent matrix sizes");

  // bracket: count(lo) == 0, count(hi) >= 1
  double hi = discrete_rayleigh(k, m, std::vector<double>(n, 1.0));
  for (int it = 0; count_below(k, m, hi) == 0; ++it) {
    if (it > 200) throw Error(ErrorCode::NoConvergence, "could not bracket the lowest eigenvalue");
    hi += std::max(1.0, std::abs(hi));
  }
  double lo = hi - std::max(1.0, std::abs(hi));
  for (int it = 0; count_below(k, m, lo) > 0; ++it) {
    if (it > 2000 || !std::isfinite(lo)) throw Error(ErrorCode::NoConvergence, "could not bracket the lowest eigenvalue");
    lo -= 4.0 * std::max(1.0, std::abs(lo));
  }

  std::int64_t olo = ordered(lo), ohi = ordered(hi);
  while (true) {
    const std::int64_t mid = std::midpoint(olo, ohi);
    if (mid == olo || mid == ohi) break;
    if (count_below(k, m, from_ordered(mid)) == 0)
      olo = mid;
    else
      ohi = mid;
  }
  const double lambda_lo = from_ordered(olo);

  // shift a little below the bracket so K - sigma M stays safely positive definite
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double sigma = lambda_lo - std::ldexp(1e-12, 10 * attempt) * std::max(1.0, std::abs(lambda_lo));
    EigenPair out;
    std::vector<double> v(n, 1.0);
    const double scale0 = m_norm(m, v);
    for (double& x : v) x /= scale0;
    bool broke = false;
    for (int it = 1; it <= opt.max_inverse_iterations; ++it) {
      std::vector<double> rhs(n);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = m[i] * v[i];
      v = solve_shifted(k, m, sigma, rhs);
      const double nv = m_norm(m, v);
      if (!(nv > 0.0) || !std::isfinite(nv)) {
        broke = true;
        break;
      }
      for (double& x : v) x /= nv;
      const auto kv = k.apply(v);
      double lam = 0.0;
      for (std::size_t i = 0; i < n; ++i) lam += v[i] * kv[i];
      double res = 0.0, mv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ri = kv[i] - lam * m[i] * v[i];
        res += ri * ri;
        mv += m[i] * m[i] * v[i] * v[i];
      }
      out.lambda = lam;
      out.residual = std::sqrt(res / mv) / std::max(1.0, std::abs(lam));
      out.iterations = it;
      if (out.residual < opt.residual_tol) {
        if (std::accumulate(v.begin(), v.end(), 0.0) < 0.0)
          for (double& x : v) x = -x;
        out.vector = std::move(v);
        return out;
      }
    }
    if (!broke) break;
  }
  throw Error(ErrorCode::NoConvergence, "inverse iteration did not reach the residual tolerance");
}

std::string_view to_string(SpectralVerdict v) {
  return v == SpectralVerdict::Bounded ? "Bounded" : "Diverging";
}

SpectralVerdict ladder_verdict(const std::vector<LadderRung>& ladder, double divergence_ratio) {
  const std::size_t n = ladder.size();
  if (n < 3) return SpectralVerdict::Bounded;
  const double a = ladder[n - 3].lambda1, b = ladder[n - 2].lambda1, c = ladder[n - 1].lambda1;
  // averaged over the two steps: oscillating weights drop in a staircase, one jump per log-period
  const bool falling = a < 0.0 && b <= a && c <= b && c < divergence_ratio * divergence_ratio * a;
  return falling ? SpectralVerdict::Diverging : SpectralVerdict::Bounded;
}

LadderCache::LadderCache(const WeightFamily& family, const RadialGrid& base, const LadderOptions& opt)
    : family_(family), opt_(opt) {
  if (opt.rungs < 1 || opt.n_factor < 1 || !(opt.r_min_factor > 0.0 && opt.r_min_factor <= 1.0))
    throw Error(ErrorCode::InvalidParams, "bad ladder options");
  double r_min = base.r_min();
  int n = base.n_points();
  for (int k = 0; k < opt.rungs; ++k) {
    grids_.emplace_back(r_min, base.r_max(), n);
    r_min *= opt.r_min_factor;
    n *= opt.n_factor;
  }
  for (const auto& g : grids_) assemblies_.push_back(assemble(SpectralProblem{family_, 0.0, g}));
}

RayleighResult LadderCache::solve(double c) const {
  const int rungs = static_cast<int>(grids_.size());
  std::vector<EigenPair> pairs(rungs);
  parallel_for(rungs, [&](int k) {
    pairs[k] = smallest_eigenpair(assemblies_[k].stiffness_at(c), assemblies_[k].mass, opt_.eigen);
  });
  RayleighResult out;
  out.lambda1 = pairs[0].lambda;
  out.residual = pairs[0].residual;
  out.nodes = grids_[0].nodes();
  out.eigvec.assign(out.nodes.size(), 0.0);
  std::copy(pairs[0].vector.begin(), pairs[0].vector.end(), out.eigvec.begin() + 1);
  for (int k = 0; k < rungs; ++k) out.ladder.push_back({grids_[k].n_points(), grids_[k].r_min(), pairs[k].lambda});
  out.verdict = ladder_verdict(out.ladder, opt_.divergence_ratio);
  return out;
}

RayleighResult lambda1(const SpectralProblem& problem, const LadderOptions& opt) {
  check_problem(problem);
  return LadderCache(problem.family, problem.grid, opt).solve(problem.c);
}

SweepResult critical_sweep(const WeightFamily& family, double c_lo, double c_hi, double tol,
                           const SweepGrid& grid, const LadderOptions& opt) {
  if (!(c_lo < c_hi) || !(tol > 0.0)) throw Error(ErrorCode::InvalidParams, "critical_sweep needs c_lo < c_hi, tol > 0");
  const LadderCache cache(family, effective_grid(family, grid.r_min, grid.r_max, grid.n_points), opt);
  SweepResult out;
  auto probe = [&](double c) {
    const RayleighResult r = cache.solve(c);
    for (const auto& rung : r.ladder) out.trace.push_back({c, rung.r_min, rung.n_points, rung.lambda1, r.verdict});
    return r.verdict;
  };
  const SpectralVerdict vlo = probe(c_lo);
  const SpectralVerdict vhi = probe(c_hi);
  if (vlo != SpectralVerdict::Bounded || vhi != SpectralVerdict::Diverging)
    throw Error(ErrorCode::BadBracket, "sweep bracket [" + std::to_string(c_lo) + ", " + std::to_string(c_hi) +
                                           "] gives " + std::string(to_string(vlo)) + "/" + std::string(to_string(vhi)));
  while (c_hi - c_lo > tol) {
    const double mid = 0.5 * (c_lo + c_hi);
    if (probe(mid) == SpectralVerdict::Bounded)
      c_lo = mid;
    else
      c_hi = mid;
  }
  out.c_lo = c_lo;
  out.c_hi = c_hi;
  out.c_hat = 0.5 * (c_lo + c_hi);
  return out;
}

// ---- explicit test functions -------------------------------------------------

StepValue sharpness_cutoff(double r) { return smooth_step_down(r, 1.0, 2.0); }

double sharpness_cutoff_gradient_bound() {
  static const double bound = [] {
    constexpr int n = 200000;
    double best = 0.0;
    for (int i = 1; i < n; ++i) best = std::max(best, std::abs(sharpness_cutoff(1.0 + double(i) / n).d1));
    return best;
  }();
  return bound;
}

GammaInterval phi_n_gamma_interval(double c, double N0) {
  if (!(c > 0.0)) return {0.0, 0.0};
  return {std::max(-std::sqrt(c), -0.5 * N0), std::min(0.5 * (2.0 - N0), 0.0)};
}

namespace {

// int_a^b r^p dmu with a possibly 0
double power_moment(const WeightFamily& family, double p, double a, double b) {
  if (!(b > a)) return 0.0;
  const auto res = integrate_weighted_log(family, [p](double s) { return LogValue{p * s, 1.0}; }, a, b);
  if (res.divergent)
    throw Error(ErrorCode::NonIntegrableTestFunction,
                "r^" + std::to_string(p) + " is not integrable at the origin for " + family.describe());
  if (!res.converged) throw Error(ErrorCode::QuadratureFailure, "power moment failed for " + family.describe());
  return res.value;
}

struct OuterPieces {
  double numerator = 0.0;  // int_1^2 (|(r^g theta)'|^2 - c r^{2g-2} theta^2) dmu
  double denominator = 0.0;
  double mass = 0.0;  // int_{B_2 \ B_1} dmu
};

OuterPieces outer_pieces(const WeightFamily& family, double c, double g) {
  OuterPieces o;
  if (family.support_radius() <= 1.0) return o;
  o.numerator = weighted_integral(family, [c, g](double r) {
    const StepValue th = sharpness_cutoff(r);
    const double rg = std::pow(r, g);
    const double d = g * rg / r * th.value + rg * th.d1;
    return d * d - c * rg * rg / (r * r) * th.value * th.value;
  }, 1.0, 2.0);
  o.denominator = weighted_integral(family, [g](double r) {
    const double t = sharpness_cutoff(r).value;
    return std::pow(r, 2 * g) * t * t;
  }, 1.0, 2.0);
  o.mass = weighted_integral(family, [](double) { return 1.0; }, 1.0, 2.0);
  return o;
}

}  // namespace

QuotientResult quotient_phi_n(const WeightFamily& family, double c, double gamma, int n) {
  return quotient_phi_n(family, estimate_N0(family).value, c, gamma, n);
}

QuotientResult quotient_phi_n(const WeightFamily& family, double N0, double c, double gamma, int n,
                              bool enforce_admissible) {
  if (n < 2) throw Error(ErrorCode::InvalidParams, "quotient_phi_n needs n >= 2");
  const GammaInterval iv = phi_n_gamma_interval(c, N0);
  if (enforce_admissible && !(iv.lo < gamma && gamma < iv.hi))
    throw Error(ErrorCode::InadmissibleGamma, "gamma=" + std::to_string(gamma) + " outside (" + std::to_string(iv.lo) +
                                                  ", " + std::to_string(iv.hi) + ")");
  const double rn = 1.0 / n;
  const double plateau = std::pow(static_cast<double>(n), -2.0 * gamma);  // phi_n^2 on B_{1/n}
  const double inner_sq = power_moment(family, -2.0, 0.0, rn);
  const double inner_mass = power_moment(family, 0.0, 0.0, rn);
  const double I = power_moment(family, 2 * gamma - 2, rn, 1.0);
  const double D = power_moment(family, 2 * gamma, rn, 1.0);
  const OuterPieces o = outer_pieces(family, c, gamma);

  QuotientResult q;
  q.numerator = -c * plateau * inner_sq + (gamma * gamma - c) * I + o.numerator;
  q.denominator = plateau * inner_mass + D + o.denominator;
  q.quotient = q.numerator / q.denominator;
  const double gb = sharpness_cutoff_gradient_bound();
  q.C1 = (2 * gb * gb + 2 * gamma * gamma) * o.mass;
  q.C2 = o.denominator;
  q.bound_numerator = (gamma * gamma - c) * I + q.C1;
  q.bound = q.C2 > 0.0 ? q.bound_numerator / q.C2 : kNaN;
  return q;
}

QuotientResult quotient_phi_gamma(const WeightFamily& family, double c, double gamma) {
  return quotient_phi_gamma(family, estimate_N0(family).value, c, gamma);
}

QuotientResult quotient_phi_gamma(const WeightFamily& family, double N0, double c, double gamma) {
  if (!(gamma < 0.0 && gamma > 0.5 * (2.0 - N0)))
    throw Error(ErrorCode::InadmissibleGamma, "phi_gamma needs (2-N0)/2 < gamma < 0");
  const double I = power_moment(family, 2 * gamma - 2, 0.0, 1.0);
  const double D = power_moment(family, 2 * gamma, 0.0, 1.0);
  const OuterPieces o = outer_pieces(family, c, gamma);
  QuotientResult q;
  q.numerator = (gamma * gamma - c) * I + o.numerator;
  q.denominator = D + o.denominator;
  q.quotient = q.numerator / q.denominator;
  const double gb = sharpness_cutoff_gradient_bound();
  q.C1 = (2 * gb * gb + 2 * gamma * gamma) * o.mass;
  q.C2 = power_moment(family, 0.0, 0.0, 1.0);
  q.bound_numerator = (gamma * gamma - c) * I + q.C1;
  q.bound = q.C2 > 0.0 ? q.bound_numerator / q.C2 : kNaN;
  return q;
}

PhiGammaLadder phi_gamma_ladder(const WeightFamily& family, double N0, double c, const PhiGammaOptions& opt) {
  const double g_star = 0.5 * (2.0 - N0);
  if (!(g_star < 0.0)) throw Error(ErrorCode::InadmissibleGamma, "phi_gamma ladder needs N0 > 2");
  PhiGammaLadder out;
  for (int j = 1; j <= opt.j_max; ++j) {
    const double g = g_star - g_star * std::ldexp(1.0, -j);
    out.gammas.push_back(g);
    out.quotients.push_back(quotient_phi_gamma(family, N0, c, g));
  }
  out.min_quotient = out.quotients.front().quotient;
  for (const auto& q : out.quotients) out.min_quotient = std::min(out.min_quotient, q.quotient);
  const std::size_t n = out.quotients.size();
  const std::size_t tail = std::min<std::size_t>(static_cast<std::size_t>(opt.tail), n);
  bool decreasing = true;
  for (std::size_t i = n - tail + 1; i < n; ++i)
    decreasing = decreasing && out.quotients[i].quotient < out.quotients[i - 1].quotient;
  out.diverges = decreasing && out.quotients.back().quotient < -opt.divergence_threshold;
  return out;
}

RadialTestFunction bump(double a) {
  if (!(a > 0.0)) throw Error(ErrorCode::InvalidParams, "bump radius must be positive");
  return {[a](double r) {
            const double x = r / a;
            return x < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
          },
          [a](double r) {
            const double x = r / a;
            if (x >= 1.0) return 0.0;
            const double q = 1.0 - x * x;
            return -std::exp(-1.0 / q) * 2.0 * x / (a * q * q);
          }};
}

RadialTestFunction shell_bump(double lo, double hi) {
  if (!(lo >= 0.0 && hi > lo)) throw Error(ErrorCode::InvalidParams, "shell_bump needs 0 <= lo < hi");
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  return {[=](double r) {
            const double x = (r - mid) / half;
            return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
          },
          [=](double r) {
            const double x = (r - mid) / half;
            if (std::abs(x) >= 1.0) return 0.0;
            const double q = 1.0 - x * x;
            return -std::exp(-1.0 / q) * 2.0 * x / (half * q * q);
          }};
}

ImprovedHardySlack improved_hardy_slack(const RadialTestFunction& u, int dimension) {
  for (int i = 0; i <= 64; ++i) {
    const double r = 1.0 - 1e-3 * i / 64.0;
    if (u.value(r) != 0.0) throw Error(ErrorCode::UnsupportedFunction, "u must vanish near r = 1");
  }
  const WeightFamily leb = WeightFamily::lebesgue(dimension);
  ImprovedHardySlack out;
  out.gradient_sq = weighted_integral(leb, [&](double r) {
    const double d = u.derivative(r);
    return d * d;
  }, 0.0, 1.0);
  out.hardy_term = hardy_constant(dimension) * weighted_integral(leb, [&](double r) {
    const double v = u.value(r);
    return v * v / (r * r);
  }, 0.0, 1.0);
  out.log_term = 0.25 * weighted_integral(leb, [&](double r) {
    const double v = u.value(r);
    if (v == 0.0) return 0.0;
    const double l = std::log(r);
    return v * v / (r * r * l * l);
  }, 0.0, 1.0);
  out.slack = out.gradient_sq - out.hardy_term - out.log_term;
  return out;
}

Crosscheck weighted_vs_flat_crosscheck(const WeightFamily& family, const RadialTestFunction& phi, double r_lo,
                                       double r_hi) {
  return weighted_vs_flat_crosscheck(compute_profile(family), phi, r_lo, r_hi);
}

Crosscheck weighted_vs_flat_crosscheck(const HardyProfile& profile, const RadialTestFunction& phi, double r_lo,
                                       double r_hi) {
  const WeightFamily& family = profile.family;
  if (!(r_lo > 0.0 && r_hi > r_lo && r_hi < family.support_radius()))
    throw Error(ErrorCode::InvalidParams, "test function support must lie inside (0, support radius)");
  auto sq = [](double x) { return x * x; };
  const double grad = weighted_integral(family, [&](double r) { return sq(phi.derivative(r)); }, r_lo, r_hi);
  const double inv = weighted_integral(family, [&](double r) { return sq(phi.value(r) / r); }, r_lo, r_hi);
  // U can vanish identically up to rounding, so it gets an absolute floor from the other terms
  IntegrationOptions u_opt;
  u_opt.abs_tol = 1e-13 * (grad + std::abs(profile.c0_N) * inv);
  const double u_int =
      weighted_integral(family, [&](double r) { return compute_U(profile, r) * sq(phi.value(r)); }, r_lo, r_hi, u_opt);
  const double umu_int =
      weighted_integral(family, [&](double r) { return compute_Umu(family, r) * sq(phi.value(r)); }, r_lo, r_hi);
  const WeightFamily leb = WeightFamily::lebesgue(family.dimension());
  const double flat = weighted_integral(leb, [&](double r) {
    const double v = phi.value(r);
    const double d = phi.derivative(r);
    if (v == 0.0 && d == 0.0) return 0.0;
    return family.mu(r) * sq(d + 0.5 * v * family.log_derivatives(r).d1);
  }, r_lo, r_hi);

  Crosscheck out;
  out.lhs = profile.c0_mu * inv;
  out.rhs = grad + u_int;
  out.gap = out.rhs - out.lhs;
  out.flat = flat;
  out.weighted = grad + umu_int;
  const double scale = std::max({std::abs(flat), std::abs(out.weighted), std::numeric_limits<double>::min()});
  out.identity_residual = std::abs(flat - out.weighted) / scale;
  return out;
}

}  // namespace whardy

#include "whardy/hardy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace whardy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = std::numbers::ln2;

// Least-squares line y = a + b x; returns b.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

// Quadratic least squares in x, evaluated at x0. Abscissae are standardised first.
double quadratic_extrapolate(const std::vector<double>& x, const std::vector<double>& y, double x0) {
  const std::size_t n = x.size();
  double mx = 0.0;
  for (double v : x) mx += v;
  mx /= static_cast<double>(n);
  double sd = 0.0;
  for (double v : x) sd += (v - mx) * (v - mx);
  sd = std::sqrt(sd / static_cast<double>(n));
  std::array<std::array<double, 4>, 3> a{};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (x[i] - mx) / sd;
    const std::array<double, 3> phi{1.0, t, t * t};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] += phi[r] * phi[c];
      a[r][3] += phi[r] * y[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<double, 3> coef{};
  for (int r = 2; r >= 0; --r) {
    double s = a[r][3];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * coef[c];
    coef[r] = s / a[r][r];
  }
  const double t0 = (x0 - mx) / sd;
  return coef[0] + coef[1] * t0 + coef[2] * t0 * t0;
}

// only the divergence flag is used, so the accuracy target is loose
bool integrable_power(const WeightFamily& family, double delta, double r_hi = 1.0) {
  const IntegrationOptions opt{1e-8, 0.0, 400};
  return !integrate_weighted_log(family, [delta](double s) { return LogValue{-delta * s, 1.0}; }, 0.0, r_hi, opt)
              .divergent;
}

// int_{B_R} f dmu for log-form f, +inf when the origin is not integrable. Deep blocks
// that miss the accuracy target still count: only the finiteness of the tail matters here.
double integral_or_inf(const WeightFamily& family, const LogRadialFn& f, double r_hi) {
  const WeightedIntegral r = integrate_weighted_log(family, f, 0.0, r_hi);
  return r.divergent ? kInf : r.value;
}

}  // namespace

double hardy_constant(double n) { return 0.25 * (n - 2.0) * (n - 2.0); }

double r2_Umu(const WeightFamily& family, double s) {
  const ScaledLogDerivatives d = family.scaled_log_derivatives(s);
  return 0.25 * d.r_d1 * d.r_d1 - 0.5 * d.r2_lap;
}

double compute_Umu(const WeightFamily& family, double r) {
  const LogDerivatives d = family.log_derivatives(r);
  return 0.25 * d.d1 * d.d1 - 0.5 * d.lap_ratio;
}

LimitEstimate estimate_r2Umu_limit(const WeightFamily& family, const ProfileOptions& opt) {
  if (opt.ladder_k_max - opt.ladder_k_min + 1 < opt.tail_window || opt.tail_window < 3)
    throw Error(ErrorCode::InvalidParams, "ladder shorter than its tail window");
  LimitEstimate out;
  for (int k = opt.ladder_k_min; k <= opt.ladder_k_max; ++k) {
    const double s = -k * kLn2;
    double v;
    try {
      v = r2_Umu(family, s);
    } catch (const Error& e) {
      throw Error(ErrorCode::ProfileUndefined, std::string("near-origin evaluation failed: ") + e.what());
    }
    if (!std::isfinite(v) || !std::isfinite(family.log_mu(s)))
      throw Error(ErrorCode::ProfileUndefined, family.describe() + " is not evaluable near 0");
    out.r.push_back(std::ldexp(1.0, -k));
    out.values.push_back(v);
  }
  const std::size_t w = static_cast<std::size_t>(opt.tail_window);
  const std::vector<double> tail(out.values.end() - static_cast<std::ptrdiff_t>(w), out.values.end());
  const auto [mn, mx] = std::minmax_element(tail.begin(), tail.end());
  const double spread = *mx - *mn;
  double mean = 0.0;
  for (double v : tail) mean += v;
  mean /= static_cast<double>(w);

  if (spread <= opt.oscillation_tol * std::max(1.0, std::abs(mean))) {
    out.limsup = out.liminf = tail.back();
    return out;
  }
  bool increasing = true, decreasing = true;
  for (std::size_t i = 1; i < w; ++i) {
    if (tail[i] < tail[i - 1]) increasing = false;
    if (tail[i] > tail[i - 1]) decreasing = false;
  }
  const int k_lo = opt.ladder_k_max - opt.tail_window + 1;
  if (increasing || decreasing) {
    // slow monotone drift (log corrections): extrapolate in 1/|log r|
    std::vector<double> x(w);
    for (std::size_t i = 0; i < w; ++i) x[i] = 1.0 / ((k_lo + static_cast<int>(i)) * kLn2);
    out.limsup = out.liminf = quadratic_extrapolate(x, tail, 0.0);
    return out;
  }
  // oscillating tail: resample the window densely and report its extremes
  out.converged = false;
  const double s_hi = -k_lo * kLn2;
  const double s_lo = -opt.ladder_k_max * kLn2;
  double hi = -kInf, lo = kInf;
  const int m = std::max(opt.tail_dense_samples, 2);
  for (int i = 0; i < m; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / (m - 1);
    const double v = r2_Umu(family, s);
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  out.limsup = hi;
  out.liminf = lo;
  return out;
}

N0Estimate estimate_N0(const WeightFamily& family, const ProfileOptions& opt) {
  N0Estimate out;
  const double r_hi = std::min(1.0, family.support_radius());
  double lo = opt.n0_delta_lo;
  double hi = opt.n0_delta_hi;
  const bool lo_ok = integrable_power(family, lo, r_hi);
  out.probes.emplace_back(lo, lo_ok);
  if (!lo_ok) throw Error(ErrorCode::ProfileUndefined, "mu is not integrable near 0 even against r^" + std::to_string(-lo));
  const bool hi_ok = integrable_power(family, hi, r_hi);
  out.probes.emplace_back(hi, hi_ok);
  if (hi_ok) {
    out.value = kInf;
    return out;
  }
  while (hi - lo > opt.n0_bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    const bool ok = integrable_power(family, mid, r_hi);
    out.probes.emplace_back(mid, ok);
    (ok ? lo : hi) = mid;
  }
  out.value = lo;
  return out;
}

double estimate_N0_slope(const WeightFamily& family, const ProfileOptions& opt) {
  const int k_lo = opt.ladder_k_max - opt.tail_window + 1;
  const int m = 64;
  std::vector<double> s(m), y(m);
  for (int i = 0; i < m; ++i) {
    s[i] = -(k_lo + (opt.ladder_k_max - k_lo) * static_cast<double>(i) / (m - 1)) * kLn2;
    y[i] = family.log_mu(s[i]);
    if (!std::isfinite(y[i])) throw Error(ErrorCode::ProfileUndefined, "log mu not finite near 0");
  }
  // log mu ~ -beta log r near 0
  const double beta_hat = -ls_slope(s, y);
  return family.dimension() - beta_hat;
}

HardyProfile compute_profile(const WeightFamily& family, const ProfileOptions& opt) {
  HardyProfile p{family};
  p.c0_N = hardy_constant(family.dimension());
  LimitEstimate lim = estimate_r2Umu_limit(family, opt);
  p.L = lim.limsup;
  p.L_inf = lim.liminf;
  p.L_converged = lim.converged;
  p.ladder_r = std::move(lim.r);
  p.ladder_r2Umu = std::move(lim.values);
  p.c0_mu = p.c0_N - p.L;
  if (!p.L_converged) p.warnings.push_back("NonConvergentLimit: r^2 U_mu oscillates near 0; L is the tail maximum");
  N0Estimate n0 = estimate_N0(family, opt);
  p.N0 = n0.value;
  p.N0_probes = std::move(n0.probes);
  p.N0_slope = estimate_N0_slope(family, opt);
  p.c0_N0 = std::isfinite(p.N0) ? hardy_constant(p.N0) : kInf;
  if (!(std::abs(p.N0 - p.N0_slope) <= opt.n0_agreement))
    p.warnings.push_back("OscillatoryExponent: slope estimate of N0 differs from the integrability estimate");
  return p;
}

double compute_U(const HardyProfile& profile, double r) {
  return compute_Umu(profile.family, r) - profile.L / (r * r);
}

double compute_U(const WeightFamily& family, double r) {
  const double L = estimate_r2Umu_limit(family).limsup;
  return compute_Umu(family, r) - L / (r * r);
}

std::string_view to_string(HypothesisClass c) {
  switch (c) {
    case HypothesisClass::H2: return "H2";
    case HypothesisClass::H2PrimeOnly: return "H2'";
    case HypothesisClass::Neither: return "neither";
  }
  return "neither";
}

namespace {

std::optional<bool> h1_closed_form(const WeightFamily& w) {
  switch (w.kind()) {
    case WeightKind::Lebesgue:
    case WeightKind::ExpPower:
    case WeightKind::LogWeight:
    case WeightKind::Oscillating: return true;
    case WeightKind::PowerExpPower: return w.beta() == 0.0;
    case WeightKind::Custom: return std::nullopt;
  }
  return std::nullopt;
}

BoundOutside check_bounded_outside(const HardyProfile& profile, double R, const HypothesisOptions& opt) {
  BoundOutside out{R, true, -kInf};
  const WeightFamily& w = profile.family;
  const double lr = std::log(R);
  const double lo = std::log(opt.iii_outer);
  std::vector<double> rs, us;
  for (int i = 0; i < opt.iii_mesh; ++i) {
    const double s = lr + (lo - lr) * i / (opt.iii_mesh - 1);
    const double r = std::exp(s);
    if (r >= w.support_radius()) continue;
    const double u = (r2_Umu(w, s) - profile.L) / (r * r);
    if (std::isnan(u)) continue;
    rs.push_back(r);
    us.push_back(u);
    out.bound = std::max(out.bound, u);
  }
  if (us.empty()) return out;  // mu vanishes on the whole region
  if (!std::isfinite(out.bound)) {
    out.bounded = false;
    return out;
  }
  // growth heuristic: the maximum sits at the outer end and keeps climbing over the last decade
  const std::size_t n = us.size();
  const double last = us.back();
  const double decade = rs.back() / 10.0;
  std::size_t j = n - 1;
  while (j > 0 && rs[j] > decade) --j;
  const double earlier = us[j];
  if (last >= out.bound && last > 0.0 && last > 2.0 * std::max(earlier, 0.0) && n > 1 && us[n - 2] < last)
    out.bounded = false;
  return out;
}

}  // namespace

HypothesisReport check_hypotheses(const WeightFamily& family, const HypothesisOptions& opt) {
  HypothesisReport rep{compute_profile(family, opt.profile)};
  const HardyProfile& p = rep.profile;
  rep.h1 = h1_closed_form(family);
  const double r1 = std::min(1.0, family.support_radius());

  // i) |grad mu^{1/2}|^2 = mu (mu'/mu)^2 / 4 and |Delta mu| = mu |Delta mu / mu|, against dx
  auto grad_term = [&family](double s) -> LogValue {
    const double v = family.scaled_log_derivatives(s).r_d1;
    if (v == 0.0) return {};
    return {std::log(0.25 * v * v) - 2.0 * s, 1.0};
  };
  auto lap_term = [&family](double s) -> LogValue {
    const double v = family.scaled_log_derivatives(s).r2_lap;
    if (v == 0.0) return {};
    return {std::log(std::abs(v)) - 2.0 * s, 1.0};
  };
  rep.h2_i_grad_sqrt_mu = integral_or_inf(family, grad_term, r1);
  rep.h2_i_abs_lap_mu = integral_or_inf(family, lap_term, r1);
  rep.h2_i = std::isfinite(rep.h2_i_grad_sqrt_mu) && std::isfinite(rep.h2_i_abs_lap_mu) && p.N0 > 0.0;

  // ii)
  rep.h2_ii = std::isfinite(p.c0_mu);

  // iii)
  rep.h2_iii_all = true;
  for (double R : opt.iii_radii) {
    rep.h2_iii.push_back(check_bounded_outside(p, R, opt));
    rep.h2_iii_all = rep.h2_iii_all && rep.h2_iii.back().bounded;
  }

  // iv) r^2 U |log r|^2 <= 1/4 on r = 2^-k
  int k_star = opt.iv_k_max + 1;
  for (int k = opt.iv_k_max; k >= 1; --k) {
    const double s = -k * kLn2;
    if (std::exp(s) >= family.support_radius()) break;
    const double q = (r2_Umu(family, s) - p.L) * s * s;
    rep.h2_iv_samples.emplace_back(std::exp(s), q);
    if (q <= 0.25 * (1.0 + 1e-12)) {
      if (k_star == k + 1) k_star = k;
    }
  }
  std::reverse(rep.h2_iv_samples.begin(), rep.h2_iv_samples.end());
  rep.h2_iv = k_star <= opt.iv_k_max - opt.iv_min_tail + 1;
  rep.h2_iv_R0 = rep.h2_iv ? std::ldexp(1.0, -k_star) : 0.0;

  // H3
  rep.h3_N0 = p.N0;
  rep.h3_probes = p.N0_probes;
  rep.h3 = std::isfinite(p.N0) && std::isfinite(integral_or_inf(
                                      family, [](double) { return LogValue{0.0, 1.0}; }, r1));

  // H3' iii
  if (std::isfinite(p.N0)) {
    for (int j = 1; j <= opt.h3p_j_max; ++j) {
      const double lambda = std::ldexp(1.0, -j);
      const double e = lambda - p.N0;
      const double v = integral_or_inf(family, [e](double s) { return LogValue{e * s, 1.0}; }, r1);
      rep.h3p_samples.emplace_back(lambda, lambda * v);
    }
    const std::size_t n = rep.h3p_samples.size();
    const double last = rep.h3p_samples[n - 1].second;
    const double prev = rep.h3p_samples[n - 2].second;
    rep.h3p_iii = rep.h3 && last > opt.h3p_threshold && (last > prev || !std::isfinite(last));
  }

  // appendix condition: delta^-p int_{B_delta} dmu -> 0
  std::vector<double> logd, logm;
  bool mass_finite = true;
  for (int k = opt.cond1_k_min; k <= opt.cond1_k_max; ++k) {
    const double d = std::ldexp(1.0, -k);
    const double m = integral_or_inf(family, [](double) { return LogValue{0.0, 1.0}; }, d);
    if (!std::isfinite(m) || !(m > 0.0)) {
      mass_finite = false;
      break;
    }
    logd.push_back(std::log(d));
    logm.push_back(std::log(m));
  }
  for (double pp : opt.cond1_p) {
    Cond1Entry e{pp, false, -kInf};
    if (mass_finite) {
      std::vector<double> y(logm.size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = logm[i] - pp * logd[i];
      e.exponent = ls_slope(logd, y);
      e.holds = e.exponent > opt.cond1_exponent_tol;
    }
    rep.cond1.push_back(e);
  }

  rep.h2_prime = rep.h2_i && rep.h2_ii && rep.h2_iii_all;
  rep.h2 = rep.h2_prime && rep.h2_iv;
  rep.classification = rep.h2 ? HypothesisClass::H2
                       : rep.h2_prime ? HypothesisClass::H2PrimeOnly
                                      : HypothesisClass::Neither;
  return rep;
}

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string report_to_json(const HypothesisReport& rep) {
  using nlohmann::json;
  const HardyProfile& p = rep.profile;
  json j;
  j["family"] = {{"kind", std::string(to_string(p.family.kind()))},
                 {"N", p.family.dimension()},
                 {"b", p.family.b()},
                 {"m", p.family.m()},
                 {"beta", p.family.beta()},
                 {"alpha", p.family.alpha()}};
  j["profile"] = {{"c0_N", num(p.c0_N)},   {"L", num(p.L)},       {"L_liminf", num(p.L_inf)},
                  {"L_converged", p.L_converged}, {"c0_mu", num(p.c0_mu)}, {"N0", num(p.N0)},
                  {"N0_slope", num(p.N0_slope)}, {"c0_N0", num(p.c0_N0)}, {"warnings", p.warnings}};
  j["h1"] = rep.h1 ? json(*rep.h1) : json(nullptr);
  j["h2_i"] = {{"holds", rep.h2_i},
               {"grad_sqrt_mu_sq", num(rep.h2_i_grad_sqrt_mu)},
               {"abs_laplacian_mu", num(rep.h2_i_abs_lap_mu)}};
  j["h2_ii"] = {{"holds", rep.h2_ii}, {"c0_mu", num(p.c0_mu)}};
  json iii = json::array();
  for (const auto& b : rep.h2_iii) iii.push_back({{"R", b.R}, {"bounded", b.bounded}, {"bound", num(b.bound)}});
  j["h2_iii"] = {{"holds", rep.h2_iii_all}, {"radii", iii}};
  json iv = json::array();
  for (const auto& [r, q] : rep.h2_iv_samples) iv.push_back({{"r", r}, {"r2U_log2", num(q)}});
  j["h2_iv"] = {{"holds", rep.h2_iv}, {"R0", rep.h2_iv_R0}, {"samples", iv}};
  json probes = json::array();
  for (const auto& [d, ok] : rep.h3_probes) probes.push_back({{"delta", d}, {"integrable", ok}});
  j["h3_N0"] = {{"holds", rep.h3}, {"N0", num(rep.h3_N0)}, {"probes", probes}};
  json h3p = json::array();
  for (const auto& [l, v] : rep.h3p_samples) h3p.push_back({{"lambda", l}, {"value", num(v)}});
  j["h3p_iii"] = {{"diverges", rep.h3p_iii}, {"samples", h3p}};
  json c1 = json::array();
  for (const auto& e : rep.cond1) c1.push_back({{"p", e.p}, {"holds", e.holds}, {"exponent", num(e.exponent)}});
  j["cond1"] = c1;
  j["h2"] = rep.h2;
  j["h2_prime"] = rep.h2_prime;
  j["classification"] = std::string(to_string(rep.classification));
  return j.dump(2) + "\n";
}

std::string report_to_table(const HypothesisReport& rep) {
  const HardyProfile& p = rep.profile;
  std::ostringstream os;
  os.precision(6);
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  os << "family          " << p.family.describe() << "\n";
  os << "c0(N)           " << p.c0_N << "\n";
  os << "L               " << p.L << (p.L_converged ? "" : " (tail maximum)") << "\n";
  os << "c0_mu           " << p.c0_mu << "\n";
  os << "N0              " << p.N0 << "  (slope estimate " << p.N0_slope << ")\n";
  os << "c0(N0)          " << p.c0_N0 << "\n";
  os << "H1              " << (rep.h1 ? yn(*rep.h1) : "unknown") << "\n";
  os << "H2 i            " << yn(rep.h2_i) << "\n";
  os << "H2 ii           " << yn(rep.h2_ii) << "\n";
  for (const auto& b : rep.h2_iii) {
    std::ostringstream label;
    label << "H2 iii R=" << b.R;
    os << label.str() << std::string(16 - std::min<std::size_t>(15, label.str().size()), ' ')
       << yn(b.bounded) << "  sup U = " << b.bound << "\n";
  }
  os << "H2 iv           " << yn(rep.h2_iv) << "  R0 = " << rep.h2_iv_R0 << "\n";
  os << "H3              " << yn(rep.h3) << "\n";
  os << "H3' iii         " << yn(rep.h3p_iii) << "\n";
  for (const auto& e : rep.cond1)
    os << "cond1 p=" << e.p << "       " << yn(e.holds) << "  exponent = " << e.exponent << "\n";
  os << "classification  " << to_string(rep.classification) << "\n";
  for (const auto& w : p.warnings) os << "warning         " << w << "\n";
  return os.str();
}

}  // namespace whardy

#include "whardy/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace whardy {

namespace {

using Moments = std::array<double, 3>;

constexpr std::string_view kOverflow = "norm left the double range";

// {int w, int (1-t) w, int t w} on [a, b]
Moments element_moments(const WeightFamily& family, double a, double b) {
  const double h = b - a;
  auto f = [a, h](double r) -> Moments {
    const double t = (r - a) / h;
    return {1.0, 1.0 - t, t};
  };
  return radial_moments<3>(family, f, a, b);
}

void check_grid(const WeightFamily& family, const RadialGrid& grid) {
  if (grid.n_points() < 4) throw Error(ErrorCode::InvalidParams, "grid too small");
  if (grid.r_max() > family.support_radius())
    throw Error(ErrorCode::OutsideSupport, "grid extends beyond the support of " + family.describe());
}

EvolutionOperator scatter(const WeightFamily& family, const RadialGrid& grid, const std::vector<Moments>& mom,
                          OuterBoundary outer) {
  const auto& r = grid.nodes();
  const std::size_t n = r.size();
  const std::size_t last = outer == OuterBoundary::Neumann ? n - 1 : n - 2;
  const std::size_t m = last;
  EvolutionOperator op;
  op.outer = outer;
  op.first_node = 1;
  op.sphere_area = unit_sphere_area(family.dimension());
  op.gradient.diag.assign(m, 0.0);
  op.gradient.off.assign(m - 1, 0.0);
  op.mass.assign(m, 0.0);
  op.nodes.assign(r.begin() + 1, r.begin() + 1 + static_cast<std::ptrdiff_t>(m));
  for (std::size_t i = 1; i <= last; ++i) {
    const std::size_t j = i - 1;
    const double hl = r[i] - r[i - 1];
    const Moments& L = mom[i - 1];
    double d = L[0] / (hl * hl);
    double w = L[2];
    if (i + 1 < n) {
      const double hr = r[i + 1] - r[i];
      const Moments& R = mom[i];
      d += R[0] / (hr * hr);
      w += R[1];
      if (j + 1 < m) op.gradient.off[j] = -R[0] / (hr * hr);
    }
    op.gradient.diag[j] = d;
    op.mass[j] = w;
  }
  for (double v : op.mass)
    if (!(v > 0.0)) throw Error(ErrorCode::QuadratureFailure, "mass matrix has a non-positive diagonal entry");
  return op;
}

template <class Body>
void parallel_for(int n, Body&& body) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(whardy_evolution_err)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

double sum_sq(const std::vector<double>& m, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += m[i] * u[i] * u[i];
  return s;
}

}  // namespace

EvolutionOperator build_evolution_operator(const WeightFamily& family, const RadialGrid& grid,
                                           OuterBoundary outer) {
  check_grid(family, grid);
  const auto& r = grid.nodes();
  std::vector<Moments> mom(r.size() - 1);
  parallel_for(static_cast<int>(mom.size()), [&](int e) { mom[e] = element_moments(family, r[e], r[e + 1]); });
  return scatter(family, grid, mom, outer);
}

EvolutionOperator build_evolution_operator_serial(const WeightFamily& family, const RadialGrid& grid,
                                                  OuterBoundary outer) {
  check_grid(family, grid);
  const auto& r = grid.nodes();
  std::vector<Moments> mom(r.size() - 1);
  for (std::size_t e = 0; e < mom.size(); ++e) mom[e] = element_moments(family, r[e], r[e + 1]);
  return scatter(family, grid, mom, outer);
}

NormSeries run_capped(const EvolutionOperator& op, double c, double cap, const RadialFn& u0, double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0) || !std::isfinite(T) || !std::isfinite(c) || !(cap > 0.0))
    throw Error(ErrorCode::InvalidParams, "run_capped needs T > 0, dt > 0, cap > 0 and finite c");
  const std::size_t m = op.mass.size();
  const auto steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  const double h = T / static_cast<double>(steps);

  std::vector<double> u(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = u0(op.nodes[i]);
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParams, "initial datum is not finite");
    if (v < 0.0) throw Error(ErrorCode::NegativeDatum, "initial datum is negative at r = " + std::to_string(op.nodes[i]));
    u[i] = v;
  }

  // A = M + h (G - diag(M V_cap)); a symmetric Z-matrix, so positive pivots make it an M-matrix
  std::vector<double> pivot(m), lower(m > 0 ? m - 1 : 0);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = op.nodes[i];
    const double v = std::min(c / (r * r), cap);
    double a = op.mass[i] + h * (op.gradient.diag[i] - op.mass[i] * v);
    if (i > 0) a -= h * op.gradient.off[i - 1] * lower[i - 1];
    if (!(a > 0.0))
      throw Error(ErrorCode::SchemeDivergence, "implicit operator is not positive definite for cap " +
                                                   std::to_string(cap) + "; reduce dt");
    pivot[i] = a;
    if (i + 1 < m) lower[i] = h * op.gradient.off[i] / a;
  }

  NormSeries s;
  s.cap = cap;
  double log_scale = 0.0;
  auto record = [&](double t) {
    const double q = sum_sq(op.mass, u);
    double lin = 0.0, lo = u.empty() ? 0.0 : u[0];
    for (std::size_t i = 0; i < m; ++i) {
      lin += op.mass[i] * u[i];
      lo = std::min(lo, u[i]);
    }
    const double ln = q > 0.0 ? 0.5 * std::log(op.sphere_area * q) + log_scale
                              : -std::numeric_limits<double>::infinity();
    if (ln > 709.0)
      throw Error(ErrorCode::SchemeDivergence, std::string(kOverflow) + " for cap " + std::to_string(cap));
    const double scale = std::exp(log_scale);
    s.t.push_back(t);
    s.log_norm.push_back(ln);
    s.norm.push_back(std::exp(ln));
    s.mass.push_back(op.sphere_area * lin * scale);
    s.min_value.push_back(lo * scale);
  };
  s.t.reserve(steps + 1);
  record(0.0);
  std::vector<double> x(m);
  for (long k = 1; k <= steps; ++k) {
    for (std::size_t i = 0; i < m; ++i) x[i] = op.mass[i] * u[i];
    for (std::size_t i = 1; i < m; ++i) x[i] -= lower[i - 1] * x[i - 1];
    for (std::size_t i = 0; i < m; ++i) x[i] /= pivot[i];
    for (std::size_t i = m - 1; i-- > 0;) x[i] -= lower[i] * x[i + 1];
    u.swap(x);
    const double peak = *std::max_element(u.begin(), u.end());
    if (!std::isfinite(peak)) throw Error(ErrorCode::SchemeDivergence, "non-finite solution");
    if (peak > 1e150) {
      for (double& v : u) v *= 1e-150;
      log_scale += 150.0 * std::log(10.0);
    }
    record(static_cast<double>(k) * h);
  }
  return s;
}

NormSeries run_capped(const WeightFamily& family, double c, double cap, const RadialFn& u0, double T, double dt,
                      const RadialGrid& grid, const CappedRunOptions& opt) {
  return run_capped(build_evolution_operator(family, grid, opt.outer), c, cap, u0, T, dt);
}

std::vector<NormSeries> run_caps(const EvolutionOperator& op, double c, const std::vector<double>& caps,
                                 const RadialFn& u0, double T, double dt) {
  std::vector<NormSeries> out(caps.size());
  parallel_for(static_cast<int>(caps.size()), [&](int k) { out[k] = run_capped(op, c, caps[k], u0, T, dt); });
  return out;
}

std::vector<NormSeries> run_caps_serial(const EvolutionOperator& op, double c, const std::vector<double>& caps,
                                        const RadialFn& u0, double T, double dt) {
  std::vector<NormSeries> out;
  for (double cap : caps) out.push_back(run_capped(op, c, cap, u0, T, dt));
  return out;
}

namespace {

Envelope fit_log(std::span<const double> t, std::span<const double> ln) {
  const std::size_t n = t.size();
  const std::size_t k0 = n / 2;
  double st = 0.0, sl = 0.0;
  for (std::size_t k = k0; k < n; ++k) {
    st += t[k];
    sl += ln[k];
  }
  const double cnt = static_cast<double>(n - k0);
  const double tm = st / cnt, lm = sl / cnt;
  double num = 0.0, den = 0.0;
  for (std::size_t k = k0; k < n; ++k) {
    num += (t[k] - tm) * (ln[k] - lm);
    den += (t[k] - tm) * (t[k] - tm);
  }
  if (!(den > 0.0)) throw Error(ErrorCode::InvalidParams, "series times are not distinct");
  Envelope e;
  e.omega = num / den;
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, ln[k] - ln[0] - e.omega * (t[k] - t[0]));
  e.M = std::exp(worst);
  return e;
}

void check_series(std::size_t nt, std::size_t nv) {
  if (nt != nv) throw Error(ErrorCode::InvalidParams, "series lengths differ");
  if (nt < 8) throw Error(ErrorCode::InvalidParams, "envelope fit needs at least 8 samples");
}

}  // namespace

Envelope fit_envelope(std::span<const double> t, std::span<const double> norm) {
  check_series(t.size(), norm.size());
  std::vector<double> ln(norm.size());
  for (std::size_t k = 0; k < norm.size(); ++k) {
    if (norm[k] == 0.0) throw Error(ErrorCode::DegenerateSeries, "zero sample at t = " + std::to_string(t[k]));
    if (!(norm[k] > 0.0) || !std::isfinite(norm[k]))
      throw Error(ErrorCode::InvalidParams, "norm samples must be positive and finite");
    ln[k] = std::log(norm[k]);
  }
  return fit_log(t, ln);
}

Envelope fit_envelope(const NormSeries& series) {
  check_series(series.t.size(), series.log_norm.size());
  for (std::size_t k = 0; k < series.log_norm.size(); ++k)
    if (!std::isfinite(series.log_norm[k]))
      throw Error(ErrorCode::DegenerateSeries, "zero sample at t = " + std::to_string(series.t[k]));
  return fit_log(series.t, series.log_norm);
}

std::string_view to_string(DichotomyVerdict v) {
  switch (v) {
    case DichotomyVerdict::ExistenceSignature: return "ExistenceSignature";
    case DichotomyVerdict::BlowupSignature: return "BlowupSignature";
    case DichotomyVerdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

EvolutionRun dichotomy_verdict(const WeightFamily& family, double c, const EvolutionConfig& cfg) {
  const auto& caps = cfg.caps;
  if (caps.size() < 3) throw Error(ErrorCode::InvalidParams, "cap ladder needs at least 3 entries");
  for (std::size_t k = 0; k + 1 < caps.size(); ++k)
    if (!(caps[k] > 0.0) || !(caps[k + 1] > caps[k]))
      throw Error(ErrorCode::InvalidParams, "caps must be positive and increasing");
  if (caps.back() < 100.0 * caps.front())
    throw Error(ErrorCode::InvalidParams, "cap ladder must span at least two decades");

  EvolutionRun run{family, c, cfg, effective_grid(family, cfg.r_min, cfg.r_max, cfg.n_points)};
  const auto u0 = shell_bump(cfg.u0_lo, cfg.u0_hi).value;
  const auto op = build_evolution_operator(family, run.grid);
  std::vector<NormSeries> series;
  for (double dt = cfg.dt;; dt *= 0.5) {
    try {
      series = run_caps(op, c, caps, u0, cfg.T, dt);
      run.dt = dt;
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SchemeDivergence) throw;
      const bool overflow = std::string_view(e.what()).find(kOverflow) != std::string_view::npos;
      if (overflow || cfg.T / (0.5 * dt) > static_cast<double>(cfg.max_steps)) {
        run.note = e.what();
        break;
      }
    }
  }

  if (!series.empty()) {
    const std::size_t k_star = (series.front().t.size() - 1) / 2;
    run.t_star = series.front().t[k_star];
    for (auto& s : series) {
      CapRun cr;
      cr.envelope = fit_envelope(s);
      cr.log_norm_at_t_star = s.log_norm[k_star];
      cr.series = std::move(s);
      run.runs.push_back(std::move(cr));
    }
    for (std::size_t k = 0; k + 1 < run.runs.size(); ++k) {
      const double decades = std::log10(caps[k + 1] / caps[k]);
      run.growth_per_decade.push_back(
          std::exp((run.runs[k + 1].log_norm_at_t_star - run.runs[k].log_norm_at_t_star) / decades));
    }

    const auto& g = run.growth_per_decade;
    const std::size_t ng = g.size();
    const bool blowup = g[ng - 1] > cfg.blowup_ratio && g[ng - 2] > cfg.blowup_ratio && g[ng - 1] > g[ng - 2];
    const Envelope& e1 = run.runs[run.runs.size() - 2].envelope;
    const Envelope& e2 = run.runs.back().envelope;
    // omega increments must shrink geometrically along the ladder; a slow creep is what a
    // near-critical blowup looks like before the cap reaches the scale where it shows
    bool contracting = true;
    for (std::size_t k = 2; k < run.runs.size(); ++k) {
      const double d_prev = std::abs(run.runs[k - 1].envelope.omega - run.runs[k - 2].envelope.omega);
      const double d = std::abs(run.runs[k].envelope.omega - run.runs[k - 1].envelope.omega);
      contracting = contracting && (d <= cfg.contraction_ratio * d_prev || d <= 1e-12 * std::abs(run.runs[k].envelope.omega) + 1e-15);
    }
    const bool cauchy = contracting &&
                        std::abs(e2.omega - e1.omega) <= cfg.envelope_rtol * std::abs(e2.omega) + 1e-12 &&
                        std::abs(e2.M - e1.M) <= cfg.envelope_rtol * e2.M;
    if (blowup)
      run.verdict = DichotomyVerdict::BlowupSignature;
    else if (cauchy)
      run.verdict = DichotomyVerdict::ExistenceSignature;

    if (cfg.control_run) {
      const double r2 = std::min(2.0 * cfg.r_max, family.support_radius());
      const int n2 = 1 + static_cast<int>(std::lround(std::log(r2 / cfg.r_min) / run.grid.log_step()));
      const auto grid2 = effective_grid(family, cfg.r_min, r2, std::max(n2, cfg.n_points));
      try {
        const auto s2 = run_capped(build_evolution_operator(family, grid2), c, caps.back(), u0, cfg.T, run.dt);
        run.truncation_sensitivity = std::abs(std::expm1(s2.log_norm[k_star] - run.runs.back().log_norm_at_t_star));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SchemeDivergence) throw;
        run.truncation_sensitivity = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }

  if (cfg.spectral_check) {
    const SweepGrid sg;
    const auto base = effective_grid(family, sg.r_min, sg.r_max, sg.n_points);
    const auto res = LadderCache(family, base).solve(c);
    run.spectral = res.verdict;
    run.spectral_lambda1 = res.lambda1;
    if (run.verdict == DichotomyVerdict::ExistenceSignature) run.agrees = res.verdict == SpectralVerdict::Bounded;
    if (run.verdict == DichotomyVerdict::BlowupSignature) run.agrees = res.verdict == SpectralVerdict::Diverging;
  }
  return run;
}

}  // namespace whardy

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "whardy/evolution.hpp"

using namespace whardy;

namespace {

const RadialFn kBump = shell_bump(0.25, 1.0).value;

EvolutionOperator exp_power_operator(int n_points = 1200, OuterBoundary outer = OuterBoundary::Dirichlet) {
  const auto w = WeightFamily::exp_power(3, 1, 2);
  return build_evolution_operator(w, effective_grid(w, 1e-9, 6.0, n_points), outer);
}

}  // namespace

TEST_CASE("fit_envelope examples") {
  std::vector<double> t, y;
  for (int k = 0; k <= 40; ++k) {
    t.push_back(0.05 * k);
    y.push_back(std::exp(2.0 * t.back()));
  }
  const auto e = fit_envelope(t, y);
  CHECK(e.omega == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e.M == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.M >= 1.0);

  // a transient bump above the second-half trend forces M > 1
  y[3] *= 1.5;
  const auto e2 = fit_envelope(t, y);
  CHECK(e2.M >= 1.5 * (1 - 1e-12));
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(y[k] <= e2.M * std::exp(e2.omega * t[k]) * y[0] * (1 + 1e-12));

  y[5] = 0.0;
  CHECK_THROWS_AS(fit_envelope(t, y), Error);
  try {
    fit_envelope(t, y);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::DegenerateSeries);
  }
  CHECK_THROWS_AS(fit_envelope(std::span(t).first(5), std::span(y).first(5)), Error);
}

TEST_CASE("implicit Euler matches a dense oracle") {
  const auto w = WeightFamily::exp_power(3, 1, 2);
  const RadialGrid grid(1e-3, 4.0, 40);
  const auto op = build_evolution_operator_serial(w, grid);
  const double c = 0.2, cap = 1e3, dt = 1e-3, T = 0.05;
  const auto s = run_capped(op, c, cap, kBump, T, dt);

  const auto m = static_cast<Eigen::Index>(op.mass.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd M(m), u(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = op.nodes[i];
    M(i) = op.mass[i];
    u(i) = kBump(r);
    A(i, i) = op.mass[i] + dt * (op.gradient.diag[i] - op.mass[i] * std::min(c / (r * r), cap));
    if (i + 1 < m) A(i, i + 1) = A(i + 1, i) = dt * op.gradient.off[i];
  }
  const auto lu = A.partialPivLu();
  for (std::size_t k = 1; k < s.t.size(); ++k) {
    u = lu.solve(M.cwiseProduct(u));
    const double norm = std::sqrt(op.sphere_area * M.dot(u.cwiseProduct(u)));
    CHECK(s.norm[k] == doctest::Approx(norm).epsilon(1e-12));
  }
}

TEST_CASE("Lebesgue shell decays at the Dirichlet rate pi^2") {
  // radial Laplacian in R^3 on 1 < r < 2: u = sin(pi (r - 1)) / r
  const auto w = WeightFamily::lebesgue(3);
  const auto s = run_capped(w, 0.0, 1.0, shell_bump(1.2, 1.8).value, 2.0, 1e-4, RadialGrid(1.0, 2.0, 800));
  const auto e = fit_envelope(s);
  CHECK(e.omega == doctest::Approx(-std::numbers::pi * std::numbers::pi).epsilon(1e-2));
}

TEST_CASE("run_capped examples") {
  const auto op = exp_power_operator();

  SUBCASE("c = 0 is dissipative") {
    const auto s = run_capped(op, 0.0, 1e4, kBump, 1.0, 1e-3);
    for (std::size_t k = 1; k < s.norm.size(); ++k) CHECK(s.norm[k] <= s.norm[k - 1]);
    CHECK(fit_envelope(s).omega <= 0.0);
  }
  SUBCASE("c = 0.2: norms at t = 0.1 settle in the cap") {
    const auto s = run_caps(op, 0.2, {1e2, 1e3, 1e4}, kBump, 0.2, 1e-3);
    const double a = s[1].norm[100], b = s[2].norm[100];
    CHECK(s[1].t[100] == doctest::Approx(0.1));
    CHECK(std::abs(b - a) < 0.01 * b);
  }
  SUBCASE("c = 0.35: norms at t = 0.1 grow faster than the cap once it bites") {
    const std::vector<double> caps{1e6, 1e7, 1e8, 1e9};
    const auto s = run_caps(op, 0.35, caps, kBump, 0.2, 1e-4);
    CHECK(s[0].t[1000] == doctest::Approx(0.1));
    std::vector<double> ratio;
    for (std::size_t k = 0; k + 1 < s.size(); ++k)
      ratio.push_back(std::exp(s[k + 1].log_norm[1000] - s[k].log_norm[1000]));
    CHECK(ratio[1] > 2.0);
    CHECK(ratio[2] > ratio[1]);
    CHECK(ratio[1] > ratio[0]);
  }
}

TEST_CASE("positivity and cap monotonicity") {
  const auto op = exp_power_operator(600);
  for (double c : {0.0, 0.1, 0.25, 0.35, 1.0}) {
    const std::vector<double> caps{1e1, 1e2, 1e3, 1e4};
    const auto s = run_caps(op, c, caps, kBump, 0.2, 1e-4);
    CAPTURE(c);
    for (const auto& x : s)
      for (double v : x.min_value) CHECK(v >= -1e-12);
    for (std::size_t k = 0; k + 1 < s.size(); ++k)
      for (std::size_t i = 0; i < s[k].norm.size(); ++i) CHECK(s[k + 1].norm[i] >= s[k].norm[i]);
  }
}

TEST_CASE("Neumann outer end conserves mass at c = 0") {
  for (const auto& w : {WeightFamily::exp_power(3, 1, 2), WeightFamily::lebesgue(3), WeightFamily::oscillating(3)}) {
    const auto grid = effective_grid(w, 1e-9, 3.0, 700);
    const auto op = build_evolution_operator(w, grid, OuterBoundary::Neumann);
    CHECK(op.nodes.back() == grid.nodes().back());
    const double T = 2.0;
    const auto s = run_capped(op, 0.0, 1.0, kBump, T, 1e-3);
    const double drift = std::abs(s.mass.back() - s.mass.front()) / s.mass.front();
    CAPTURE(w.describe());
    CHECK(drift / T < 1e-6);
  }
}

TEST_CASE("serial and parallel paths agree bitwise") {
  const auto w = WeightFamily::exp_power(3, 1, 2);
  const auto grid = effective_grid(w, 1e-9, 6.0, 400);
  const auto a = build_evolution_operator(w, grid);
  const auto b = build_evolution_operator_serial(w, grid);
  CHECK(a.gradient.diag == b.gradient.diag);
  CHECK(a.gradient.off == b.gradient.off);
  CHECK(a.mass == b.mass);
  const std::vector<double> caps{1e2, 1e4, 1e6};
  const auto p = run_caps(a, 0.3, caps, kBump, 0.3, 1e-3);
  const auto q = run_caps_serial(b, 0.3, caps, kBump, 0.3, 1e-3);
  for (std::size_t k = 0; k < caps.size(); ++k) CHECK(p[k].log_norm == q[k].log_norm);
}

TEST_CASE("run_capped errors") {
  const auto op = exp_power_operator(300);
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidParams;
  };
  CHECK(code_of([&] { run_capped(op, 0.2, 1e3, [](double r) { return r < 1 ? -0.1 : 0.0; }, 0.1, 1e-3); }) ==
        ErrorCode::NegativeDatum);
  CHECK(code_of([&] { run_capped(op, 0.35, 1e8, kBump, 1.0, 0.1); }) == ErrorCode::SchemeDivergence);
  CHECK_THROWS_AS(run_capped(op, 0.2, 1e3, kBump, -1.0, 1e-3), Error);
}

TEST_CASE("dichotomy_verdict examples") {
  const auto w = WeightFamily::exp_power(3, 1, 2);
  SUBCASE("c = 0") {
    const auto r = dichotomy_verdict(w, 0.0);
    CHECK(r.verdict == DichotomyVerdict::ExistenceSignature);
    for (const auto& cr : r.runs) CHECK(cr.envelope.omega <= 0.0);
    CHECK(r.agrees);
  }
  SUBCASE("c = 0.2") {
    const auto r = dichotomy_verdict(w, 0.2);
    CHECK(r.verdict == DichotomyVerdict::ExistenceSignature);
    CHECK(r.spectral == SpectralVerdict::Bounded);
    CHECK(r.agrees);
    const double w1 = r.runs[r.runs.size() - 2].envelope.omega, w2 = r.runs.back().envelope.omega;
    CHECK(std::abs(w2 - w1) < 0.1 * std::abs(w2));
    CHECK(r.truncation_sensitivity < 1e-3);
  }
  SUBCASE("c = 0.35") {
    const auto r = dichotomy_verdict(w, 0.35);
    CHECK(r.verdict == DichotomyVerdict::BlowupSignature);
    CHECK(r.spectral == SpectralVerdict::Diverging);
    CHECK(r.agrees);
  }
  SUBCASE("cap ladder preconditions") {
    EvolutionConfig cfg;
    cfg.caps = {1e5, 1e6};
    CHECK_THROWS_AS(dichotomy_verdict(w, 0.2, cfg), Error);
    cfg.caps = {1e5, 2e5, 9e6};
    CHECK_THROWS_AS(dichotomy_verdict(w, 0.2, cfg), Error);
  }
}

TEST_CASE("verdict agrees with the spectral verdict across a family matrix") {
  EvolutionConfig cfg;
  cfg.n_points = 900;
  for (const auto& [w, c] : std::vector<std::pair<WeightFamily, double>>{
           {WeightFamily::lebesgue(3), 0.1},
           {WeightFamily::lebesgue(3), 0.3},
           {WeightFamily::power_exp_power(4, 1, 2, 1), 0.15},
           {WeightFamily::power_exp_power(4, 1, 2, 1), 0.3},
           {WeightFamily::log_weight(3, -1.0), 0.1},
           {WeightFamily::oscillating(3), 0.1}}) {
    const auto r = dichotomy_verdict(w, c, cfg);
    CAPTURE(w.describe());
    CAPTURE(c);
    CHECK(r.agrees);
  }
}

TEST_CASE("dichotomy_verdict reports a scheme breakdown as Inconclusive") {
  EvolutionConfig cfg;
  cfg.spectral_check = false;
  cfg.control_run = false;
  const auto r = dichotomy_verdict(WeightFamily::lebesgue(4), 1.2, cfg);
  CHECK(r.verdict == DichotomyVerdict::Inconclusive);
  CHECK_FALSE(r.note.empty());
  CHECK(r.runs.empty());
}

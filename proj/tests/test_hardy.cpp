#include <doctest.h>

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "whardy/hardy.hpp"

using namespace whardy;

namespace {

double exp_power_Umu(double b, double m, int n, double r) {
  return -0.25 * b * b * m * m * std::pow(r, 2 * m - 2) + 0.5 * b * m * (n + m - 2) * std::pow(r, m - 2);
}

double power_exp_power_U(double b, double m, double beta, int n, double r) {
  return -0.25 * b * b * m * m * std::pow(r, 2 * m - 2) + 0.5 * b * m * (n + m - 2 - beta) * std::pow(r, m - 2);
}

double log_weight_r2Umu(double alpha, int n, double r) {
  const double l = std::log(1.0 / r);
  return (0.25 - 0.25 * (alpha - 1) * (alpha - 1)) / (l * l) + 0.5 * alpha * (n - 2) / l;
}

// sup over one period of r^2 U_mu for 2 + sin log r
double oscillating_limsup(int n) {
  double best = -1e300;
  for (int i = 0; i < 200000; ++i) {
    const double t = 2 * std::numbers::pi * i / 200000.0;
    const double c = std::cos(t), s = std::sin(t);
    best = std::max(best, 0.25 * std::pow(c / (2 + s), 2) - 0.5 * ((n - 2) * c - s) / (2 + s));
  }
  return best;
}

}  // namespace

TEST_CASE("compute_Umu examples") {
  CHECK(compute_Umu(WeightFamily::exp_power(3, 1, 2), 1.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(compute_Umu(WeightFamily::lebesgue(3), 0.37) == 0.0);
  const double r = std::exp(-2.0);
  CHECK(compute_Umu(WeightFamily::log_weight(3, 1.0), r) == doctest::Approx(5.0 / 16.0 / (r * r)).epsilon(1e-12));
  CHECK_THROWS_AS(compute_Umu(WeightFamily::lebesgue(3), 0.0), Error);
}

TEST_CASE("ExpPower U_mu matches the closed form") {
  for (double m : {1.0, 2.0, 3.0})
    for (int n : {3, 4, 5}) {
      const auto w = WeightFamily::exp_power(n, 1.0, m);
      for (int i = 0; i <= 140; ++i) {
        const double r = std::pow(10.0, -6.0 + 7.0 * i / 140.0);
        const double want = exp_power_Umu(1.0, m, n, r);
        CAPTURE(m);
        CAPTURE(n);
        CAPTURE(r);
        CHECK(std::abs(compute_Umu(w, r) - want) <= 1e-8 * std::abs(want));
      }
    }
}

TEST_CASE("LogWeight r^2 U_mu matches the closed form below 1/4") {
  for (double alpha : {-1.0, -0.5, 0.5, 1.0, 2.0})
    for (int n : {3, 4}) {
      const auto w = WeightFamily::log_weight(n, alpha);
      for (double r : {0.24, 0.1, 1e-2, 1e-4, 1e-8, 1e-12}) {
        const double want = log_weight_r2Umu(alpha, n, r);
        CHECK(std::abs(r * r * compute_Umu(w, r) - want) <= 1e-6 * std::abs(want));
      }
    }
}

TEST_CASE("compute_profile examples") {
  SUBCASE("ExpPower") {
    const auto p = compute_profile(WeightFamily::exp_power(3, 1, 2));
    CHECK(std::abs(p.L) < 1e-10);
    CHECK(p.c0_mu == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(std::abs(p.N0 - 3.0) < 0.05);
    CHECK(p.L_converged);
  }
  SUBCASE("PowerExpPower") {
    const auto p = compute_profile(WeightFamily::power_exp_power(4, 1, 2, 1));
    CHECK(std::abs(p.c0_mu - 0.25) < 1e-4);
    CHECK(std::abs(p.N0 - 3.0) < 0.05);
    CHECK(std::abs(p.c0_N0 - 0.25) < 1e-4);
  }
  SUBCASE("Oscillating") {
    const auto p = compute_profile(WeightFamily::oscillating(3));
    CHECK(p.L > 0.0);
    CHECK(p.c0_mu < 0.25);
    CHECK(p.L == doctest::Approx(oscillating_limsup(3)).epsilon(1e-5));
    CHECK(std::abs(p.N0 - 3.0) < 0.05);
    CHECK_FALSE(p.L_converged);
    CHECK(p.L_inf < p.L);
  }
  SUBCASE("LogWeight extrapolates the slow tail to zero") {
    const auto p = compute_profile(WeightFamily::log_weight(3, 1.0));
    CHECK(std::abs(p.L) < 1e-8);
    CHECK(std::abs(p.c0_mu - 0.25) < 1e-4);
  }
}

TEST_CASE("compute_U examples") {
  CHECK(compute_U(WeightFamily::lebesgue(3), 1.0) == 0.0);
  CHECK(compute_U(WeightFamily::power_exp_power(4, 1, 2, 1), 1.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(compute_U(WeightFamily::exp_power(3, 1, 2), 2.0) == doctest::Approx(-1.0).epsilon(1e-10));
  for (double r : {1e-3, 0.3, 2.0})
    CHECK(compute_U(WeightFamily::power_exp_power(4, 1, 2, 1), r) ==
          doctest::Approx(power_exp_power_U(1, 2, 1, 4, r)).epsilon(1e-8));
}

TEST_CASE("relation between U and U_mu") {
  for (const auto& w : {WeightFamily::exp_power(3, 1, 2), WeightFamily::power_exp_power(4, 1, 2, 1.5),
                        WeightFamily::log_weight(4, -1.0), WeightFamily::exp_power(5, 2, 1)}) {
    const auto p = compute_profile(w);
    for (double r : {1e-5, 1e-3, 0.1, 0.4}) {
      const double umu = compute_Umu(w, r);
      const double rhs = umu + (p.c0_mu - p.c0_N) / (r * r);
      CHECK(std::abs(compute_U(p, r) - rhs) < 1e-8 * std::max(1.0, std::abs(umu)));
    }
  }
}

TEST_CASE("N0 estimator recovers N - beta") {
  for (double beta : {0.0, 0.5, 1.0, 1.5}) {
    const auto p = compute_profile(WeightFamily::power_exp_power(4, 1, 2, beta));
    CAPTURE(beta);
    CHECK(std::abs(p.N0 - (4.0 - beta)) < 0.05);
    CHECK(std::abs(p.N0_slope - (4.0 - beta)) < 0.05);
    CHECK(std::abs(p.c0_mu - hardy_constant(4.0 - beta)) < 1e-4);
  }
}

TEST_CASE("H3' iii on LogWeight diverges iff alpha > 0") {
  for (double alpha : {-1.0, -0.5, 0.5, 1.0}) {
    const auto rep = check_hypotheses(WeightFamily::log_weight(3, alpha));
    CAPTURE(alpha);
    CHECK(rep.h3p_iii == (alpha > 0));
    CHECK(rep.h2_iv == (alpha <= 0));
    CHECK(rep.h2_prime);
  }
}

TEST_CASE("check_hypotheses examples") {
  SUBCASE("ExpPower satisfies H2 and H3") {
    const auto rep = check_hypotheses(WeightFamily::exp_power(3, 1, 2));
    CHECK(rep.h2);
    CHECK(rep.h3);
    CHECK_FALSE(rep.h3p_iii);
    CHECK(rep.classification == HypothesisClass::H2);
    CHECK(rep.h2_iv_R0 > 0.0);
    CHECK(rep.h2_iv_R0 <= 1.0);
    CHECK(rep.h1 == std::optional<bool>(true));
  }
  SUBCASE("LogWeight alpha=1: iv fails, H2' holds, H3' diverges") {
    const auto rep = check_hypotheses(WeightFamily::log_weight(3, 1.0));
    CHECK_FALSE(rep.h2_iv);
    CHECK(rep.classification == HypothesisClass::H2PrimeOnly);
    CHECK(rep.h3p_iii);
  }
  SUBCASE("Lebesgue cond1 with p=2") {
    HypothesisOptions opt;
    opt.cond1_p = {2.0};
    const auto rep = check_hypotheses(WeightFamily::lebesgue(3), opt);
    REQUIRE(rep.cond1.size() == 1);
    CHECK(rep.cond1[0].holds);
    CHECK(rep.cond1[0].exponent == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("PowerExpPower reports H1 as not fulfilled") {
    CHECK(check_hypotheses(WeightFamily::power_exp_power(4, 1, 2, 1)).h1 == std::optional<bool>(false));
  }
  SUBCASE("Oscillating has c0_mu below c0(N) and H3") {
    const auto rep = check_hypotheses(WeightFamily::oscillating(3));
    CHECK(rep.profile.c0_mu < rep.profile.c0_N);
    CHECK(rep.h2_prime);
    CHECK(rep.h3);
  }
}

TEST_CASE("classification is exclusive and consistent") {
  for (const auto& w : {WeightFamily::lebesgue(4), WeightFamily::log_weight(3, 0.5),
                        WeightFamily::power_exp_power(4, 1, 2, 0.5)}) {
    const auto rep = check_hypotheses(w);
    const int count = (rep.classification == HypothesisClass::H2) +
                      (rep.classification == HypothesisClass::H2PrimeOnly) +
                      (rep.classification == HypothesisClass::Neither);
    CHECK(count == 1);
    CHECK(rep.h2 == (rep.h2_prime && rep.h2_iv));
    if (rep.h2_iv) CHECK(rep.h2_iii.size() == 3);
  }
}

TEST_CASE("report serialization") {
  const auto rep = check_hypotheses(WeightFamily::exp_power(3, 1, 2));
  const auto j = nlohmann::json::parse(report_to_json(rep));
  for (const char* key : {"h2_ii", "h2_iii", "h2_iv", "h3_N0", "h3p_iii", "cond1"}) CHECK(j.contains(key));
  CHECK(j["classification"] == "H2");
  CHECK(j["h2_ii"]["c0_mu"].get<double>() == doctest::Approx(0.25));
  const std::string table = report_to_table(rep);
  CHECK(table.find("classification  H2") != std::string::npos);
}

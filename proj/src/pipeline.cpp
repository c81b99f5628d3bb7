#include "whardy/pipeline.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <optional>

namespace whardy {

namespace fs = std::filesystem;
using nlohmann::json;

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidParams, "cannot write " + tmp.string());
    out << content;
    out.close();
    if (!out) throw Error(ErrorCode::InvalidParams, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string csv_number(double v) { return fmt::format("{:.17g}", v); }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

  template <class... Ts>
  void row(const Ts&... values) {
    std::vector<std::string> cells{cell(values)...};
    if (cells.size() != cols_) throw Error(ErrorCode::InvalidParams, "csv row width mismatch");
    row_strings(cells);
  }

  const std::string& text() const { return text_; }

 private:
  static std::string cell(double v) { return csv_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += "\n";
  }

  std::size_t cols_;
  std::string text_;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
  Context(const RunConfig& c, const fs::path& dir) : cfg(c), family(make_family(c)), out(dir) {}

  const RunConfig& cfg;
  WeightFamily family;
  fs::path out;
  std::vector<std::string> files;
  std::optional<HypothesisReport> report;
  json results = json::object();

  void write(const std::string& name, const std::string& content) {
    write_atomic(out / name, content);
    files.push_back(name);
  }

  const HardyProfile& profile() {
    if (!report) report = check_hypotheses(family, hypothesis_options(cfg));
    return report->profile;
  }
};

void analyze(Context& ctx) {
  const auto& prof = ctx.profile();
  const auto& rep = *ctx.report;
  ctx.write("analyze.json", report_to_json(rep) + "\n");
  ctx.write("analyze.txt", report_to_table(rep));
  Csv ladder({"r", "r2_Umu"});
  for (std::size_t i = 0; i < prof.ladder_r.size(); ++i) ladder.row(prof.ladder_r[i], prof.ladder_r2Umu[i]);
  ctx.write("profile_ladder.csv", ladder.text());
  Csv probes({"delta", "integrable"});
  for (const auto& [d, ok] : prof.N0_probes) probes.row(d, ok);
  ctx.write("n0_probes.csv", probes.text());
  ctx.results["analyze"] = {{"c0_N", prof.c0_N},
                            {"c0_mu", prof.c0_mu},
                            {"L", prof.L},
                            {"N0", prof.N0},
                            {"c0_N0", prof.c0_N0},
                            {"classification", std::string(to_string(rep.classification))},
                            {"h2", rep.h2},
                            {"h2_prime", rep.h2_prime},
                            {"h3", rep.h3},
                            {"h3p_iii", rep.h3p_iii}};
}

void write_ladder(Csv& csv, double c, const std::vector<LadderRung>& ladder, SpectralVerdict verdict) {
  for (const auto& rung : ladder) csv.row(c, rung.r_min, rung.n_points, rung.lambda1, to_string(verdict));
}

void spectrum(Context& ctx) {
  const auto& s = ctx.cfg.spectrum;
  const SpectralProblem problem{ctx.family, s.c, effective_grid(ctx.family, s.r_min, s.r_max, s.n_points)};
  const auto res = lambda1(problem, s.ladder);
  Csv ladder({"c", "r_min", "n_points", "lambda1", "verdict"});
  write_ladder(ladder, s.c, res.ladder, res.verdict);
  ctx.write("spectrum_ladder.csv", ladder.text());
  Csv vec({"r", "value"});
  for (std::size_t i = 0; i < res.nodes.size(); ++i) vec.row(res.nodes[i], res.eigvec[i]);
  ctx.write("eigenvector.csv", vec.text());
  ctx.results["spectrum"] = {{"c", s.c},
                             {"lambda1", res.lambda1},
                             {"residual", res.residual},
                             {"verdict", std::string(to_string(res.verdict))}};
  ctx.write("spectrum.json", ctx.results["spectrum"].dump(2) + "\n");
}

void sweep(Context& ctx) {
  const auto& s = ctx.cfg.sweep;
  const auto& prof = ctx.profile();
  const double lo = s.c_lo.value_or(0.0);
  const double hi = s.c_hi.value_or(2.0 * prof.c0_N0 + 0.5);
  const auto res = critical_sweep(ctx.family, lo, hi, s.tol, s.grid, ctx.cfg.spectrum.ladder);
  Csv trace({"c", "r_min", "n_points", "lambda1", "verdict"});
  for (const auto& p : res.trace) trace.row(p.c, p.r_min, p.n_points, p.lambda1, to_string(p.verdict));
  ctx.write("sweep_trace.csv", trace.text());
  ctx.results["sweep"] = {{"c_hat", res.c_hat}, {"c_lo", res.c_lo},     {"c_hi", res.c_hi},
                          {"tol", s.tol},       {"c0_N0", prof.c0_N0}, {"c0_mu", prof.c0_mu}};
  ctx.write("sweep.json", ctx.results["sweep"].dump(2) + "\n");
}

void sharpness(Context& ctx) {
  const auto& s = ctx.cfg.sharpness;
  const auto& prof = ctx.profile();
  json out;
  const double c = prof.c0_N0 + s.c_offset;
  const auto iv = phi_n_gamma_interval(c, prof.N0);
  out["phi_n"]["c"] = c;
  if (iv.empty()) {
    out["phi_n"]["admissible"] = false;
  } else {
    const double gamma = iv.lo + s.gamma_fraction * (iv.hi - iv.lo);
    Csv csv({"n", "gamma", "c", "quotient", "numerator", "denominator", "bound_numerator", "C1", "C2", "bound"});
    std::vector<double> qs;
    for (double nv : s.n_values) {
      const int n = static_cast<int>(nv);
      if (n < 1 || n != nv) throw Error(ErrorCode::ConfigError, "sharpness.n_values must be positive integers");
      const auto q = quotient_phi_n(ctx.family, prof.N0, c, gamma, n);
      csv.row(n, gamma, c, q.quotient, q.numerator, q.denominator, q.bound_numerator, q.C1, q.C2, q.bound);
      qs.push_back(q.quotient);
    }
    ctx.write("phi_n.csv", csv.text());
    bool decreasing = true;
    for (std::size_t i = 1; i < qs.size(); ++i) decreasing = decreasing && qs[i] < qs[i - 1];
    out["phi_n"].update({{"admissible", true},
                         {"gamma", gamma},
                         {"gamma_lo", iv.lo},
                         {"gamma_hi", iv.hi},
                         {"strictly_decreasing", decreasing},
                         {"last_quotient", qs.empty() ? json(nullptr) : json(qs.back())}});
  }
  const double g_star = (2.0 - prof.N0) / 2.0;
  const double cg = s.phi_gamma_c.value_or(prof.c0_N0);
  out["phi_gamma"]["c"] = cg;
  if (g_star < 0.0) {
    try {
      const auto lad = phi_gamma_ladder(ctx.family, prof.N0, cg, s.phi_gamma);
      Csv csv({"j", "gamma", "quotient", "numerator", "denominator"});
      for (std::size_t j = 0; j < lad.gammas.size(); ++j)
        csv.row(j + 1, lad.gammas[j], lad.quotients[j].quotient, lad.quotients[j].numerator,
                lad.quotients[j].denominator);
      ctx.write("phi_gamma.csv", csv.text());
      out["phi_gamma"].update({{"admissible", true}, {"diverges", lad.diverges}, {"min_quotient", lad.min_quotient}});
    } catch (const Error& e) {
      // near g* the moments decay over ~2^j log-units; oscillating weights can defeat the quadrature there
      if (e.code() != ErrorCode::QuadratureFailure) throw;
      out["phi_gamma"].update({{"admissible", true}, {"error", e.what()}});
    }
  } else {
    out["phi_gamma"]["admissible"] = false;
  }
  ctx.results["sharpness"] = out;
  ctx.write("sharpness.json", out.dump(2) + "\n");
}

void evolve(Context& ctx) {
  const auto& e = ctx.cfg.evolve;
  std::vector<double> cs = e.c;
  if (cs.empty()) {
    const double c0 = ctx.profile().c0_N0;
    cs = {c0 - e.auto_below, c0 + e.auto_above};
  }
  json runs = json::array();
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const auto r = dichotomy_verdict(ctx.family, cs[k], e.config);
    Csv csv({"t", "cap", "norm"});
    for (const auto& cr : r.runs)
      for (std::size_t i = 0; i < cr.series.t.size(); ++i) csv.row(cr.series.t[i], cr.series.cap, cr.series.norm[i]);
    const std::string name = fmt::format("evolution_{}.csv", k);
    ctx.write(name, csv.text());
    json env = json::array();
    for (const auto& cr : r.runs)
      env.push_back({{"cap", cr.series.cap},
                     {"M", cr.envelope.M},
                     {"omega", cr.envelope.omega},
                     {"log_norm_at_t_star", cr.log_norm_at_t_star}});
    runs.push_back({{"c", cs[k]},
                    {"series", name},
                    {"verdict", std::string(to_string(r.verdict))},
                    {"spectral_verdict", r.spectral ? json(std::string(to_string(*r.spectral))) : json(nullptr)},
                    {"spectral_lambda1", number_or_null(r.spectral ? r.spectral_lambda1 : kNaN)},
                    {"agrees_with_spectral", r.agrees},
                    {"dt", r.dt},
                    {"t_star", r.t_star},
                    {"growth_per_decade", r.growth_per_decade},
                    {"envelopes", env},
                    {"truncation_sensitivity", number_or_null(r.truncation_sensitivity)},
                    {"blowup_threshold_is_heuristic", true},
                    {"note", r.note}});
  }
  ctx.results["evolve"] = runs;
  ctx.write("evolution.json", runs.dump(2) + "\n");
}

struct Claim {
  Claim(std::string cl, std::string ex, std::string co, bool h = false)
      : claim(std::move(cl)), expected(std::move(ex)), computed(std::move(co)), holds(h) {}

  std::string claim;
  std::string expected;
  std::string computed;
  bool holds = false;
  std::string status;  // overrides holds when set
};

std::string num(double v) { return fmt::format("{:.6g}", v); }

std::vector<Claim> claims(Context& ctx) {
  const auto& prof = *ctx.report;
  const auto& fam = ctx.family;
  const double N = fam.dimension();
  std::vector<Claim> out;
  const json& a = ctx.results["analyze"];
  const double c0_mu = a["c0_mu"], N0 = a["N0"], c0_N0 = a["c0_N0"];
  const bool oscillating = fam.kind() == WeightKind::Oscillating;

  const double n0_expected = fam.kind() == WeightKind::PowerExpPower ? N - fam.beta() : N;
  out.push_back({"N0", num(n0_expected), num(N0), std::abs(N0 - n0_expected) < 0.05});
  if (oscillating) {
    out.push_back({"c0_mu below c0(N)", "< " + num(hardy_constant(N)), num(c0_mu), c0_mu < hardy_constant(N)});
  } else {
    const double want = hardy_constant(n0_expected);
    out.push_back({"c0_mu = c0(N0)", num(want), num(c0_mu), std::abs(c0_mu - want) < 1e-4});
  }
  const std::string cls = a["classification"];
  if (fam.kind() == WeightKind::LogWeight && fam.alpha() > 0) {
    out.push_back({"hypotheses", "H2' only, H3' integral diverges", cls + (prof.h3p_iii ? ", H3' diverges" : ""),
                   prof.classification == HypothesisClass::H2PrimeOnly && prof.h3p_iii});
  } else if (oscillating) {
    out.push_back({"hypotheses", "H2' and H3", std::string(prof.h2_prime ? "H2'" : "no H2'") + (prof.h3 ? ", H3" : ""),
                   prof.h2_prime && prof.h3});
  } else {
    out.push_back({"hypotheses", "H2 and H3", cls + (prof.h3 ? ", H3" : ""),
                   prof.classification == HypothesisClass::H2 && prof.h3});
  }

  if (ctx.results.contains("sweep")) {
    const double c_hat = ctx.results["sweep"]["c_hat"];
    if (oscillating) {
      out.push_back({"critical constant below c0(N)", "< " + num(hardy_constant(N)), num(c_hat),
                     c_hat < hardy_constant(N)});
    } else {
      const double tol = 0.1 * std::max(c0_N0, 0.25) + ctx.cfg.sweep.tol;
      out.push_back({"critical constant = c0(N0)", num(c0_N0) + " +- " + num(tol), num(c_hat),
                     std::abs(c_hat - c0_N0) <= tol});
    }
  }

  if (ctx.results.contains("sharpness")) {
    const json& s = ctx.results["sharpness"];
    if (s["phi_n"]["admissible"].get<bool>()) {
      const double last = s["phi_n"]["last_quotient"];
      out.push_back({"phi_n quotient at c0(N0) + " + num(ctx.cfg.sharpness.c_offset), "decreasing, below -100",
                     std::string(s["phi_n"]["strictly_decreasing"].get<bool>() ? "decreasing" : "not decreasing") +
                         ", last " + num(last),
                     s["phi_n"]["strictly_decreasing"].get<bool>() && last < -100.0});
    }
    if (fam.kind() == WeightKind::LogWeight && s["phi_gamma"].contains("diverges")) {
      const bool div = s["phi_gamma"]["diverges"];
      const double mn = s["phi_gamma"]["min_quotient"];
      if (fam.alpha() > 0)
        out.push_back({"constant not attained (phi_gamma at c0(N0))", "diverges", (div ? "diverges, min " : "bounded, min ") + num(mn), div});
      else
        out.push_back({"phi_gamma at c0(N0)", "bounded below", (div ? "diverges, min " : "bounded, min ") + num(mn), !div});
    }
  }

  if (ctx.results.contains("evolve")) {
    for (const auto& r : ctx.results["evolve"]) {
      const double c = r["c"];
      const std::string v = r["verdict"];
      const bool agrees = r["agrees_with_spectral"];
      Claim cl{"evolution at c = " + num(c), "", v + (agrees ? "" : " (disagrees with spectral)")};
      if (c <= c0_mu)
        cl.expected = "ExistenceSignature";
      else if (c > c0_N0)
        cl.expected = "BlowupSignature";
      else
        cl.expected = "no claim between c0_mu and c0(N0)";
      if (v == "Inconclusive")
        cl.status = "inconclusive";
      else if (cl.expected.starts_with("no claim"))
        cl.status = agrees ? "n/a" : "disagrees with spectral";
      else
        cl.holds = v == cl.expected && agrees;
      out.push_back(cl);
    }
  }
  return out;
}

void summarize(Context& ctx) {
  std::string md = "# " + ctx.family.describe() + "\n\n";
  md += "| claim | expected | computed | status |\n|---|---|---|---|\n";
  for (const auto& c : claims(ctx))
    md += "| " + c.claim + " | " + c.expected + " | " + c.computed + " | " + (!c.status.empty() ? c.status : c.holds ? "ok" : "not reproduced") + " |\n";
  md += "\nThe evolution blowup threshold (growth per decade of cap) is a heuristic witness.\n";
  ctx.write("summary.md", md);

  json index;
  index["family"] = ctx.family.describe();
  index["config"] = serialize_config(ctx.cfg);
  index["results"] = ctx.results;
  index["files"] = ctx.files;
  write_atomic(ctx.out / "index.json", index.dump(2) + "\n");
  ctx.files.push_back("index.json");
}

}  // namespace

std::vector<std::string> run_task(const RunConfig& config, Task task, const fs::path& out_dir) {
  Context ctx(config, out_dir);
  switch (task) {
    case Task::Analyze: analyze(ctx); break;
    case Task::Spectrum: spectrum(ctx); break;
    case Task::Sweep: sweep(ctx); break;
    case Task::Sharpness: sharpness(ctx); break;
    case Task::Evolve: evolve(ctx); break;
    case Task::ReportAll:
      analyze(ctx);
      spectrum(ctx);
      sweep(ctx);
      sharpness(ctx);
      evolve(ctx);
      summarize(ctx);
      break;
  }
  return ctx.files;
}

}  // namespace whardy

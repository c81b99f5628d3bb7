#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "whardy/config.hpp"
#include "whardy/pipeline.hpp"

using namespace whardy;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidParams;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("whardy_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config round-trips") {
  SUBCASE("defaults") {
    const auto text = serialize_config(RunConfig{});
    CHECK(serialize_config(parse_config(text)) == text);
  }
  SUBCASE("non-default values, lists and auto fields") {
    const auto cfg = parse_config(R"(
# comment
[family]
kind = PowerExpPower
dimension = 4
beta = 0.1   # trailing comment
[sweep]
c_lo = 0.05
c_hi = auto
[evolve]
c = 0.2, 0.35
caps = 1e5,1e6 ,1e7
control_run = false
[sharpness]
gamma_fraction = 0.30000000000000004
)");
    CHECK(cfg.family.kind == WeightKind::PowerExpPower);
    CHECK(cfg.family.beta == 0.1);
    CHECK(cfg.sweep.c_lo == 0.05);
    CHECK_FALSE(cfg.sweep.c_hi.has_value());
    CHECK(cfg.evolve.c == std::vector<double>{0.2, 0.35});
    CHECK(cfg.evolve.config.caps == std::vector<double>{1e5, 1e6, 1e7});
    CHECK_FALSE(cfg.evolve.config.control_run);
    CHECK(cfg.sharpness.gamma_fraction == 0.30000000000000004);
    const auto text = serialize_config(cfg);
    const auto again = parse_config(text);
    CHECK(serialize_config(again) == text);
    CHECK(again.sharpness.gamma_fraction == cfg.sharpness.gamma_fraction);
  }
}

TEST_CASE("every documented tunable is exposed") {
  const auto text = serialize_config(RunConfig{});
  for (const char* key : {"divergence_ratio = 4", "tail_window = 10", "blowup_ratio = 2", "n0_agreement = 0.05",
                          "r_min_factor = 0.25", "envelope_rtol = 0.1", "contraction_ratio = 0.8", "caps = 1e+05",
                          "phi_gamma_threshold = 100", "gamma_fraction = 0.01", "max_steps = 200000"})
    CHECK_MESSAGE(text.find(key) != std::string::npos, std::string(key));
}

TEST_CASE("config errors carry line and field") {
  auto message = [](std::string_view text) {
    try {
      parse_config(text, "bad.cfg");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[family]\nkind = ExpPower\ndimension = three\n").find("bad.cfg:3") != std::string::npos);
  CHECK(message("[family]\nkind = ExpPower\ndimension = three\n").find("family.dimension") != std::string::npos);
  CHECK(message("[nope]\n").find("unknown section") != std::string::npos);
  CHECK(message("[family]\nwidth = 2\n").find("unknown field family.width") != std::string::npos);
  CHECK(message("kind = ExpPower\n").find("outside of a section") != std::string::npos);
  CHECK(message("[family]\nkind ExpPower\n").find("bad.cfg:2") != std::string::npos);
  CHECK(message("[family]\nkind = Gaussian\n").find("unknown weight kind") != std::string::npos);
  CHECK(message("[evolve]\ncaps = 1e5,,1e7\n").find("list") != std::string::npos);
}

TEST_CASE("overrides") {
  RunConfig cfg;
  apply_override(cfg, "family.kind=LogWeight");
  apply_override(cfg, "family.alpha = -1");
  apply_override(cfg, "evolve.c=auto");
  CHECK(cfg.family.kind == WeightKind::LogWeight);
  CHECK(cfg.family.alpha == -1.0);
  CHECK(cfg.evolve.c.empty());
  CHECK(code_of([&] { apply_override(cfg, "family.alpha"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { apply_override(cfg, "alpha=1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { apply_override(cfg, "family.alpha=x"); }) == ErrorCode::ConfigError);
}

TEST_CASE("family block") {
  CHECK(code_of([] { make_family(RunConfig{}); }) == ErrorCode::ConfigError);
  auto cfg = parse_config("[family]\nkind = ExpPower\ndimension = 2\n");
  CHECK(code_of([&] { make_family(cfg); }) == ErrorCode::ConfigError);
  cfg.family.dimension = 5;
  CHECK(make_family(cfg).describe() == WeightFamily::exp_power(5, 1, 2).describe());
}

TEST_CASE("csv numbers keep 17 significant digits") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-300, -7.0, 1e22})
    CHECK(std::stod(csv_number(v)) == v);
  CHECK(csv_number(0.1) == "0.10000000000000001");
}

TEST_CASE("atomic writes leave no temporary behind") {
  const auto dir = scratch("atomic");
  write_atomic(dir / "a" / "x.txt", "one");
  write_atomic(dir / "a" / "x.txt", "two");
  CHECK(read(dir / "a" / "x.txt") == "two");
  CHECK_FALSE(fs::exists(dir / "a" / "x.txt.tmp"));
  fs::remove_all(dir);
}

TEST_CASE("analyze writes the report files") {
  const auto dir = scratch("analyze");
  auto cfg = parse_config("[family]\nkind = ExpPower\ndimension = 3\nb = 1\nm = 2\n");
  const auto files = run_task(cfg, Task::Analyze, dir);
  CHECK(files == std::vector<std::string>{"analyze.json", "analyze.txt", "profile_ladder.csv", "n0_probes.csv"});
  const auto j = nlohmann::json::parse(read(dir / "analyze.json"));
  CHECK(j["classification"] == "H2");
  CHECK(j["h2_ii"]["c0_mu"].get<double>() == doctest::Approx(0.25));
  CHECK(read(dir / "profile_ladder.csv").starts_with("r,r2_Umu\n"));
  CHECK(read(dir / "n0_probes.csv").starts_with("delta,integrable\n"));

  cfg = parse_config("[family]\nkind = Oscillating\ndimension = 3\n");
  run_task(cfg, Task::Analyze, dir);
  const auto o = nlohmann::json::parse(read(dir / "analyze.json"));
  CHECK(o["h2_ii"]["c0_mu"].get<double>() < 0.25);
  fs::remove_all(dir);
}

TEST_CASE("report-all summaries") {
  SUBCASE("PowerExpPower beta = 1 reports c_hat near c0(3)") {
    const auto dir = scratch("pep");
    const auto cfg = parse_config("[family]\nkind = PowerExpPower\ndimension = 4\nb = 1\nm = 2\nbeta = 1\n");
    const auto files = run_task(cfg, Task::ReportAll, dir);
    CHECK(files.back() == "index.json");
    const auto idx = nlohmann::json::parse(read(dir / "index.json"));
    const double c_hat = idx["results"]["sweep"]["c_hat"];
    CHECK(std::abs(c_hat - 0.25) < 0.035);
    const auto md = read(dir / "summary.md");
    CHECK(md.find("| critical constant = c0(N0) | 0.25 +- 0.035 |") != std::string::npos);
    CHECK(md.find("| ok |") != std::string::npos);
    CHECK(parse_config(idx["config"].get<std::string>()).family.beta == 1.0);
    for (const auto& f : idx["files"]) CHECK(fs::exists(dir / f.get<std::string>()));
    fs::remove_all(dir);
  }
  SUBCASE("LogWeight alpha = 1 reports that the constant is not attained") {
    const auto dir = scratch("log");
    const auto cfg = parse_config("[family]\nkind = LogWeight\ndimension = 3\nalpha = 1\n");
    run_task(cfg, Task::ReportAll, dir);
    const auto md = read(dir / "summary.md");
    CHECK(md.find("| constant not attained (phi_gamma at c0(N0)) | diverges | diverges") != std::string::npos);
    fs::remove_all(dir);
  }
}

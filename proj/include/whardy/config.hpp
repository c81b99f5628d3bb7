#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whardy/evolution.hpp"
#include "whardy/hardy.hpp"
#include "whardy/spectral.hpp"
#include "whardy/weights.hpp"

namespace whardy {

enum class Task { Analyze, Spectrum, Sweep, Sharpness, Evolve, ReportAll };
std::string_view to_string(Task t);
Task parse_task(std::string_view name);

struct FamilyBlock {
  std::optional<WeightKind> kind;  // empty means the block is missing
  int dimension = 3;
  double b = 1.0;
  double m = 2.0;
  double beta = 0.0;
  double alpha = 1.0;
};

struct SpectrumBlock {
  double c = 0.0;
  double r_min = 1e-10;
  double r_max = 20.0;
  int n_points = 1024;
  LadderOptions ladder;
};

struct SweepBlock {
  std::optional<double> c_lo;  // empty: 0
  std::optional<double> c_hi;  // empty: 2 c0(N0) + 0.5
  double tol = 0.01;
  SweepGrid grid;
};

struct SharpnessBlock {
  double c_offset = 0.25;        // phi_n runs at c = c0(N0) + c_offset
  double gamma_fraction = 0.01;  // gamma = lo + fraction (hi - lo) inside the admissible interval
  std::vector<double> n_values{4, 16, 64, 256};
  std::optional<double> phi_gamma_c;  // empty: c0(N0)
  PhiGammaOptions phi_gamma;
};

struct EvolveBlock {
  std::vector<double> c;  // empty: {c0(N0) - auto_below, c0(N0) + auto_above}
  double auto_below = 0.05;
  double auto_above = 0.1;
  EvolutionConfig config;
};

struct RunConfig {
  Task task = Task::ReportAll;
  std::string out = "out";
  FamilyBlock family;
  ProfileOptions profile;
  HypothesisOptions hypotheses;  // its profile member is replaced by `profile`
  SpectrumBlock spectrum;
  SweepBlock sweep;
  SharpnessBlock sharpness;
  EvolveBlock evolve;
};

/// Line-oriented "key = value" text with [section] headers; '#' starts a comment.
/// Errors are ConfigError naming the origin, line and field.
RunConfig parse_config(std::string_view text, std::string_view origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Every field, in a fixed order; parse_config(serialize_config(c)) == c field by field.
std::string serialize_config(const RunConfig& config);
/// "section.key=value"
void apply_override(RunConfig& config, std::string_view assignment);

/// Throws ConfigError for an empty family block or invalid parameters.
WeightFamily make_family(const RunConfig& config);
HypothesisOptions hypothesis_options(const RunConfig& config);

}  // namespace whardy

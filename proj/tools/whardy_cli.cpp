#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "whardy/config.hpp"
#include "whardy/pipeline.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Hardy inequality toolkit"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool print_config = false;

  const std::vector<whardy::Task> tasks{whardy::Task::Analyze, whardy::Task::Spectrum, whardy::Task::Sweep,
                                        whardy::Task::Sharpness, whardy::Task::Evolve, whardy::Task::ReportAll};
  const char* help[] = {"hypothesis report for the family", "lambda1 ladder at spectrum.c",
                        "critical constant sweep", "phi_n and phi_gamma test functions",
                        "capped-potential evolution and dichotomy verdict", "all tasks plus index.json and summary.md"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto* sub = app.add_subcommand(std::string(whardy::to_string(tasks[i])), help[i]);
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--out", out_dir, "output directory (overrides run.out)");
    sub->add_option("--override", overrides, "section.key=value, may repeat")->take_all();
    sub->add_flag("--print-config", print_config, "print the effective config and exit");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  whardy::Task task = whardy::Task::ReportAll;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) task = tasks[i];

  try {
    whardy::RunConfig cfg = config_path.empty() ? whardy::RunConfig{} : whardy::load_config(config_path);
    for (const auto& o : overrides) whardy::apply_override(cfg, o);
    cfg.task = task;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (print_config) {
      std::fputs(whardy::serialize_config(cfg).c_str(), stdout);
      return 0;
    }
    whardy::make_family(cfg);
    const auto files = whardy::run_task(cfg, task, cfg.out);
    for (const auto& f : files) std::printf("%s/%s\n", cfg.out.c_str(), f.c_str());
    return 0;
  } catch (const whardy::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == whardy::ErrorCode::ConfigError ? kConfigError : kNumericFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericFailure;
  }
}

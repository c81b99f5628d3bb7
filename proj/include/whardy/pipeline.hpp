#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "whardy/config.hpp"

namespace whardy {

/// Writes content to path through a sibling temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// 17 significant digits.
std::string csv_number(double v);

/// Runs one task and writes its files under out_dir. Returns the written paths, relative to out_dir.
/// report-all also writes index.json and summary.md.
std::vector<std::string> run_task(const RunConfig& config, Task task, const std::filesystem::path& out_dir);

}  // namespace whardy

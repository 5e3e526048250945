#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evatrap/config.hpp"
#include "evatrap/output.hpp"

namespace evatrap {

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  int threads = 1;
};

const std::vector<std::string>& command_names();

/// Runs one command, writes its tables and run_report.json under out_dir and
/// returns the report. On failure the report is still written (with the
/// error) before the exception propagates.
Json run_command(const std::string& command, const RunConfig& config, const CommandOptions& options);

}  // namespace evatrap

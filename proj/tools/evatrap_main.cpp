#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evatrap.h"

int main(int argc, char** argv) {
  std::vector<std::string> commands;
  for (size_t k = 0; k < evatrap_command_count(); ++k) commands.emplace_back(evatrap_command_name(k));

  CLI::App app{"Two-color evanescent-field atom guide and lattice simulator"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  int threads = 1;
  double grid_step_nm = 0.0;
  bool print_report = false;
  app.add_option("command", command, "What to run")->required()->check(CLI::IsMember(commands));
  app.add_option("--config", config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (default $EVATRAP_OUT/<command> or ./out/<command>)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--grid-step", grid_step_nm, "Override the transverse grid step (nm)")->check(CLI::PositiveNumber);
  app.add_flag("--print-report", print_report, "Write the run report to stdout");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : EVATRAP_ERR_ARGUMENT;
  }

  if (out_dir.empty()) {
    const char* env = std::getenv("EVATRAP_OUT");
    out_dir = std::string(env && *env ? env : "out") + "/" + command;
  }

  evatrap_config* cfg = nullptr;
  evatrap_status st = config_path.empty() ? evatrap_config_parse("", &cfg) : evatrap_config_load(config_path.c_str(), &cfg);
  if (st == EVATRAP_OK && grid_step_nm > 0.0) st = evatrap_config_set_grid_step(cfg, grid_step_nm * 1e-9);
  if (st != EVATRAP_OK) {
    std::fprintf(stderr, "config error: %s\n", evatrap_last_error());
    evatrap_config_free(cfg);
    return st;
  }

  char* report = nullptr;
  st = evatrap_run(cfg, command.c_str(), out_dir.c_str(), threads, print_report ? &report : nullptr);
  if (st != EVATRAP_OK) {
    std::fprintf(stderr, "%s failed (status %d): %s\n", command.c_str(), static_cast<int>(st), evatrap_last_error());
  } else {
    if (report) std::puts(report);
    std::fprintf(stderr, "%s: outputs in %s\n", command.c_str(), out_dir.c_str());
  }
  evatrap_string_free(report);
  evatrap_config_free(cfg);
  return st;
}

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbu/config.hpp"
#include "rbu/duality.hpp"

namespace rbu {

const char* version() noexcept;

const std::vector<std::string>& subcommands();
bool is_subcommand(const std::string& name);

Generator build_generator(const ExperimentConfig& cfg);
Problem build_problem(const ExperimentConfig& cfg);
StrategyFamily build_strategy_family(const ExperimentConfig& cfg, std::size_t density);
ModelFamily build_model_family(const ExperimentConfig& cfg, const Generator& g, std::size_t density);

struct RunOutput {
  std::string command;
  nlohmann::json report;
  std::string summary;
  // Relative path -> contents; sweep.csv and series/*.csv.
  std::vector<std::pair<std::string, std::string>> tables;
};

// Runs one subcommand ("run" does everything). The report never records the
// thread count or wall time, so it is byte-identical for any worker setting.
RunOutput run_command(const ExperimentConfig& cfg, const std::string& command);

std::string report_text(const RunOutput& out);

void write_outputs(const RunOutput& out, const std::string& dir, bool json, bool csv);

}  // namespace rbu

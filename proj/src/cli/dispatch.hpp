#pragma once

#include "cli/run_config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace densityshape::cli {

inline constexpr const char* kVersion = "0.1.0";

//! Module failure tagged with the pipeline stage that raised it.
struct StageError : std::runtime_error
{
  StageError(std::string stage, const std::string& message)
    : std::runtime_error(message), stage(std::move(stage))
  {
  }
  std::string stage;
};

struct RunOutcome
{
  nlohmann::json summary;
  std::vector<std::string> files; // relative to the output directory, manifest excluded
  std::vector<std::string> warnings;
};

//! Runs the configured command and writes summary.json, any CSVs and
//! manifest.json into config.output. Throws StageError on failure.
RunOutcome dispatch(const RunConfig& config);

//! dispatch() with errors turned into an exit code and a JSON error document
//! (printed to `err` and written to <output>/error.json when possible).
int run_and_report(const RunConfig& config, std::ostream& out, std::ostream& err);

//! CSV cell with 17 significant digits.
std::string csv_real(double v);

} // namespace densityshape::cli

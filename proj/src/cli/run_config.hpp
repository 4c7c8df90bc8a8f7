#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace densityshape::cli {

//! How h is chosen: normal reference, Sheather-Jones, or a fixed value.
struct BandwidthPolicy
{
  enum class Kind
  {
    rot,
    sj,
    fixed
  };
  Kind kind = Kind::sj;
  double value = 0.0;

  static BandwidthPolicy parse(const std::string& text);
  std::string str() const;
};

//! Everything a run depends on. Serialised in full into the manifest; a run
//! rebuilt from that JSON writes the same outputs.
struct RunConfig
{
  std::string command;    // modes, excess-mass, bootstrap, sharpen, quantile-curves, limit-sim
  std::string subcommand; // limit-sim only
  std::string input;
  std::string column;
  std::string output = "out";
  std::uint64_t seed = 0;
  std::string bandwidth = "sj";

  std::size_t m = 2;
  std::size_t B = 400;
  std::size_t m_sub = 0;
  std::vector<double> alphas{ 0.005, 0.01, 0.05, 0.95, 0.99, 0.995 };
  std::size_t grid_n = 512;

  // modes
  double tail_floor = -1.0;
  std::optional<double> interval_lo;
  std::optional<double> interval_hi;

  // excess-mass
  std::size_t n_exact = 20000;
  std::size_t curve_points = 0; // 0: no curve CSV

  // sharpen / quantile-curves
  std::optional<double> target;
  bool mode_count = false;
  std::size_t restarts = 100;
  std::size_t max_sweeps = 2000;
  double step = 0.0;
  double tolerance = 0.0;

  // limit-sim
  std::size_t reps = 500;
  std::size_t bridge_grid = 1001;
  double c0 = 1.0;
  double f_x0 = 0.398942280401432677939946;
  double f2_x0 = -0.398942280401432677939946;
  double y_range = 0.0;
  double y_step = 0.02;
  double u_trunc = 8.0;
  std::size_t conditioning_draws = 0;
  double F2 = 0.2;
  double F3 = 0.5;
  double F4 = 0.8;
  double fprime2 = 1.0;
  double fprime4 = -1.0;
  double h1 = 0.5;
  std::size_t n = 2000;
  std::vector<double> h_values;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

//! Checks every knob the chosen command reads; throws densityshape::Error.
void validate(const RunConfig& c);

//! Reads a manifest (or a bare config object) from disk.
RunConfig load_config(const std::string& path);

std::vector<double> parse_real_list(const std::string& text);

} // namespace densityshape::cli

#include "cli/run_config.hpp"

#include "densityshape/sample.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace densityshape::cli {

namespace {

double parse_real(const std::string& token)
{
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  while (first < last && *first == ' ')
    ++first;
  while (last > first && last[-1] == ' ')
    --last;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v))
    throw Error("not a finite real: '" + token + "'");
  return v;
}

} // namespace

BandwidthPolicy BandwidthPolicy::parse(const std::string& text)
{
  BandwidthPolicy p;
  if (text == "rot") {
    p.kind = Kind::rot;
  } else if (text == "sj") {
    p.kind = Kind::sj;
  } else if (text.rfind("fixed:", 0) == 0) {
    p.kind = Kind::fixed;
    p.value = parse_real(text.substr(6));
    if (!(p.value > 0.0))
      throw Error("fixed bandwidth must be positive");
  } else {
    throw Error("bandwidth policy must be rot, sj or fixed:<h>, got '" + text + "'");
  }
  return p;
}

std::string BandwidthPolicy::str() const
{
  switch (kind) {
    case Kind::rot:
      return "rot";
    case Kind::sj:
      return "sj";
    case Kind::fixed:
      break;
  }
  return "fixed:" + nlohmann::json(value).dump();
}

std::vector<double> parse_real_list(const std::string& text)
{
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string token = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    out.push_back(parse_real(token));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return out;
}

#define DS_FIELDS(X)                                                                                       \
  X(command)                                                                                               \
  X(subcommand)                                                                                            \
  X(input)                                                                                                 \
  X(column)                                                                                                \
  X(output)                                                                                                \
  X(seed)                                                                                                  \
  X(bandwidth)                                                                                             \
  X(m)                                                                                                     \
  X(B)                                                                                                     \
  X(m_sub)                                                                                                 \
  X(alphas)                                                                                                \
  X(grid_n)                                                                                                \
  X(tail_floor)                                                                                            \
  X(n_exact)                                                                                               \
  X(curve_points)                                                                                          \
  X(mode_count)                                                                                            \
  X(restarts)                                                                                              \
  X(max_sweeps)                                                                                            \
  X(step)                                                                                                  \
  X(tolerance)                                                                                             \
  X(reps)                                                                                                  \
  X(bridge_grid)                                                                                           \
  X(c0)                                                                                                    \
  X(f_x0)                                                                                                  \
  X(f2_x0)                                                                                                 \
  X(y_range)                                                                                               \
  X(y_step)                                                                                                \
  X(u_trunc)                                                                                               \
  X(conditioning_draws)                                                                                    \
  X(F2)                                                                                                    \
  X(F3)                                                                                                    \
  X(F4)                                                                                                    \
  X(fprime2)                                                                                               \
  X(fprime4)                                                                                               \
  X(h1)                                                                                                    \
  X(n)                                                                                                     \
  X(h_values)

void to_json(nlohmann::json& j, const RunConfig& c)
{
  j = nlohmann::json::object();
#define DS_PUT(name) j[#name] = c.name;
  DS_FIELDS(DS_PUT)
#undef DS_PUT
  j["interval_lo"] = c.interval_lo ? nlohmann::json(*c.interval_lo) : nlohmann::json(nullptr);
  j["interval_hi"] = c.interval_hi ? nlohmann::json(*c.interval_hi) : nlohmann::json(nullptr);
  j["target"] = c.target ? nlohmann::json(*c.target) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, RunConfig& c)
{
  c = RunConfig{};
#define DS_GET(name)                                                                                       \
  if (j.contains(#name))                                                                                   \
    j.at(#name).get_to(c.name);
  DS_FIELDS(DS_GET)
#undef DS_GET
  const auto optional = [&](const char* key, std::optional<double>& field) {
    if (j.contains(key) && !j.at(key).is_null())
      field = j.at(key).get<double>();
  };
  optional("interval_lo", c.interval_lo);
  optional("interval_hi", c.interval_hi);
  optional("target", c.target);
}

#undef DS_FIELDS

RunConfig load_config(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config '" + path + "' is not valid JSON: " + e.what());
  }
  const nlohmann::json& body = j.contains("config") ? j.at("config") : j;
  try {
    return body.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("config '" + path + "' has a malformed field: " + e.what());
  }
}

namespace {

void require(bool ok, const std::string& message)
{
  if (!ok)
    throw Error(message);
}

bool sample_command(const std::string& command)
{
  return command != "limit-sim";
}

} // namespace

void validate(const RunConfig& c)
{
  static const std::set<std::string> commands{ "modes", "excess-mass", "bootstrap", "sharpen", "quantile-curves",
                                               "limit-sim" };
  static const std::set<std::string> sims{ "bridge-check", "mode-limit", "z-limit", "bump-experiment" };
  require(commands.count(c.command) == 1, "unknown command '" + c.command + "'");
  require(!c.output.empty(), "output directory must be set");
  if (sample_command(c.command)) {
    require(!c.input.empty(), "input path must be set");
    BandwidthPolicy::parse(c.bandwidth);
    require(c.grid_n >= 2, "grid_n must be at least 2");
  } else {
    require(sims.count(c.subcommand) == 1, "unknown limit-sim subcommand '" + c.subcommand + "'");
  }
  const auto alphas_ok = [&] {
    require(!c.alphas.empty(), "alphas must not be empty");
    for (double a : c.alphas)
      require(a > 0.0 && a < 1.0, "alphas must lie in (0, 1)");
  };

  if (c.command == "modes") {
    require(c.interval_lo.has_value() == c.interval_hi.has_value(), "interval needs both ends");
    if (c.interval_lo)
      require(*c.interval_lo < *c.interval_hi, "interval must have lo < hi");
  } else if (c.command == "excess-mass") {
    require(c.m >= 1, "m must be at least 1");
  } else if (c.command == "bootstrap") {
    require(c.m >= 1, "m must be at least 1");
    require(c.B >= 1, "B must be at least 1");
    alphas_ok();
  } else if (c.command == "sharpen") {
    require(c.m >= 1, "m must be at least 1");
    require(c.mode_count || c.target.has_value(), "sharpen needs --target or --mode-count");
    if (c.target)
      require(*c.target >= 0.0 && *c.target <= 1.0, "target must lie in [0, 1]");
    require(c.restarts >= 1 && c.max_sweeps >= 1, "restarts and max_sweeps must be at least 1");
    require(c.step >= 0.0 && c.tolerance >= 0.0, "step and tolerance must be nonnegative");
  } else if (c.command == "quantile-curves") {
    require(c.m >= 2, "m must be at least 2");
    require(c.B >= 1, "B must be at least 1");
    alphas_ok();
    require(c.restarts >= 1 && c.max_sweeps >= 1, "restarts and max_sweeps must be at least 1");
    require(c.step >= 0.0 && c.tolerance >= 0.0, "step and tolerance must be nonnegative");
  } else if (c.subcommand == "bridge-check") {
    require(c.reps >= 2, "reps must be at least 2");
    require(c.bridge_grid >= 5, "bridge_grid must be at least 5");
  } else if (c.subcommand == "mode-limit") {
    require(c.reps >= 1, "reps must be at least 1");
  } else if (c.subcommand == "z-limit") {
    require(c.reps >= 1, "reps must be at least 1");
  } else if (c.subcommand == "bump-experiment") {
    require(c.reps >= 1, "reps must be at least 1");
    require(c.n >= 2, "n must be at least 2");
    require(c.h1 > 0.0 && c.h1 <= 1.0, "h1 must lie in (0, 1]");
    for (double h : c.h_values)
      require(h > 0.0, "bandwidths must be positive");
  }
}

} // namespace densityshape::cli

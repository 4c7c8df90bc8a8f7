#include "cli/dispatch.hpp"
#include "densityshape/execution.hpp"
#include "densityshape/sample.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using densityshape::cli::RunConfig;

namespace {

struct Pending
{
  std::string alphas;
  std::string h_values;
  double target = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  CLI::Option* target_opt = nullptr;
  CLI::Option* lo_opt = nullptr;
  CLI::Option* hi_opt = nullptr;
};

void sample_options(CLI::App* sub, RunConfig& c)
{
  sub->add_option("input", c.input, "Data file: one value per line, or CSV")->required();
  sub->add_option("--column", c.column, "Column name or 1-based index");
  sub->add_option("--bandwidth", c.bandwidth, "rot | sj | fixed:<h>")->capture_default_str();
  sub->add_option("--grid-n", c.grid_n, "Points in emitted density curves")->capture_default_str();
}

void common_options(CLI::App* sub, RunConfig& c)
{
  sub->add_option("--output,-o", c.output, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Seed for every random stream")->capture_default_str();
}

void anneal_options(CLI::App* sub, RunConfig& c)
{
  sub->add_option("--restarts", c.restarts)->capture_default_str();
  sub->add_option("--max-sweeps", c.max_sweeps)->capture_default_str();
  sub->add_option("--step", c.step, "Move scale s (0: range/1000)")->capture_default_str();
  sub->add_option("--tolerance", c.tolerance, "Stop when |Delta - target| is below this (0: s)")
    ->capture_default_str();
  sub->add_option("--tail-floor", c.tail_floor, "Tail mass floor for mode counts (<0: 1/n)");
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Mode counting, excess mass and data sharpening for univariate samples" };
  app.require_subcommand(0, 1);
  RunConfig c;
  Pending p;
  std::string config_path;
  std::string output_override;
  int threads = 0;
  app.add_option("--config", config_path, "Rerun the configuration stored in a manifest");
  app.add_option("--output-dir", output_override, "With --config: write to this directory instead");
  auto* threads_opt = app.add_option("--threads", threads, "Cap on worker threads (default: DENSITYSHAPE_THREADS)");

  auto* modes = app.add_subcommand("modes", "Count modes of the kernel estimate");
  sample_options(modes, c);
  common_options(modes, c);
  modes->add_option("--B", c.B, "Bootstrap replicates for the mode-count distribution (0: none)");
  modes->add_option("--m-sub", c.m_sub, "Resample size (0: n)");
  modes->add_option("--tail-floor", c.tail_floor, "Minimum mass of a counted tail mode (<0: 1/n)");
  p.lo_opt = modes->add_option("--lo", p.lo, "Search interval lower end");
  p.hi_opt = modes->add_option("--hi", p.hi, "Search interval upper end");

  auto* em = app.add_subcommand("excess-mass", "Excess mass difference Delta_m");
  sample_options(em, c);
  common_options(em, c);
  em->add_option("--m", c.m)->capture_default_str();
  em->add_option("--n-exact", c.n_exact, "Largest n for the exact breakpoint method")->capture_default_str();
  em->add_option("--curve-points", c.curve_points, "Emit E_1..E_m on this many levels (0: none)");

  auto* boot = app.add_subcommand("bootstrap", "Bootstrap quantiles of Delta_m");
  sample_options(boot, c);
  common_options(boot, c);
  boot->add_option("--m", c.m)->capture_default_str();
  boot->add_option("--B", c.B)->capture_default_str();
  boot->add_option("--m-sub", c.m_sub, "Resample size (0: n)");
  boot->add_option("--alphas", p.alphas, "Comma-separated levels");
  boot->add_option("--n-exact", c.n_exact)->capture_default_str();

  auto* sharpen = app.add_subcommand("sharpen", "Sharpen a sample to a Delta_m target or a mode count");
  sample_options(sharpen, c);
  common_options(sharpen, c);
  anneal_options(sharpen, c);
  sharpen->add_option("--m", c.m)->capture_default_str();
  p.target_opt = sharpen->add_option("--target", p.target, "Target Delta_m");
  sharpen->add_flag("--mode-count", c.mode_count, "Sharpen to exactly m modes instead");

  auto* curves = app.add_subcommand("quantile-curves", "Density estimates at bootstrap quantiles of Delta_m");
  sample_options(curves, c);
  common_options(curves, c);
  anneal_options(curves, c);
  curves->add_option("--m", c.m)->capture_default_str();
  curves->add_option("--B", c.B)->capture_default_str();
  curves->add_option("--m-sub", c.m_sub);
  curves->add_option("--alphas", p.alphas, "Comma-separated levels");
  curves->add_option("--n-exact", c.n_exact)->capture_default_str();

  auto* sim = app.add_subcommand("limit-sim", "Simulate limit objects");
  sim->require_subcommand(1);
  auto* bridge = sim->add_subcommand("bridge-check", "Brownian bridge moment check");
  common_options(bridge, c);
  bridge->add_option("--reps", c.reps)->capture_default_str();
  bridge->add_option("--grid-n", c.bridge_grid)->capture_default_str();

  auto* mode_limit = sim->add_subcommand("mode-limit", "Downcrossing counts of the limit process");
  common_options(mode_limit, c);
  mode_limit->add_option("--reps", c.reps)->capture_default_str();
  mode_limit->add_option("--c0", c.c0)->capture_default_str();
  mode_limit->add_option("--f-x0", c.f_x0)->capture_default_str();
  mode_limit->add_option("--f2-x0", c.f2_x0)->capture_default_str();
  mode_limit->add_option("--y-range", c.y_range, "0: automatic");
  mode_limit->add_option("--y-step", c.y_step)->capture_default_str();
  mode_limit->add_option("--u-trunc", c.u_trunc)->capture_default_str();
  mode_limit->add_option("--conditioning-draws", c.conditioning_draws,
                         "Also tabulate N* given this many realised bridges");

  auto* zlim = sim->add_subcommand("z-limit", "Limit law of the excess mass difference");
  common_options(zlim, c);
  zlim->add_option("--reps", c.reps)->capture_default_str();
  zlim->add_option("--F2", c.F2)->capture_default_str();
  zlim->add_option("--F3", c.F3)->capture_default_str();
  zlim->add_option("--F4", c.F4)->capture_default_str();
  zlim->add_option("--fprime2", c.fprime2)->capture_default_str();
  zlim->add_option("--fprime4", c.fprime4)->capture_default_str();

  auto* bump = sim->add_subcommand("bump-experiment", "Detection rate of a bump added at a shoulder");
  common_options(bump, c);
  bump->add_option("--reps", c.reps)->capture_default_str();
  bump->add_option("--h1", c.h1)->capture_default_str();
  bump->add_option("--n", c.n)->capture_default_str();
  bump->add_option("--h-values", p.h_values, "Comma-separated bandwidths (default h1/3, 3 h1)");

  // per-command defaults that differ from the shared ones
  modes->preparse_callback([&](std::size_t) { c.B = 0; });
  bridge->preparse_callback([&](std::size_t) { c.reps = 10000; });
  zlim->preparse_callback([&](std::size_t) { c.reps = 10000; });
  bump->preparse_callback([&](std::size_t) { c.reps = 100; });

  CLI11_PARSE(app, argc, argv);

  if (!*threads_opt) {
    if (const char* env = std::getenv("DENSITYSHAPE_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v > 0)
        threads = static_cast<int>(v);
    }
  }
  densityshape::set_thread_limit(threads);

  try {
    if (!config_path.empty()) {
      if (!app.get_subcommands().empty())
        throw densityshape::Error("--config replaces the subcommand; pass one or the other");
      c = densityshape::cli::load_config(config_path);
      if (!output_override.empty())
        c.output = output_override;
    } else {
      if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
      }
      CLI::App* chosen = app.get_subcommands().front();
      c.command = chosen->get_name();
      if (c.command == "limit-sim")
        c.subcommand = chosen->get_subcommands().front()->get_name();
      if (!p.alphas.empty())
        c.alphas = densityshape::cli::parse_real_list(p.alphas);
      if (!p.h_values.empty())
        c.h_values = densityshape::cli::parse_real_list(p.h_values);
      if (p.target_opt && *p.target_opt)
        c.target = p.target;
      if (*p.lo_opt)
        c.interval_lo = p.lo;
      if (*p.hi_opt)
        c.interval_hi = p.hi;
    }
  } catch (const std::exception& e) {
    nlohmann::json error = { { "error", { { "stage", "config" }, { "message", e.what() } } } };
    std::cerr << error.dump(2) << "\n";
    return 2;
  }
  return densityshape::cli::run_and_report(c, std::cout, std::cerr);
}

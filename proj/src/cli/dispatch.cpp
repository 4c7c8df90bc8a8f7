#include "cli/dispatch.hpp"

#include "cli/ingest.hpp"
#include "densityshape/bootstrap.hpp"
#include "densityshape/density.hpp"
#include "densityshape/excess_mass.hpp"
#include "densityshape/execution.hpp"
#include "densityshape/limit_lab.hpp"
#include "densityshape/modes.hpp"
#include "densityshape/sharpening.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

namespace densityshape::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string csv_real(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

constexpr Exec kExec = Exec::parallel;

template<class F>
auto staged(const std::string& stage, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

class Writer
{
public:
  explicit Writer(fs::path dir) : dir_(std::move(dir))
  {
    fs::create_directories(dir_);
  }

  void json_file(const std::string& name, const json& j)
  {
    write(name, j.dump(2) + "\n");
  }

  //! rows of preformatted cells
  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows)
  {
    std::string text;
    for (std::size_t i = 0; i < header.size(); ++i)
      text += (i ? "," : "") + header[i];
    text += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        text += (i ? "," : "") + row[i];
      text += "\n";
    }
    write(name, text);
  }

  const std::vector<std::string>& files() const { return files_; }

private:
  void write(const std::string& name, const std::string& text)
  {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write '" + (dir_ / name).string() + "'");
    out << text;
    files_.push_back(name);
  }

  fs::path dir_;
  std::vector<std::string> files_;
};

struct Context
{
  const RunConfig& config;
  Writer& writer;
  std::vector<std::string>& warnings;
  json& summary;
};

json ingest_json(const IngestReport& r)
{
  return { { "n", r.n }, { "min", r.min }, { "max", r.max }, { "duplicates", r.duplicates }, { "column", r.column } };
}

struct ResolvedBandwidth
{
  double h;
  json info;
};

ResolvedBandwidth resolve_bandwidth(Context& ctx, const Sample& x)
{
  return staged("bandwidth", [&] {
    const BandwidthPolicy policy = BandwidthPolicy::parse(ctx.config.bandwidth);
    ResolvedBandwidth out{ 0.0, json::object() };
    out.info["policy"] = policy.str();
    switch (policy.kind) {
      case BandwidthPolicy::Kind::fixed:
        out.h = policy.value;
        break;
      case BandwidthPolicy::Kind::rot:
        out.h = bandwidth_rot(x).value();
        break;
      case BandwidthPolicy::Kind::sj: {
        const SjBandwidth sj = bandwidth_sj(x, kExec);
        out.h = sj.h.value();
        out.info["h_rot"] = sj.h_rot;
        out.info["fell_back"] = sj.fell_back;
        if (sj.fell_back)
          ctx.warnings.push_back("bandwidth: Sheather-Jones fell back to the normal-reference rule: " + sj.note);
        break;
      }
    }
    out.info["h"] = out.h;
    return out;
  });
}

IngestReport load_sample(Context& ctx)
{
  IngestReport r = staged("ingest", [&] { return ingest(ctx.config.input, ctx.config.column); });
  ctx.summary["ingest"] = ingest_json(r);
  return r;
}

std::vector<double> linspace(double lo, double hi, std::size_t n)
{
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return xs;
}

json intervals_json(const IntervalSet& set)
{
  json arr = json::array();
  for (const Interval& iv : set.intervals)
    arr.push_back({ iv.lo, iv.hi });
  return arr;
}

json alpha_map(const std::vector<QuantileEstimate>& targets)
{
  json quantiles = json::object();
  for (const auto& q : targets)
    quantiles[json(q.alpha).dump()] = q.t_hat;
  return quantiles;
}

json probs_json(const std::map<std::size_t, double>& probs)
{
  json arr = json::array();
  for (const auto& [k, p] : probs)
    arr.push_back({ { "k", k }, { "p", p } });
  return arr;
}

void write_curve(Context& ctx, const std::string& name, const std::vector<double>& xs,
                 const std::vector<std::pair<std::string, const Sample*>>& columns, double h)
{
  std::vector<std::vector<double>> values;
  for (const auto& [label, sample] : columns) {
    std::vector<double> f(xs.size());
    DensityEstimate(*sample, Bandwidth(h)).evaluate(xs, f, 0, kExec);
    values.push_back(std::move(f));
  }
  std::vector<std::string> header{ "x" };
  for (const auto& c : columns)
    header.push_back(c.first);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<std::string> row{ csv_real(xs[i]) };
    for (const auto& v : values)
      row.push_back(csv_real(v[i]));
    rows.push_back(std::move(row));
  }
  ctx.writer.csv(name, header, rows);
}

// ----------------------------------------------------------------------------

void run_modes(Context& ctx)
{
  const RunConfig& c = ctx.config;
  const IngestReport in = load_sample(ctx);
  const ResolvedBandwidth bw = resolve_bandwidth(ctx, in.sample);
  ctx.summary["bandwidth"] = bw.info;
  const DensityEstimate est(in.sample, Bandwidth(bw.h));

  ModeOptions options;
  options.tail_mass_floor = c.tail_floor;
  if (c.interval_lo)
    options.interval = SearchInterval{ *c.interval_lo, *c.interval_hi };
  const ModeReport report = staged("mode count", [&] { return count_modes(est, options, kExec); });
  ctx.summary["count"] = report.count;
  ctx.summary["modes"] = report.modes;
  ctx.summary["antimodes"] = report.antimodes;
  ctx.summary["interval"] = { report.lo, report.hi };
  ctx.summary["excluded_tail_modes"] = report.excluded_tail_modes;
  ctx.summary["tail_mass_floor"] = report.tail_mass_floor;
  ctx.summary["grid_points"] = report.grid_points;

  if (c.B > 0) {
    ModeBootstrapOptions bo;
    bo.replicates = c.B;
    bo.resample_size = c.m_sub;
    bo.tail_mass_floor = c.tail_floor;
    bo.seed = c.seed;
    const ModeLikelihoodReport lr =
      staged("mode bootstrap", [&] { return mode_likelihood_report(in.sample, Bandwidth(bw.h), bo, kExec); });
    json table = json::array();
    for (const auto& [k, p] : lr.table)
      table.push_back({ { "k", k }, { "p", p } });
    ctx.summary["bootstrap"] = { { "replicates", lr.distribution.replicates },
                                 { "failures", lr.distribution.failures },
                                 { "resample_size", lr.distribution.resample_size },
                                 { "table", table } };
    if (lr.distribution.failures > 0)
      ctx.warnings.push_back("mode bootstrap: " + std::to_string(lr.distribution.failures) +
                             " replicates had an unresolved mode structure");
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < lr.distribution.counts.size(); ++i)
      rows.push_back({ std::to_string(i), std::to_string(lr.distribution.counts[i]) });
    ctx.writer.csv("mode_counts.csv", { "replicate", "count" }, rows);
  }

  const double h = bw.h;
  write_curve(ctx, "density.csv", linspace(in.sample.min() - 3 * h, in.sample.max() + 3 * h, c.grid_n),
              { { "f_hat", &in.sample } }, h);
}

void run_excess_mass(Context& ctx)
{
  const RunConfig& c = ctx.config;
  const IngestReport in = load_sample(ctx);
  DeltaOptions options;
  options.n_exact = c.n_exact;
  const ExcessMassResult r = staged("excess mass", [&] { return delta_m(in.sample, c.m, options, kExec); });
  ctx.summary["m"] = r.m;
  ctx.summary["delta"] = r.delta;
  ctx.summary["lambda_star"] = r.lambda_star;
  ctx.summary["method"] = std::string(to_string(r.method));
  ctx.summary["tolerance"] = r.tolerance;
  ctx.summary["evaluations"] = r.evaluations;
  ctx.summary["witness_m"] = intervals_json(r.witness_m);
  ctx.summary["witness_m_minus_1"] = intervals_json(r.witness_m_minus_1);

  if (c.curve_points >= 2) {
    // log-spaced levels two decades either side of the maximiser
    const double centre = r.lambda_star > 0.0 ? r.lambda_star : 1.0 / std::max(in.sample.range(), 1e-300);
    std::vector<double> lambdas(c.curve_points);
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      lambdas[i] = centre * std::pow(10.0, -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(lambdas.size() - 1));
    const auto curves = staged("excess mass curves", [&] { return excess_mass_curves(in.sample, c.m, lambdas, kExec); });
    std::vector<std::string> header{ "lambda" };
    for (std::size_t k = 1; k <= c.m; ++k)
      header.push_back("E_" + std::to_string(k));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      std::vector<std::string> row{ csv_real(lambdas[i]) };
      for (const auto& curve : curves)
        row.push_back(csv_real(curve.values[i]));
      rows.push_back(std::move(row));
    }
    ctx.writer.csv("excess_mass_curves.csv", header, rows);
  }
}

void run_bootstrap(Context& ctx)
{
  const RunConfig& c = ctx.config;
  const IngestReport in = load_sample(ctx);
  DeltaOptions options;
  options.n_exact = c.n_exact;
  ResamplePlan plan;
  plan.replicates = c.B;
  plan.resample_size = c.m_sub;
  plan.seed = c.seed;
  const double observed = staged("excess mass", [&] { return delta_m(in.sample, c.m, options, kExec).delta; });
  const QuantileTargets qt =
    staged("bootstrap", [&] { return delta_quantile_targets(in.sample, c.m, plan, c.alphas, options, kExec); });
  ctx.summary["m"] = c.m;
  ctx.summary["statistic"] = qt.distribution.statistic;
  ctx.summary["observed_delta"] = observed;
  ctx.summary["replicates"] = c.B;
  ctx.summary["resample_size"] = c.m_sub == 0 ? in.n : c.m_sub;
  ctx.summary["failures"] = qt.distribution.failures;
  ctx.summary["quantiles"] = alpha_map(qt.targets);
  if (qt.distribution.failures > 0)
    ctx.warnings.push_back("bootstrap: " + std::to_string(qt.distribution.failures) + " replicates failed");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < qt.distribution.values.size(); ++i)
    rows.push_back({ std::to_string(i + 1), csv_real(qt.distribution.values[i]) });
  ctx.writer.csv("replicates.csv", { "rank", "delta" }, rows);
}

AnnealConfig anneal_config(const RunConfig& c)
{
  AnnealConfig a;
  a.step = c.step;
  a.restarts = c.restarts;
  a.max_sweeps = c.max_sweeps;
  a.tolerance = c.tolerance;
  a.seed = c.seed;
  a.tail_mass_floor = c.tail_floor;
  return a;
}

void note_unit_mismatch(Context& ctx)
{
  if (ctx.config.tolerance == 0.0)
    ctx.warnings.push_back("sharpening: stopping tolerance defaults to the move scale s, which is in data units "
                           "while Delta is a probability; pass --tolerance to set it explicitly");
}

// How the move kernel relates to the side of the target the search is on.
json move_directions(bool mode_count)
{
  if (mode_count)
    return { { "too_few_modes", "sharper: y += s z exp(-f(y)/fmax)" },
             { "too_many_modes", "more diffuse: y += s z exp((f(y) - fmax)/fmax)" } };
  return { { "below_target", "sharper: y += s z exp(-f(y)/fmax)" },
           { "above_target", "more diffuse: y += s z exp((f(y) - fmax)/fmax)" } };
}

json sharpened_json(const SharpenedSample& s)
{
  std::size_t converged = 0;
  for (const auto& r : s.restarts)
    converged += r.converged;
  return { { "distance", s.distance },
           { "achieved_delta", s.achieved_delta },
           { "target_delta", s.target_delta },
           { "achieved_modes", s.achieved_modes },
           { "tolerance", s.tolerance },
           { "step", s.step },
           { "restarts_used", s.restarts_used },
           { "converged_restarts", converged },
           { "chosen_restart", s.chosen_restart },
           { "accepted_moves", s.accepted_moves } };
}

void write_restarts(Context& ctx, const std::string& name, const SharpenedSample& s)
{
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < s.restarts.size(); ++i) {
    const RestartLog& r = s.restarts[i];
    rows.push_back({ std::to_string(i), r.converged ? "1" : "0", csv_real(r.distance), csv_real(r.achieved),
                     std::to_string(r.sweeps), std::to_string(r.accepted_moves) });
  }
  ctx.writer.csv(name, { "restart", "converged", "distance", "achieved", "sweeps", "accepted_moves" }, rows);
}

void write_points(Context& ctx, const std::string& name, const SharpenedSample& s)
{
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < s.y.size(); ++i)
    rows.push_back({ csv_real(s.source[i]), csv_real(s.y[i]) });
  ctx.writer.csv(name, { "source", "sharpened" }, rows);
}

void run_sharpen(Context& ctx)
{
  const RunConfig& c = ctx.config;
  const IngestReport in = load_sample(ctx);
  const ResolvedBandwidth bw = resolve_bandwidth(ctx, in.sample);
  ctx.summary["bandwidth"] = bw.info;
  const AnnealConfig anneal = anneal_config(c);
  SharpenedSample s;
  if (c.mode_count) {
    s = staged("mode-count stage", [&] { return sharpen_to_mode_count(in.sample, Bandwidth(bw.h), c.m, anneal, kExec); });
    ctx.summary["mode"] = "mode-count";
  } else {
    note_unit_mismatch(ctx);
    s = staged("excess-mass stage",
               [&] { return sharpen_to_excess_mass(in.sample, Bandwidth(bw.h), c.m, *c.target, anneal, kExec); });
    ctx.summary["mode"] = "excess-mass";
  }
  ctx.summary["m"] = c.m;
  ctx.summary["move_directions"] = move_directions(c.mode_count);
  ctx.summary["result"] = sharpened_json(s);
  write_points(ctx, "sharpened.csv", s);
  write_restarts(ctx, "restarts.csv", s);
  const Sample y = s.sorted();
  const double h = bw.h;
  write_curve(ctx, "curve.csv", linspace(in.sample.min() - 3 * h, in.sample.max() + 3 * h, c.grid_n),
              { { "f_source", &in.sample }, { "f_sharpened", &y } }, h);
}

std::string alpha_file(double alpha)
{
  return "curve_alpha_" + json(alpha).dump() + ".csv";
}

void run_quantile_curves(Context& ctx)
{
  const RunConfig& c = ctx.config;
  const IngestReport in = load_sample(ctx);
  const ResolvedBandwidth bw = resolve_bandwidth(ctx, in.sample);
  ctx.summary["bandwidth"] = bw.info;
  note_unit_mismatch(ctx);
  ResamplePlan plan;
  plan.replicates = c.B;
  plan.resample_size = c.m_sub;
  plan.seed = c.seed;
  DeltaOptions options;
  options.n_exact = c.n_exact;
  QuantileCurveRun run;
  try {
    run = quantile_curve_pipeline(in.sample, c.m, c.alphas, Bandwidth(bw.h), plan, anneal_config(c), options, kExec);
  } catch (const std::exception& e) {
    // the pipeline prefixes its messages with the failing stage
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw StageError(colon == std::string::npos ? "quantile curves" : msg.substr(0, colon),
                     colon == std::string::npos ? msg : msg.substr(msg.find_first_not_of(' ', colon + 1)));
  }
  ctx.summary["m"] = c.m;
  ctx.summary["observed_modes"] = run.observed_modes;
  ctx.summary["mode_stage_ran"] = run.mode_stage_ran;
  ctx.summary["move_directions"] = move_directions(false);
  if (run.mode_stage_ran)
    ctx.summary["mode_stage"] = sharpened_json(run.mode_stage);
  ctx.summary["replicates"] = c.B;
  ctx.summary["failures"] = run.targets.distribution.failures;
  ctx.summary["quantiles"] = alpha_map(run.targets.targets);

  const double h = bw.h;
  const auto xs = linspace(in.sample.min() - 3 * h, in.sample.max() + 3 * h, c.grid_n);
  const Sample z = run.mode_stage.sorted();
  write_curve(ctx, "estimate.csv", xs, { { "f_x", &in.sample }, { "f_z", &z } }, h);
  json curves = json::array();
  for (const QuantileCurve& qc : run.curves) {
    const std::string file = alpha_file(qc.alpha);
    const Sample y = qc.sharpened.sorted();
    write_curve(ctx, file, xs, { { "f_hat", &y } }, h);
    json entry = sharpened_json(qc.sharpened);
    entry["alpha"] = qc.alpha;
    entry["target"] = qc.target;
    entry["file"] = file;
    curves.push_back(entry);
  }
  ctx.summary["curves"] = curves;
}

// ----------------------------------------------------------------------------

void run_bridge_check(Context& ctx)
{
  const RunConfig& c = ctx.config;
  const std::size_t g = c.bridge_grid;
  if ((g - 1) % 4 != 0)
    throw StageError("bridge-check", "bridge_grid - 1 must be divisible by 4 so t = 1/4, 1/2, 3/4 are grid points");
  std::vector<double> sum(g, 0.0), sumsq(g, 0.0);
  double cross = 0.0, s25 = 0.0, s75 = 0.0;
  const std::size_t q1 = (g - 1) / 4, q3 = 3 * (g - 1) / 4;
  const std::uint64_t base = derive_seed(c.seed, "bridge-check");
  const std::size_t block = 256;
  std::vector<double> t;
  for (std::size_t start = 0; start < c.reps; start += block) {
    const std::size_t count = std::min(block, c.reps - start);
    std::vector<BridgePath> paths(count);
    for_each_index(count, kExec, [&](std::size_t i) {
      StreamRng rng(base, start + i);
      paths[i] = simulate_bridge(g, rng);
    });
    for (const BridgePath& p : paths) {
      for (std::size_t k = 0; k < g; ++k) {
        sum[k] += p.values[k];
        sumsq[k] += p.values[k] * p.values[k];
      }
      cross += p.values[q1] * p.values[q3];
      s25 += p.values[q1];
      s75 += p.values[q3];
    }
    if (t.empty())
      t = paths.front().grid;
  }
  const double r = static_cast<double>(c.reps);
  std::vector<double> var(g);
  for (std::size_t k = 0; k < g; ++k) {
    const double mean = sum[k] / r;
    var[k] = (sumsq[k] - r * mean * mean) / (r - 1.0);
  }
  const double cov = (cross - r * (s25 / r) * (s75 / r)) / (r - 1.0);
  json checks = json::array();
  for (std::size_t k : { q1, (g - 1) / 2, q3 })
    checks.push_back({ { "t", t[k] }, { "variance", var[k] }, { "expected", t[k] * (1.0 - t[k]) } });
  ctx.summary["reps"] = c.reps;
  ctx.summary["grid_n"] = g;
  ctx.summary["variance_checks"] = checks;
  ctx.summary["covariance_check"] = { { "s", 0.25 }, { "t", 0.75 }, { "covariance", cov }, { "expected", 0.0625 } };
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < g; ++k)
    rows.push_back({ csv_real(t[k]), csv_real(var[k]), csv_real(t[k] * (1.0 - t[k])) });
  ctx.writer.csv("bridge_variance.csv", { "t", "variance", "expected" }, rows);
}

LimitConfig limit_config(const RunConfig& c)
{
  LimitConfig cfg;
  cfg.c0 = c.c0;
  cfg.f_x0 = c.f_x0;
  cfg.f2_x0 = c.f2_x0;
  cfg.y_range = c.y_range;
  cfg.y_step = c.y_step;
  cfg.u_trunc = c.u_trunc;
  cfg.seed = c.seed;
  return cfg;
}

void run_mode_limit(Context& ctx)
{
  const RunConfig& c = ctx.config;
  const LimitConfig cfg = limit_config(c);
  const LimitModeDistribution d = staged("mode-limit", [&] { return limit_mode_distribution(cfg, c.reps, kExec); });
  ctx.summary["c0"] = c.c0;
  ctx.summary["reps"] = c.reps;
  ctx.summary["y_range"] = d.y_range;
  ctx.summary["degenerate"] = d.degenerate;
  ctx.summary["probs"] = probs_json(d.probs);
  ctx.summary["embedding"] = "t = 1/2 + s/L with L = 2(Y + T + 1); bridge values scaled by sqrt(L)";
  ctx.warnings.push_back("mode-limit: the time scaling of W(y + u) is this tool's choice; constants depend on it");
  std::vector<std::vector<std::string>> rows;
  for (const auto& [k, p] : d.probs)
    rows.push_back({ std::to_string(k), csv_real(p) });
  ctx.writer.csv("mode_limit.csv", { "k", "p" }, rows);

  if (c.conditioning_draws >= 1) {
    std::vector<LimitModeDistribution> conditional;
    for (std::size_t w = 0; w < c.conditioning_draws; ++w)
      conditional.push_back(
        staged("conditional mode-limit", [&] { return conditional_star_distribution(cfg, w, c.reps, kExec); }));
    double max_tv = 0.0;
    for (const auto& a : conditional)
      for (const auto& b : conditional)
        max_tv = std::max(max_tv, total_variation(a.probs, b.probs));
    json draws = json::array();
    std::vector<std::vector<std::string>> crow;
    for (std::size_t w = 0; w < conditional.size(); ++w) {
      draws.push_back({ { "draw", w }, { "probs", probs_json(conditional[w].probs) } });
      for (const auto& [k, p] : conditional[w].probs)
        crow.push_back({ std::to_string(w), std::to_string(k), csv_real(p) });
    }
    ctx.summary["conditional"] = { { "draws", draws }, { "max_total_variation", max_tv } };
    ctx.writer.csv("conditional.csv", { "draw", "k", "p" }, crow);
  }
}

void run_z_limit(Context& ctx)
{
  const RunConfig& c = ctx.config;
  ZLimitConfig z;
  z.F2 = c.F2;
  z.F3 = c.F3;
  z.F4 = c.F4;
  z.fprime2 = c.fprime2;
  z.fprime4 = c.fprime4;
  z.reps = c.reps;
  z.seed = c.seed;
  const ZLimitSamples s = staged("z-limit", [&] { return excess_mass_limit_samples(z, kExec); });
  std::size_t first = 0;
  for (int i : s.indicator)
    first += i == 1;
  ctx.summary["reps"] = c.reps;
  ctx.summary["mean"] = s.mean;
  ctx.summary["sd"] = s.sd;
  ctx.summary["skewness"] = s.skewness;
  ctx.summary["standard_error"] = s.standard_error;
  ctx.summary["p_indicator_1"] = static_cast<double>(first) / static_cast<double>(c.reps);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < s.z.size(); ++i)
    rows.push_back({ std::to_string(i), std::to_string(s.indicator[i]), csv_real(s.z[i]) });
  ctx.writer.csv("z_samples.csv", { "rep", "indicator", "z" }, rows);
}

void run_bump_experiment(Context& ctx)
{
  const RunConfig& c = ctx.config;
  std::vector<double> hs = c.h_values;
  if (hs.empty())
    hs = { c.h1 / 3.0, 3.0 * c.h1 };
  const BumpExperiment ex =
    staged("bump-experiment", [&] { return bump_detection_experiment(c.h1, c.n, hs, c.reps, c.seed, kExec); });
  json rows_json = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : ex.rows) {
    rows_json.push_back({ { "h", r.h },
                          { "bump_detection", r.bump_detection },
                          { "base_unimodal", r.base_unimodal },
                          { "shoulder_spurious", r.shoulder_spurious } });
    rows.push_back({ csv_real(r.h), csv_real(r.bump_detection), csv_real(r.base_unimodal), csv_real(r.shoulder_spurious) });
  }
  ctx.summary["h1"] = c.h1;
  ctx.summary["n"] = c.n;
  ctx.summary["reps"] = c.reps;
  ctx.summary["rows"] = rows_json;
  ctx.writer.csv("bump_experiment.csv", { "h", "bump_detection", "base_unimodal", "shoulder_spurious" }, rows);
}

} // namespace

RunOutcome dispatch(const RunConfig& config)
{
  const auto started = std::chrono::steady_clock::now();
  staged("config", [&] { validate(config); });

  RunOutcome outcome;
  Writer writer(config.output);
  outcome.summary = json::object();
  outcome.summary["command"] = config.subcommand.empty() ? config.command : config.command + " " + config.subcommand;
  Context ctx{ config, writer, outcome.warnings, outcome.summary };

  static const std::map<std::string, std::function<void(Context&)>> handlers{
    { "modes", run_modes },
    { "excess-mass", run_excess_mass },
    { "bootstrap", run_bootstrap },
    { "sharpen", run_sharpen },
    { "quantile-curves", run_quantile_curves },
    { "limit-sim bridge-check", run_bridge_check },
    { "limit-sim mode-limit", run_mode_limit },
    { "limit-sim z-limit", run_z_limit },
    { "limit-sim bump-experiment", run_bump_experiment },
  };
  handlers.at(outcome.summary["command"].get<std::string>())(ctx);

  outcome.summary["warnings"] = outcome.warnings;
  writer.json_file("summary.json", outcome.summary);
  outcome.files = writer.files();

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest = { { "tool", "densityshape" },
                    { "version", kVersion },
                    { "config", config },
                    { "threads", thread_limit() },
                    { "wall_time_seconds", wall },
                    { "warnings", outcome.warnings },
                    { "outputs", outcome.files } };
  writer.json_file("manifest.json", manifest);
  return outcome;
}

int run_and_report(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  json error;
  try {
    const RunOutcome outcome = dispatch(config);
    out << outcome.summary.dump(2) << "\n";
    return 0;
  } catch (const StageError& e) {
    error = { { "error", { { "stage", e.stage }, { "message", e.what() } } } };
  } catch (const std::exception& e) {
    error = { { "error", { { "stage", "output" }, { "message", e.what() } } } };
  }
  err << error.dump(2) << "\n";
  try {
    if (!config.output.empty()) {
      fs::create_directories(config.output);
      std::ofstream f(fs::path(config.output) / "error.json", std::ios::binary | std::ios::trunc);
      f << error.dump(2) << "\n";
    }
  } catch (...) {
  }
  return 1;
}

} // namespace densityshape::cli

// Acceptance checks. `acceptance` runs all twelve; `acceptance K` runs one.
// Each prints a single PASS/FAIL line; the exit code is the number of failures.

#include "cli/dispatch.hpp"
#include "densityshape/bootstrap.hpp"
#include "densityshape/excess_mass.hpp"
#include "densityshape/limit_lab.hpp"
#include "densityshape/modes.hpp"
#include "densityshape/sharpening.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace densityshape;
using testing_support::Component;
using testing_support::mixture_draws;
using testing_support::mixture_pdf;
using testing_support::normal_draws;

namespace {

struct Verdict
{
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<Component> kSymmetric{ { 0.5, 0.0, 1.0 }, { 0.5, 6.0, 1.0 } };

double symmetric_oracle(std::size_t grid_n)
{
  return continuous_delta_m([](double x) { return mixture_pdf(kSymmetric, x); }, -8.0, 14.0, 2, grid_n).delta;
}

Verdict oracle_equivalence()
{
  StreamRng rng(101, 0);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  std::uniform_int_distribution<int> lattice(0, 7);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> level(-3.0, 2.0);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(size(rng));
    for (auto& v : x)
      v = trial % 2 ? gauss(rng) : 0.25 * lattice(rng);
    const Sample s(x);
    const auto atoms = testing_support::atoms_of(s);
    for (std::size_t m = 1; m <= 3; ++m) {
      std::vector<std::pair<double, double>> lines;
      testing_support::enumerate_configs(atoms, m, 0, 0.0, 0.0,
                                         [&](double c, double l) { lines.emplace_back(c, l); });
      for (int k = 0; k < 20; ++k) {
        const double lambda = std::pow(10.0, level(rng));
        double brute = 0.0;
        for (const auto& [c, l] : lines)
          brute = std::max(brute, c - lambda * l);
        worst = std::max(worst, std::abs(empirical_excess_mass_at(s, m, lambda).value - brute));
        ++checks;
      }
    }
  }
  return { worst <= 1e-12, fmt("%zu comparisons, max |DP - enumeration| = %.3g", checks, worst) };
}

Verdict hand_constants()
{
  const double two = delta_m(Sample({ 0.0, 1.0 }), 2).delta;
  const double three = delta_m(Sample({ 0.0, 1.0, 2.0 }), 2).delta;
  return { two == 0.5 && three == 1.0 / 3.0, fmt("Delta_2({0,1}) = %.17g, Delta_2({0,1,2}) = %.17g", two, three) };
}

Verdict consistency()
{
  const double oracle = symmetric_oracle(1000000);
  std::size_t close = 0;
  const std::size_t reps = 50;
  for (std::size_t r = 0; r < reps; ++r) {
    StreamRng rng(303, r);
    const double d = delta_m(Sample(mixture_draws(2000, kSymmetric, rng)), 2).delta;
    close += std::abs(d - oracle) <= 0.05;
  }
  const double frac = static_cast<double>(close) / reps;
  return { frac >= 0.9, fmt("oracle %.6f, |est - oracle| <= 0.05 in %.2f of %zu reps", oracle, frac, reps) };
}

Verdict coverage()
{
  const double oracle = symmetric_oracle(100000);
  const std::size_t reps = 300;
  std::size_t covered = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    StreamRng rng(404, r);
    const Sample s(mixture_draws(500, kSymmetric, rng));
    ResamplePlan plan;
    plan.replicates = 400;
    plan.seed = derive_seed(404, "coverage") + r;
    const auto t = delta_quantile_targets(s, 2, plan, { 0.9 });
    covered += oracle <= t.targets[0].t_hat;
  }
  const double cov = static_cast<double>(covered) / reps;
  return { cov >= 0.85 && cov <= 0.95, fmt("coverage of t_0.9 = %.3f over %zu datasets", cov, reps) };
}

Verdict mixture_supremum()
{
  std::vector<double> d;
  for (double s1 : { 0.5, 0.2, 0.05 }) {
    const std::vector<Component> mix{ { 0.3, 0.0, s1 }, { 0.7, 5.0, 1.0 } };
    d.push_back(continuous_delta_m([&](double x) { return mixture_pdf(mix, x); }, -4.0, 11.0, 2, 1000000).delta);
  }
  const bool increasing = d[0] < d[1] && d[1] < d[2];
  return { increasing && std::abs(d[2] - 0.3) <= 0.02,
           fmt("Delta_2 = %.4f, %.4f, %.4f (increasing: %s; last vs 0.3 off by %.4f)", d[0], d[1], d[2],
               increasing ? "yes" : "no", std::abs(d[2] - 0.3)) };
}

Verdict unimodal_equivalence()
{
  const double normal =
    continuous_delta_m([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }, -8.0, 8.0, 2).delta;
  const double mixture = symmetric_oracle(100000);
  return { normal <= 1e-3 && mixture >= 0.2,
           fmt("N(0,1): %.2e, mixture: %.4f", normal, mixture) };
}

Verdict oversmoothing()
{
  const std::size_t n = 1000, reps = 200;
  std::size_t ones = 0, multi = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const Sample s(normal_draws(n, derive_seed(707, "oversmooth") + r));
    ones += count_modes(DensityEstimate(s, Bandwidth(std::pow(n, -0.1)))).count == 1;
    multi += count_modes(DensityEstimate(s, Bandwidth(0.25 * std::pow(n, -0.2)))).count >= 2;
  }
  const double p1 = static_cast<double>(ones) / reps, p2 = static_cast<double>(multi) / reps;
  return { p1 >= 0.95 && p2 > 0.05, fmt("P(N=1) at n^-1/10: %.3f; P(N>=2) at 0.25 n^-1/5: %.3f", p1, p2) };
}

Verdict subsampling_indicator()
{
  const std::size_t n = 2000, outer = 50;
  const auto m_sub = static_cast<std::size_t>(std::ceil(std::pow(n, 0.7)));
  const Bandwidth h(2.5 * std::pow(n, -0.2));
  std::size_t agree = 0;
  for (std::size_t r = 0; r < outer; ++r) {
    StreamRng rng(808, r);
    const Sample s(mixture_draws(n, kSymmetric, rng));
    const std::size_t full = count_modes(DensityEstimate(s, h)).count;
    ModeBootstrapOptions o;
    o.replicates = 200;
    o.resample_size = m_sub;
    o.seed = derive_seed(808, "subsample") + r;
    const auto report = mode_likelihood_report(s, h, o);
    agree += !report.table.empty() && report.table.front().first == full;
  }
  const double frac = static_cast<double>(agree) / outer;
  return { frac >= 0.8, fmt("m_sub = %zu, h = %.4f: modal atom = N(n) in %.2f of %zu reps", m_sub, h.value(), frac, outer) };
}

Verdict limit_lab()
{
  const std::size_t paths = 10000, g = 101;
  std::vector<double> sq(g, 0.0);
  for (std::size_t r = 0; r < paths; ++r) {
    StreamRng rng(derive_seed(909, "bridge"), r);
    const BridgePath b = simulate_bridge(g, rng);
    for (std::size_t i = 0; i < g; ++i)
      sq[i] += b.values[i] * b.values[i];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const double t = static_cast<double>(i) / (g - 1);
    worst = std::max(worst, std::abs(sq[i] / paths - t * (1 - t)));
  }
  LimitConfig cfg;
  cfg.c0 = 8.0;
  cfg.seed = 909;
  const auto modes = limit_mode_distribution(cfg, 500);
  const double p1 = modes.probs.count(1) ? modes.probs.at(1) : 0.0;
  ZLimitConfig z;
  z.seed = 909;
  const ZLimitSamples zs = excess_mass_limit_samples(z);
  const bool ok = worst <= 0.01 && p1 >= 0.95 && std::abs(zs.mean) <= 3 * zs.standard_error &&
                  std::abs(zs.skewness) <= 0.05;
  return { ok, fmt("max |Var - t(1-t)| = %.4f; P(N=1) at C0=8: %.3f; E[Z] = %.4f (SE %.4f), skewness %.4f", worst, p1,
                   zs.mean, zs.standard_error, zs.skewness) };
}

Verdict sharpening_contract()
{
  StreamRng rng(1010, 0);
  const Sample x(mixture_draws(100, { { 0.6, 0.0, 1.0 }, { 0.4, 3.5, 0.8 } }, rng));
  ResamplePlan plan;
  plan.replicates = 200;
  plan.seed = 1010;
  AnnealConfig cfg;
  cfg.restarts = 2;
  cfg.tolerance = 0.002;
  cfg.seed = 1010;
  const auto run = quantile_curve_pipeline(x, 2, { 0.05, 0.95 }, std::nullopt, plan, cfg);
  bool hit = true, monotone = true;
  for (const auto& c : run.curves) {
    hit = hit && std::abs(c.sharpened.achieved_delta - c.target) < c.sharpened.tolerance;
    for (const auto& log : c.sharpened.restarts)
      for (std::size_t k = 1; k < log.trace.size(); ++k)
        monotone = monotone && log.trace[k] <= log.trace[k - 1];
  }
  const double lo = run.curves[0].sharpened.achieved_delta, hi = run.curves[1].sharpened.achieved_delta;
  const Sample z = run.mode_stage.sorted();
  const double hv = run.h.value();
  const double start = estimate_delta_m(z, run.h, 2, cfg, z.min() - 4 * hv, z.max() + 4 * hv);
  const SharpenedSample trivial = sharpen_to_excess_mass(z, run.h, 2, start, cfg);
  const bool same = trivial.distance == 0.0 &&
                    trivial.y == std::vector<double>(z.values().begin(), z.values().end());
  return { hit && lo <= hi && same && monotone,
           fmt("targets %.4f / %.4f reached at %.4f / %.4f; trivial distance %.1f; monotone traces: %s",
               run.curves[0].target, run.curves[1].target, lo, hi, trivial.distance, monotone ? "yes" : "no") };
}

Verdict bump_window()
{
  const double h1 = 0.5;
  const auto ex = bump_detection_experiment(h1, 2000, { h1 / 3, 3 * h1 }, 100, 1111);
  const double narrow = ex.rows[0].bump_detection, wide = ex.rows[1].bump_detection;
  return { narrow - wide >= 0.3, fmt("detection at h1/3: %.2f, at 3 h1: %.2f", narrow, wide) };
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism()
{
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "densityshape-acceptance-12";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    StreamRng rng(1212, 0);
    std::ofstream data(root / "x.csv");
    data << "value\n";
    for (double v : mixture_draws(80, { { 0.6, 0.0, 1.0 }, { 0.4, 3.5, 0.8 } }, rng))
      data << cli::csv_real(v) << "\n";
  }
  std::vector<cli::RunConfig> runs;
  const auto base = [&](const std::string& command, const std::string& sub = {}) {
    cli::RunConfig c;
    c.command = command;
    c.subcommand = sub;
    c.input = sub.empty() ? (root / "x.csv").string() : std::string{};
    c.column = sub.empty() ? "value" : "";
    c.seed = 12;
    c.B = 20;
    c.restarts = 1;
    c.tolerance = 0.005;
    c.reps = 20;
    c.alphas = { 0.1, 0.9 };
    return c;
  };
  runs.push_back(base("modes"));
  runs.push_back(base("excess-mass"));
  runs.back().curve_points = 16;
  runs.push_back(base("bootstrap"));
  runs.push_back(base("sharpen"));
  runs.back().target = 0.15;
  runs.push_back(base("quantile-curves"));
  runs.back().bandwidth = "fixed:0.45";
  runs.push_back(base("limit-sim", "bridge-check"));
  runs.back().bridge_grid = 101;
  runs.push_back(base("limit-sim", "mode-limit"));
  runs.back().conditioning_draws = 2;
  runs.push_back(base("limit-sim", "z-limit"));
  runs.push_back(base("limit-sim", "bump-experiment"));
  runs.back().n = 300;
  runs.back().reps = 3;

  std::size_t identical = 0;
  std::string mismatch;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto& c = runs[i];
    c.output = (root / ("run" + std::to_string(i))).string();
    const auto first = cli::dispatch(c);
    cli::RunConfig again = cli::load_config(c.output + "/manifest.json");
    again.output = c.output + "-again";
    cli::dispatch(again);
    bool same = true;
    for (const auto& f : first.files)
      same = same && slurp(fs::path(c.output) / f) == slurp(fs::path(again.output) / f);
    identical += same;
    if (!same)
      mismatch += " " + c.command + (c.subcommand.empty() ? "" : " " + c.subcommand);
  }
  fs::remove_all(root);
  return { identical == runs.size(),
           fmt("%zu of %zu commands byte-identical on rerun%s", identical, runs.size(), mismatch.c_str()) };
}

struct Criterion
{
  const char* name;
  std::function<Verdict()> run;
};

} // namespace

int main(int argc, char** argv)
{
  const std::vector<Criterion> all{
    { "excess-mass DP equals exhaustive enumeration", oracle_equivalence },
    { "hand-derived Delta_2 constants", hand_constants },
    { "consistency of Delta_2 at n = 2000", consistency },
    { "bootstrap coverage of t_0.9", coverage },
    { "normal-mixture supremum", mixture_supremum },
    { "unimodal equivalence", unimodal_equivalence },
    { "oversmoothing degeneracy", oversmoothing },
    { "subsampling indicator", subsampling_indicator },
    { "limit lab checks", limit_lab },
    { "sharpening contract", sharpening_contract },
    { "bump-detection window", bump_window },
    { "determinism of manifest reruns", determinism },
  };
  std::vector<std::size_t> chosen;
  if (argc > 1) {
    const std::size_t k = std::stoul(argv[1]);
    if (k < 1 || k > all.size()) {
      std::fprintf(stderr, "criterion must be 1..%zu\n", all.size());
      return 2;
    }
    chosen.push_back(k - 1);
  } else {
    for (std::size_t k = 0; k < all.size(); ++k)
      chosen.push_back(k);
  }
  int failures = 0;
  for (std::size_t k : chosen) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v{ false, {} };
    try {
      v = all[k].run();
    } catch (const std::exception& e) {
      v = { false, std::string("error: ") + e.what() };
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", k + 1, all[k].name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures;
}

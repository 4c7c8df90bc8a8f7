#include "densityshape/modes.hpp"

#include "densityshape/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace densityshape {

namespace {

int sign_of(double v)
{
  return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

struct Transition
{
  std::size_t from; // last grid index with the old sign
  std::size_t to;   // first grid index with the new sign
  bool down;        // + to - (a maximum)
};

// Sign changes of the sampled derivative; exact zeros carry the previous sign.
std::vector<Transition> sign_changes(const std::vector<double>& d)
{
  std::vector<Transition> out;
  int last_sign = 0;
  std::size_t last_index = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const int s = sign_of(d[k]);
    if (s == 0)
      continue;
    if (last_sign != 0 && s != last_sign)
      out.push_back({ last_index, k, last_sign > 0 });
    last_sign = s;
    last_index = k;
  }
  return out;
}

std::size_t count_maxima(const std::vector<double>& d)
{
  std::size_t c = 0;
  for (const auto& t : sign_changes(d))
    c += t.down ? 1 : 0;
  return c;
}

// Bisection on f' between a point with the old sign and one with the new.
double refine(const DensityEstimate& est, double a, double b, bool down, double tol)
{
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    const double mid = 0.5 * (a + b);
    const double d = est.derivative(mid, 1);
    const bool still_old = down ? d > 0.0 : d < 0.0;
    (still_old ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

} // namespace

ModeReport count_modes(const DensityEstimate& est, const ModeOptions& options, Exec exec)
{
  const Sample& sample = est.sample();
  const double h = est.bandwidth();
  const bool auto_interval = !options.interval.has_value();
  const double lo = auto_interval ? sample.min() - 3.0 * h : options.interval->lo;
  const double hi = auto_interval ? sample.max() + 3.0 * h : options.interval->hi;
  if (!(lo < hi))
    throw Error("mode search interval must satisfy lo < hi");

  ModeReport report;
  report.lo = lo;
  report.hi = hi;
  report.tail_mass_floor = options.tail_mass_floor < 0.0
                             ? 1.0 / static_cast<double>(sample.size())
                             : options.tail_mass_floor;

  const double g0 = std::max(512.0, std::ceil(20.0 * (hi - lo) / h));
  if (g0 > static_cast<double>(options.max_grid))
    throw Error("unresolved mode structure");
  std::size_t points = static_cast<std::size_t>(g0);

  auto grid_x = [&](std::size_t k, std::size_t g) {
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g - 1);
  };

  std::vector<double> deriv(points);
  {
    std::vector<double> xs(points);
    for (std::size_t k = 0; k < points; ++k)
      xs[k] = grid_x(k, points);
    est.evaluate(xs, deriv, 1, exec);
  }

  std::vector<std::size_t> history{ count_maxima(deriv) };
  while (history.size() < 3 || history[history.size() - 1] != history[history.size() - 2] ||
         history[history.size() - 2] != history[history.size() - 3]) {
    const std::size_t next = 2 * (points - 1) + 1;
    if (next > options.max_grid)
      throw Error("unresolved mode structure");
    std::vector<double> mids(points - 1);
    std::vector<double> xs(points - 1);
    for (std::size_t k = 0; k + 1 < points; ++k)
      xs[k] = grid_x(2 * k + 1, next);
    est.evaluate(xs, mids, 1, exec);
    std::vector<double> refined(next);
    for (std::size_t k = 0; k < points; ++k) {
      refined[2 * k] = deriv[k];
      if (k + 1 < points)
        refined[2 * k + 1] = mids[k];
    }
    deriv.swap(refined);
    points = next;
    history.push_back(count_maxima(deriv));
  }
  report.grid_points = points;

  const double tol = 1e-8 * (hi - lo);
  std::vector<double> modes;
  std::vector<double> antimodes;
  for (const auto& t : sign_changes(deriv)) {
    const double x = refine(est, grid_x(t.from, points), grid_x(t.to, points), t.down, tol);
    if (t.down)
      modes.push_back(x);
    else if (!modes.empty())
      antimodes.push_back(x);
  }
  // a trailing minimum with no maximum after it is not between two modes
  if (!antimodes.empty() && antimodes.size() == modes.size())
    antimodes.pop_back();

  const double inf = std::numeric_limits<double>::infinity();
  const double left_end = auto_interval ? -inf : lo;
  const double right_end = auto_interval ? inf : hi;
  auto cdf = [&](double x) {
    if (x == -inf)
      return 0.0;
    if (x == inf)
      return 1.0;
    return est.cdf(x);
  };
  report.excluded_tail_modes = detail::apply_tail_floor(
    modes, antimodes, left_end, right_end, report.tail_mass_floor,
    [&](double a, double b) { return cdf(b) - cdf(a); },
    [&](double x) { return est.eval(x); });

  report.count = modes.size();
  report.modes = std::move(modes);
  report.antimodes = std::move(antimodes);
  return report;
}

ModeCountDistribution bootstrap_mode_distribution(const Sample& sample,
                                                  Bandwidth h,
                                                  const ModeBootstrapOptions& options,
                                                  Exec exec)
{
  const std::size_t n = sample.size();
  const std::size_t m = options.resample_size == 0 ? n : options.resample_size;
  if (m < 1 || m > n)
    throw Error("resample size must satisfy 1 <= m <= n");
  if (options.replicates < 1)
    throw Error("number of bootstrap replicates must be at least 1");

  const std::size_t B = options.replicates;
  constexpr std::size_t kFailed = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> counts(B, kFailed);

  for_each_index(B, exec, [&](std::size_t b) {
    StreamRng rng(options.seed, b);
    DensityEstimate star(resample(sample, m, rng), h);
    ModeOptions mo;
    mo.tail_mass_floor = options.tail_mass_floor;
    try {
      counts[b] = count_modes(star, mo, Exec::serial).count;
    } catch (const Error&) {
      counts[b] = kFailed;
    }
  });

  ModeCountDistribution dist;
  dist.replicates = B;
  dist.resample_size = m;
  dist.bandwidth = h.value();
  dist.seed = options.seed;
  dist.tail_mass_floor = options.tail_mass_floor;
  for (std::size_t c : counts) {
    if (c == kFailed) {
      ++dist.failures;
      continue;
    }
    dist.counts.push_back(c);
    dist.probs[c] += 1.0;
  }
  if (dist.counts.empty())
    throw Error("every bootstrap replicate failed: unresolved mode structure");
  const double ok = static_cast<double>(dist.counts.size());
  for (auto& [k, p] : dist.probs)
    p /= ok;
  return dist;
}

ModeLikelihoodReport mode_likelihood_report(const Sample& sample,
                                            Bandwidth h,
                                            const ModeBootstrapOptions& options,
                                            Exec exec)
{
  ModeLikelihoodReport report;
  ModeOptions mo;
  mo.tail_mass_floor = options.tail_mass_floor;
  report.observed = count_modes(DensityEstimate(sample, h), mo, exec);
  report.distribution = bootstrap_mode_distribution(sample, h, options, exec);
  report.table.assign(report.distribution.probs.begin(), report.distribution.probs.end());
  std::stable_sort(report.table.begin(), report.table.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return report;
}

} // namespace densityshape

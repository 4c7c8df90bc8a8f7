#include "densityshape/sharpening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace densityshape {

namespace {

constexpr double kKernelReach = 10.0; // in bandwidths; K(10) ~ 8e-23

struct Resolved
{
  double step;
  double tolerance;
};

Resolved resolve(const Sample& s, const AnnealConfig& c)
{
  if (c.restarts < 1)
    throw Error("annealing needs at least one restart");
  if (c.grid_points < 16)
    throw Error("sharpening grid needs at least 16 points");
  const double step = c.step > 0.0 ? c.step : s.range() / 1000.0;
  if (!(step > 0.0))
    throw Error("zero-spread sample");
  return { step, c.tolerance > 0.0 ? c.tolerance : step };
}

// Density (and optionally its derivative) of a moving point set on a fixed
// grid, updated one point at a time.
class MovingGrid
{
public:
  MovingGrid(std::span<const double> points, double h, double lo, double hi, std::size_t g,
             bool with_derivative)
    : h_(h)
    , lo_(lo)
    , dx_((hi - lo) / static_cast<double>(g - 1))
    , scale_(1.0 / (static_cast<double>(points.size()) * h))
    , f_(g, 0.0)
    , d_(with_derivative ? g : 0, 0.0)
  {
    for (double y : points)
      add(y, 1.0);
  }

  std::span<const double> values() const { return f_; }
  std::span<const double> slopes() const { return d_; }
  double x0() const { return lo_; }
  double dx() const { return dx_; }
  double x(std::size_t k) const { return lo_ + dx_ * static_cast<double>(k); }

  // Moves one point; the touched slice is saved so undo() restores it exactly.
  void move(double from, double to)
  {
    const auto [a1, b1] = reach(from);
    const auto [a2, b2] = reach(to);
    saved_lo_ = std::min(a1, a2);
    saved_hi_ = std::max(b1, b2);
    saved_f_.assign(f_.begin() + saved_lo_, f_.begin() + saved_hi_);
    if (!d_.empty())
      saved_d_.assign(d_.begin() + saved_lo_, d_.begin() + saved_hi_);
    add(from, -1.0);
    add(to, 1.0);
  }

  void undo()
  {
    std::copy(saved_f_.begin(), saved_f_.end(), f_.begin() + saved_lo_);
    if (!d_.empty())
      std::copy(saved_d_.begin(), saved_d_.end(), d_.begin() + saved_lo_);
  }

private:
  std::pair<std::ptrdiff_t, std::ptrdiff_t> reach(double y) const
  {
    const double g = static_cast<double>(f_.size());
    const double a = std::clamp(std::ceil((y - kKernelReach * h_ - lo_) / dx_), 0.0, g);
    const double b = std::clamp(std::floor((y + kKernelReach * h_ - lo_) / dx_) + 1.0, 0.0, g);
    return { static_cast<std::ptrdiff_t>(a), static_cast<std::ptrdiff_t>(std::max(a, b)) };
  }

  void add(double y, double sign)
  {
    const auto [a, b] = reach(y);
    for (auto k = a; k < b; ++k) {
      const double u = (x(static_cast<std::size_t>(k)) - y) / h_;
      f_[static_cast<std::size_t>(k)] += sign * scale_ * gauss_kernel(u);
      if (!d_.empty())
        d_[static_cast<std::size_t>(k)] += sign * scale_ / h_ * gauss_kernel_d1(u);
    }
  }

  double h_;
  double lo_;
  double dx_;
  double scale_;
  std::vector<double> f_;
  std::vector<double> d_;
  std::ptrdiff_t saved_lo_ = 0;
  std::ptrdiff_t saved_hi_ = 0;
  std::vector<double> saved_f_;
  std::vector<double> saved_d_;
};

double squared_distance(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::size_t pick_best(const std::vector<RestartLog>& logs)
{
  std::size_t best = logs.size();
  for (std::size_t r = 0; r < logs.size(); ++r)
    if (logs[r].converged && (best == logs.size() || logs[r].distance < logs[best].distance))
      best = r;
  return best;
}

// ---- mode-count stage -------------------------------------------------------

struct Shape
{
  std::size_t modes;
  double guide;
};

// Mode count read off the grid (tail floor applied with grid masses), and a
// guide that shrinks as the configuration approaches the wanted count.
Shape grid_shape(const MovingGrid& grid, std::size_t m, double floor)
{
  const auto f = grid.values();
  const auto d = grid.slopes();
  const std::size_t g = f.size();

  std::vector<double> modes, antimodes;
  int last = 0;
  std::size_t last_k = 0;
  for (std::size_t k = 0; k < g; ++k) {
    const int s = d[k] > 0.0 ? 1 : (d[k] < 0.0 ? -1 : 0);
    if (s == 0)
      continue;
    if (last > 0 && s < 0)
      modes.push_back(static_cast<double>(last_k));
    else if (last < 0 && s > 0 && !modes.empty())
      antimodes.push_back(static_cast<double>(last_k));
    last = s;
    last_k = k;
  }
  if (!antimodes.empty() && antimodes.size() == modes.size())
    antimodes.pop_back();

  std::vector<double> cum(g, 0.0);
  for (std::size_t k = 1; k < g; ++k)
    cum[k] = cum[k - 1] + 0.5 * grid.dx() * (f[k] + f[k - 1]);
  auto at = [&](double idx) { return static_cast<std::size_t>(idx); };
  detail::apply_tail_floor(
    modes, antimodes, 0.0, static_cast<double>(g - 1), floor,
    [&](double a, double b) { return cum[at(b)] - cum[at(a)]; },
    [&](double k) { return f[at(k)]; });

  const double fmax = *std::max_element(f.begin(), f.end());
  Shape shape{ modes.size(), 0.0 };
  if (shape.modes > m) {
    std::vector<double> depth;
    for (std::size_t j = 0; j < modes.size(); ++j) {
      double base = 0.0;
      if (j > 0)
        base = std::max(base, f[at(antimodes[j - 1])]);
      if (j < antimodes.size())
        base = std::max(base, f[at(antimodes[j])]);
      depth.push_back((f[at(modes[j])] - base) / fmax);
    }
    std::sort(depth.begin(), depth.end());
    for (std::size_t j = 0; j < shape.modes - m; ++j)
      shape.guide += depth[j];
  } else if (shape.modes < m) {
    double dmax = 0.0;
    for (double v : d)
      dmax = std::max(dmax, std::abs(v));
    std::vector<double> flat;
    for (std::size_t k = 1; k + 1 < g; ++k) {
      const double a = std::abs(d[k]);
      const bool same_sign = (d[k - 1] > 0) == (d[k] > 0) && (d[k + 1] > 0) == (d[k] > 0);
      if (same_sign && a <= std::abs(d[k - 1]) && a <= std::abs(d[k + 1]) && f[k] > 1e-3 * fmax)
        flat.push_back(a / dmax);
    }
    std::sort(flat.begin(), flat.end());
    for (std::size_t j = 0; j < m - shape.modes; ++j)
      shape.guide += j < flat.size() ? flat[j] : 1.0;
  }
  return shape;
}

bool better_or_equal(const Shape& next, const Shape& cur, std::size_t m)
{
  const auto pen = [m](const Shape& s) { return s.modes > m ? s.modes - m : m - s.modes; };
  if (pen(next) != pen(cur))
    return pen(next) < pen(cur);
  return next.guide <= cur.guide;
}

} // namespace

double estimate_delta_m(const Sample& sample, Bandwidth h, std::size_t m, const AnnealConfig& config,
                        double lo, double hi)
{
  const std::size_t g = config.grid_points;
  std::vector<double> xs(g), fs(g);
  const double dx = (hi - lo) / static_cast<double>(g - 1);
  for (std::size_t k = 0; k < g; ++k)
    xs[k] = lo + dx * static_cast<double>(k);
  DensityEstimate(sample, h).evaluate(xs, fs, 0, Exec::serial);
  return grid_delta_m(fs, lo, dx, m, config.level_search).delta;
}

SharpenedSample sharpen_to_mode_count(const Sample& x,
                                      Bandwidth h,
                                      std::size_t m,
                                      const AnnealConfig& config,
                                      Exec exec)
{
  if (m < 1)
    throw Error("target mode count must be at least 1");
  ModeOptions mo;
  mo.tail_mass_floor = config.tail_mass_floor;
  const DensityEstimate fx(x, h);
  const std::size_t observed = count_modes(fx, mo).count;

  SharpenedSample out;
  out.y.assign(x.values().begin(), x.values().end());
  out.source = x;
  out.target_delta = static_cast<double>(m);
  out.achieved_modes = observed;
  if (observed == m)
    return out;

  const Resolved rs = x.degenerate() ? Resolved{ 1e-3 * h.value(), 0.0 } : resolve(x, config);
  out.step = rs.step;
  const double hv = h.value();
  const double lo = x.min() - 4.0 * hv;
  const double hi = x.max() + 4.0 * hv;
  const std::size_t n = x.size();
  const double floor = config.tail_mass_floor < 0.0 ? 1.0 / static_cast<double>(n)
                                                    : config.tail_mass_floor;
  double fmax = 0.0;
  for (double v : x.values())
    fmax = std::max(fmax, fx.eval(v));

  std::vector<RestartLog> logs(config.restarts);
  std::vector<std::vector<double>> finals(config.restarts);
  for_each_index(config.restarts, exec, [&](std::size_t r) {
    StreamRng rng(derive_seed(config.seed, "mode-sharpen"), r);
    std::normal_distribution<double> gauss;
    std::vector<double> y(x.values().begin(), x.values().end());
    MovingGrid grid(y, hv, lo, hi, config.grid_points, true);
    Shape cur = grid_shape(grid, m, floor);
    RestartLog& log = logs[r];
    for (std::size_t sweep = 0; sweep < config.max_sweeps && !log.converged; ++sweep) {
      log.sweeps = sweep + 1;
      for (std::size_t i = 0; i < n; ++i) {
        const double ft = fx.eval(y[i]) / fmax;
        // too many modes: more diffuse; too few: sharper
        const double mult = cur.modes > m ? std::exp(ft - 1.0) : std::exp(-ft);
        const double next = y[i] + rs.step * gauss(rng) * mult;
        grid.move(y[i], next);
        const Shape cand = grid_shape(grid, m, floor);
        if (!better_or_equal(cand, cur, m)) {
          grid.undo();
          continue;
        }
        y[i] = next;
        cur = cand;
        ++log.accepted_moves;
        log.trace.push_back(static_cast<double>(cur.modes > m ? cur.modes - m : m - cur.modes) +
                            cur.guide);
        if (cur.modes == m && count_modes(DensityEstimate(Sample(y), h), mo).count == m) {
          log.converged = true;
          break;
        }
      }
    }
    log.distance = squared_distance(x.values(), y);
    log.achieved = static_cast<double>(cur.modes);
    finals[r] = std::move(y);
  });

  const std::size_t best = pick_best(logs);
  if (best == logs.size()) {
    std::size_t closest = 0;
    for (std::size_t r = 1; r < logs.size(); ++r)
      if (std::abs(logs[r].achieved - static_cast<double>(m)) <
          std::abs(logs[closest].achieved - static_cast<double>(m)))
        closest = r;
    throw Error("mode-count constraint unreachable: target " + std::to_string(m) +
                " modes, best restart ended with " +
                std::to_string(static_cast<std::size_t>(logs[closest].achieved)) + " after " +
                std::to_string(logs[closest].sweeps) + " sweeps");
  }
  out.y = finals[best];
  out.distance = logs[best].distance;
  out.achieved_modes = count_modes(DensityEstimate(out.sorted(), h), mo).count;
  out.restarts_used = config.restarts;
  out.accepted_moves = logs[best].accepted_moves;
  out.chosen_restart = best;
  out.restarts = std::move(logs);
  return out;
}

SharpenedSample sharpen_to_excess_mass(const Sample& z,
                                       Bandwidth h,
                                       std::size_t m,
                                       double target,
                                       const AnnealConfig& config,
                                       Exec exec)
{
  if (m < 1)
    throw Error("excess mass order m must be at least 1");
  if (!(target >= 0.0) || !std::isfinite(target))
    throw Error("excess-mass target must be finite and nonnegative");
  if (z.degenerate())
    throw Error("zero-spread sample");
  const Resolved rs = resolve(z, config);
  const double hv = h.value();
  const double lo = z.min() - 4.0 * hv;
  const double hi = z.max() + 4.0 * hv;
  const std::size_t n = z.size();

  SharpenedSample out;
  out.y.assign(z.values().begin(), z.values().end());
  out.source = z;
  out.target_delta = target;
  out.tolerance = rs.tolerance;
  out.step = rs.step;

  const DensityEstimate fz(z, h);
  MovingGrid base(z.values(), hv, lo, hi, config.grid_points, false);
  const double start = grid_delta_m(base.values(), base.x0(), base.dx(), m, config.level_search).delta;
  out.achieved_delta = start;
  ModeOptions mo;
  mo.tail_mass_floor = config.tail_mass_floor;
  if (std::abs(start - target) < rs.tolerance) {
    out.achieved_modes = count_modes(fz, mo).count;
    return out;
  }

  const auto fv = base.values();
  const double fmax = *std::max_element(fv.begin(), fv.end());

  std::vector<RestartLog> logs(config.restarts);
  std::vector<std::vector<double>> finals(config.restarts);
  for_each_index(config.restarts, exec, [&](std::size_t r) {
    StreamRng rng(derive_seed(config.seed, "excess-sharpen"), r);
    std::normal_distribution<double> gauss;
    std::vector<double> y(z.values().begin(), z.values().end());
    MovingGrid grid = base;
    double cur = start;
    RestartLog& log = logs[r];
    for (std::size_t sweep = 0; sweep < config.max_sweeps && !log.converged; ++sweep) {
      log.sweeps = sweep + 1;
      for (std::size_t i = 0; i < n; ++i) {
        const double ft = fz.eval(y[i]) / fmax;
        const double mult = cur < target ? std::exp(-ft) : std::exp(ft - 1.0);
        const double next = y[i] + rs.step * gauss(rng) * mult;
        grid.move(y[i], next);
        const double cand =
          grid_delta_m(grid.values(), grid.x0(), grid.dx(), m, config.level_search).delta;
        if (std::abs(cand - target) > std::abs(cur - target)) {
          grid.undo();
          continue;
        }
        y[i] = next;
        cur = cand;
        ++log.accepted_moves;
        log.trace.push_back(std::abs(cur - target));
        if (std::abs(cur - target) < rs.tolerance) {
          log.converged = true;
          break;
        }
      }
    }
    log.distance = squared_distance(z.values(), y);
    log.achieved = cur;
    finals[r] = std::move(y);
  });

  const std::size_t best = pick_best(logs);
  if (best == logs.size()) {
    std::size_t closest = 0;
    for (std::size_t r = 1; r < logs.size(); ++r)
      if (std::abs(logs[r].achieved - target) < std::abs(logs[closest].achieved - target))
        closest = r;
    throw Error("excess-mass target unreachable: target " + std::to_string(target) +
                ", best achieved " + std::to_string(logs[closest].achieved) + " within " +
                std::to_string(config.max_sweeps) + " sweeps");
  }
  out.y = finals[best];
  out.distance = logs[best].distance;
  // recomputed from scratch on the same grid rather than taken from the
  // incrementally updated one
  out.achieved_delta = estimate_delta_m(out.sorted(), h, m, config, lo, hi);
  out.achieved_modes = count_modes(DensityEstimate(out.sorted(), h), mo).count;
  out.restarts_used = config.restarts;
  out.accepted_moves = logs[best].accepted_moves;
  out.chosen_restart = best;
  out.restarts = std::move(logs);
  return out;
}

QuantileCurveRun quantile_curve_pipeline(const Sample& x,
                                         std::size_t m,
                                         const std::vector<double>& alphas,
                                         std::optional<Bandwidth> h,
                                         const ResamplePlan& plan,
                                         const AnnealConfig& config,
                                         const DeltaOptions& delta_options,
                                         Exec exec)
{
  QuantileCurveRun run;
  try {
    if (h) {
      run.h = *h;
    } else {
      const SjBandwidth sj = bandwidth_sj(x, exec);
      run.h = sj.h;
      run.bandwidth_fell_back = sj.fell_back;
    }
  } catch (const Error& e) {
    throw Error(std::string("bandwidth: ") + e.what());
  }

  try {
    ModeOptions mo;
    mo.tail_mass_floor = config.tail_mass_floor;
    run.observed_modes = count_modes(DensityEstimate(x, run.h), mo, exec).count;
    run.mode_stage = sharpen_to_mode_count(x, run.h, m, config, exec);
    run.mode_stage_ran = run.observed_modes != m;
  } catch (const Error& e) {
    throw Error(std::string("mode-count stage: ") + e.what());
  }

  const Sample zs = run.mode_stage.sorted();
  try {
    run.targets = delta_quantile_targets(zs, m, plan, alphas, delta_options, exec);
  } catch (const Error& e) {
    throw Error(std::string("bootstrap targets: ") + e.what());
  }

  for (const auto& q : run.targets.targets) {
    try {
      run.curves.push_back({ q.alpha, q.t_hat, sharpen_to_excess_mass(zs, run.h, m, q.t_hat, config, exec) });
    } catch (const Error& e) {
      throw Error("excess-mass stage (alpha " + std::to_string(q.alpha) + "): " + e.what());
    }
  }
  return run;
}

} // namespace densityshape

#include "densityshape/limit_lab.hpp"

#include "densityshape/modes.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace densityshape {

BridgePath simulate_bridge(std::size_t grid_n, StreamRng& rng)
{
  if (grid_n < 2)
    throw Error("bridge needs at least 2 grid points");
  BridgePath path;
  path.grid.resize(grid_n);
  path.values.resize(grid_n);
  const double dt = 1.0 / static_cast<double>(grid_n - 1);
  const double sd = std::sqrt(dt);
  std::normal_distribution<double> normal;
  double v = 0.0;
  path.values[0] = 0.0;
  for (std::size_t k = 1; k < grid_n; ++k) {
    v += sd * normal(rng);
    path.values[k] = v;
  }
  const double end = v;
  for (std::size_t k = 0; k < grid_n; ++k) {
    const double t = static_cast<double>(k) * dt;
    path.grid[k] = t;
    path.values[k] -= t * end;
  }
  path.grid.back() = 1.0;
  path.values.back() = 0.0;
  return path;
}

void validate(const LimitConfig& cfg)
{
  if (!(cfg.c0 > 0.0) || !std::isfinite(cfg.c0))
    throw Error("C0 must be positive");
  if (!(cfg.f_x0 > 0.0))
    throw Error("f(x0) must be positive");
  if (!(cfg.f2_x0 < 0.0))
    throw Error("f''(x0) must be negative");
  if (!(cfg.y_step > 0.0))
    throw Error("y step must be positive");
  if (!(cfg.u_trunc >= 6.0))
    throw Error("u truncation must be at least 6");
  if (cfg.y_range < 0.0)
    throw Error("y range must be nonnegative");
}

namespace {

double snap(double v, double step)
{
  return std::ceil(v / step - 1e-9) * step;
}

struct Embedding
{
  double y_range; // Y
  double trunc;   // T
  std::size_t y_points;
  std::size_t u_points;
  std::size_t offset; // bridge index of s = -(Y + T)
  std::size_t bridge_n;
  double length; // L
};

Embedding embedding(const LimitConfig& cfg)
{
  validate(cfg);
  Embedding e;
  e.y_range = resolved_y_range(cfg);
  e.trunc = snap(cfg.u_trunc, cfg.y_step);
  const auto steps = [&](double v) {
    return static_cast<std::size_t>(std::llround(v / cfg.y_step));
  };
  e.y_points = 2 * steps(e.y_range) + 1;
  e.u_points = 2 * steps(e.trunc) + 1;
  e.offset = steps(1.0);
  if (e.offset == 0)
    throw Error("y step must be below 1");
  const std::size_t half = steps(e.y_range) + steps(e.trunc) + e.offset;
  e.bridge_n = 2 * half + 1;
  e.length = 2.0 * static_cast<double>(half) * cfg.y_step;
  if (e.bridge_n > (std::size_t{ 1 } << 26))
    throw Error("y range exceeds the embeddable window");
  return e;
}

} // namespace

double resolved_y_range(const LimitConfig& cfg)
{
  if (cfg.y_range > 0.0)
    return snap(cfg.y_range, cfg.y_step);
  const double sd_xi = std::sqrt(cfg.f_x0 / (4.0 * std::sqrt(M_PI)));
  const double noise = std::pow(cfg.c0, -1.5) * sd_xi;
  const double drift = cfg.c0 * std::abs(cfg.f2_x0);
  const double y = std::clamp(6.0 * noise / drift, 6.0, 200.0);
  return snap(y, cfg.y_step);
}

std::size_t bridge_points(const LimitConfig& cfg)
{
  return embedding(cfg).bridge_n;
}

ProcessPath xi_process(const BridgePath& bridge, const LimitConfig& cfg)
{
  const Embedding e = embedding(cfg);
  if (bridge.values.size() != e.bridge_n)
    throw Error("bridge grid does not match the y/u window (need " + std::to_string(e.bridge_n) +
                " points)");
  const double step = cfg.y_step;
  std::vector<double> weights(e.u_points);
  for (std::size_t i = 0; i < e.u_points; ++i) {
    const double u = -e.trunc + static_cast<double>(i) * step;
    const double w = (i == 0 || i + 1 == e.u_points) ? 0.5 * step : step;
    weights[i] = w * gauss_kernel_d2(u);
  }
  const double scale = std::sqrt(cfg.f_x0) * std::sqrt(e.length);
  ProcessPath out;
  out.y.resize(e.y_points);
  out.values.resize(e.y_points);
  for (std::size_t j = 0; j < e.y_points; ++j) {
    out.y[j] = -e.y_range + static_cast<double>(j) * step;
    const double* w = bridge.values.data() + e.offset + j;
    double acc = 0.0;
    for (std::size_t i = 0; i < e.u_points; ++i)
      acc += weights[i] * w[i];
    out.values[j] = scale * acc;
  }
  return out;
}

ProcessPath eta_process(const ProcessPath& xi, const ProcessPath* xi_star, const LimitConfig& cfg)
{
  if (xi_star && xi_star->values.size() != xi.values.size())
    throw Error("xi and xi* must share the y grid");
  const double noise = std::pow(cfg.c0, -1.5);
  ProcessPath out;
  out.y = xi.y;
  out.values.resize(xi.values.size());
  for (std::size_t j = 0; j < xi.values.size(); ++j) {
    const double x = xi_star ? xi.values[j] + xi_star->values[j] : xi.values[j];
    out.values[j] = noise * x + cfg.c0 * xi.y[j] * cfg.f2_x0;
  }
  return out;
}

Downcrossings count_downcrossings(std::span<const double> values)
{
  Downcrossings out;
  int previous = 0; // sign of the last nonzero value
  bool trailing_zero_after_positive = false;
  bool any_nonzero = false;
  for (double v : values) {
    if (v == 0.0) {
      if (previous > 0)
        trailing_zero_after_positive = true;
      continue;
    }
    any_nonzero = true;
    const int sign = v > 0.0 ? 1 : -1;
    if (previous > 0 && sign < 0)
      ++out.count;
    trailing_zero_after_positive = false;
    previous = sign;
  }
  if (trailing_zero_after_positive)
    ++out.count;
  out.degenerate = !any_nonzero;
  return out;
}

namespace {

LimitModeDistribution tabulate(std::vector<std::size_t> counts, std::size_t degenerate, double y_range)
{
  LimitModeDistribution out;
  out.reps = counts.size();
  out.y_range = y_range;
  out.degenerate = degenerate;
  for (std::size_t c : counts)
    out.probs[c] += 1.0;
  for (auto& [k, p] : out.probs)
    p /= static_cast<double>(out.reps);
  out.counts = std::move(counts);
  return out;
}

std::size_t count_eta(const BridgePath& w, const BridgePath* w_star, const LimitConfig& cfg, bool& degenerate)
{
  const ProcessPath xi = xi_process(w, cfg);
  ProcessPath eta;
  if (w_star) {
    const ProcessPath xs = xi_process(*w_star, cfg);
    eta = eta_process(xi, &xs, cfg);
  } else {
    eta = eta_process(xi, nullptr, cfg);
  }
  const Downcrossings d = count_downcrossings(eta.values);
  degenerate = d.degenerate;
  return d.count;
}

} // namespace

LimitModeDistribution limit_mode_distribution(const LimitConfig& cfg, std::size_t reps, Exec exec)
{
  if (reps == 0)
    throw Error("reps must be at least 1");
  const Embedding e = embedding(cfg);
  const std::uint64_t base = derive_seed(cfg.seed, "limit-bridge");
  std::vector<std::size_t> counts(reps);
  std::vector<char> flags(reps, 0);
  for_each_index(reps, exec, [&](std::size_t r) {
    StreamRng rng(base, r);
    const BridgePath w = simulate_bridge(e.bridge_n, rng);
    bool degenerate = false;
    counts[r] = count_eta(w, nullptr, cfg, degenerate);
    flags[r] = degenerate;
  });
  return tabulate(std::move(counts), std::count(flags.begin(), flags.end(), 1), e.y_range);
}

LimitModeDistribution conditional_star_distribution(const LimitConfig& cfg,
                                                    std::uint64_t conditioning_index,
                                                    std::size_t reps,
                                                    Exec exec)
{
  if (reps == 0)
    throw Error("reps must be at least 1");
  const Embedding e = embedding(cfg);
  StreamRng wrng(derive_seed(cfg.seed, "limit-conditioning"), conditioning_index);
  const BridgePath w = simulate_bridge(e.bridge_n, wrng);
  const std::uint64_t base = derive_seed(cfg.seed, "limit-star");
  std::vector<std::size_t> counts(reps);
  std::vector<char> flags(reps, 0);
  for_each_index(reps, exec, [&](std::size_t r) {
    StreamRng rng(base, r);
    const BridgePath ws = simulate_bridge(e.bridge_n, rng);
    bool degenerate = false;
    counts[r] = count_eta(w, &ws, cfg, degenerate);
    flags[r] = degenerate;
  });
  return tabulate(std::move(counts), std::count(flags.begin(), flags.end(), 1), e.y_range);
}

double total_variation(const std::map<std::size_t, double>& p, const std::map<std::size_t, double>& q)
{
  std::map<std::size_t, double> diff = p;
  for (const auto& [k, v] : q)
    diff[k] -= v;
  double tv = 0.0;
  for (const auto& [k, v] : diff)
    tv += std::abs(v);
  return 0.5 * tv;
}

namespace {

// sup over the grid |u| <= U of B(u) - u^2 for a two-sided Brownian motion
// started at 0; the value at u = 0 makes the supremum nonnegative.
double drifted_sup(StreamRng& rng, double trunc, double step)
{
  std::normal_distribution<double> normal;
  const auto steps = static_cast<std::size_t>(std::llround(trunc / step));
  const double sd = std::sqrt(step);
  double best = 0.0;
  for (int side = 0; side < 2; ++side) {
    double b = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      b += sd * normal(rng);
      const double u = static_cast<double>(k) * step;
      best = std::max(best, b - u * u);
    }
  }
  return best;
}

} // namespace

ZLimitSamples excess_mass_limit_samples(const ZLimitConfig& cfg, Exec exec)
{
  if (!(cfg.F2 > 0.0 && cfg.F2 <= cfg.F3 && cfg.F3 <= cfg.F4 && cfg.F4 < 1.0))
    throw Error("covariance not positive semidefinite: need 0 < F(x2) <= F(x3) <= F(x4) < 1");
  if (cfg.fprime2 == 0.0 || !std::isfinite(cfg.fprime2))
    throw Error("f'(x2) must be finite and nonzero");
  if (cfg.reps == 0)
    throw Error("reps must be at least 1");
  if (!(cfg.u_step > 0.0) || !(cfg.u_trunc > cfg.u_step))
    throw Error("invalid u grid");

  const double F[3] = { cfg.F2, cfg.F3, cfg.F4 };
  Eigen::Matrix3d cov;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      cov(i, j) = F[std::min(i, j)] * (1.0 - F[std::max(i, j)]);
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(cov);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < -1e-12).any())
    throw Error("covariance not positive semidefinite");
  const Eigen::Vector3d root_d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix3d lower = ldlt.matrixL();
  const Eigen::Matrix3d factor = ldlt.transpositionsP().transpose() * lower * root_d.asDiagonal();

  const double ratio = std::abs(cfg.fprime2 / cfg.fprime4); // inf when f'(x4) = 0
  const double threshold = std::cbrt(ratio);
  const std::uint64_t base = derive_seed(cfg.seed, "z-limit");

  ZLimitSamples out;
  out.z.resize(cfg.reps);
  out.indicator.resize(cfg.reps);
  for_each_index(cfg.reps, exec, [&](std::size_t r) {
    StreamRng rng(base, r);
    std::normal_distribution<double> normal;
    Eigen::Vector3d g;
    for (int i = 0; i < 3; ++i)
      g(i) = normal(rng);
    const Eigen::Vector3d n = factor * g;
    const double sup2 = drifted_sup(rng, cfg.u_trunc, cfg.u_step);
    const double sup4 = drifted_sup(rng, cfg.u_trunc, cfg.u_step);
    int indicator = 2;
    if (std::isinf(threshold) || sup2 < threshold * sup4)
      indicator = 1;
    out.indicator[r] = indicator;
    out.z[r] = (indicator == 1 ? n(0) : n(2)) - n(1);
  });

  const double count = static_cast<double>(cfg.reps);
  double mean = 0.0;
  for (double z : out.z)
    mean += z;
  mean /= count;
  double m2 = 0.0, m3 = 0.0;
  for (double z : out.z) {
    const double d = z - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= count;
  m3 /= count;
  out.mean = mean;
  out.sd = std::sqrt(m2);
  out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  out.standard_error = out.sd / std::sqrt(count);
  return out;
}

namespace {

double shoulder_q(double t)
{
  return t * t * t * t / 4.0 - 2.0 * t * t * t / 3.0 + t * t / 2.0;
}

double shoulder_q_integral(double t)
{
  return std::pow(t, 5) / 20.0 - std::pow(t, 4) / 6.0 + std::pow(t, 3) / 6.0;
}

} // namespace

ShoulderDensity::ShoulderDensity()
{
  const double qa = shoulder_q(-1.0);
  boost::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(
    [&](double b) { return shoulder_q(b) - qa; }, 1.5, 3.0, boost::math::tools::eps_tolerance<double>(52), iters);
  b_ = 0.5 * (root.first + root.second);
  const double mass = (b_ + 1.0) * qa - (shoulder_q_integral(b_) - shoulder_q_integral(-1.0));
  k_ = 1.0 / mass;
  peak_ = k_ * qa;
}

double ShoulderDensity::pdf(double x) const
{
  if (x < -1.0 || x > b_)
    return 0.0;
  return std::max(0.0, k_ * (shoulder_q(-1.0) - shoulder_q(x)));
}

double ShoulderDensity::d1(double x) const
{
  if (x < -1.0 || x > b_)
    return 0.0;
  return -k_ * x * (x - 1.0) * (x - 1.0);
}

double ShoulderDensity::d2(double x) const
{
  if (x < -1.0 || x > b_)
    return 0.0;
  return -k_ * (3.0 * x * x - 4.0 * x + 1.0);
}

double ShoulderDensity::d3(double x) const
{
  if (x < -1.0 || x > b_)
    return 0.0;
  return -k_ * (6.0 * x - 4.0);
}

double ShoulderDensity::sample(StreamRng& rng) const
{
  std::uniform_real_distribution<double> ux(-1.0, b_);
  std::uniform_real_distribution<double> uy(0.0, peak_);
  for (;;) {
    const double x = ux(rng);
    if (uy(rng) < pdf(x))
      return x;
  }
}

double bump_kernel(double u)
{
  if (std::abs(u) >= 1.0)
    return 0.0;
  const double s = 1.0 - u * u;
  return 315.0 / 256.0 * s * s * s * s;
}

double bump_kernel_d1(double u)
{
  if (std::abs(u) >= 1.0)
    return 0.0;
  const double s = 1.0 - u * u;
  return -315.0 / 32.0 * u * s * s * s;
}

double bump_kernel_d2(double u)
{
  if (std::abs(u) >= 1.0)
    return 0.0;
  const double s = 1.0 - u * u;
  return -315.0 / 32.0 * s * s * (s - 6.0 * u * u);
}

BumpDensity::BumpDensity(ShoulderDensity base, double h1) : base_(std::move(base)), h1_(h1)
{
  if (!(h1 > 0.0) || h1 > 1.0)
    throw Error("h1 must lie in (0, 1] so the bump stays inside the support");
  const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(bump_kernel, -1.0, 1.0);
  if (std::abs(mass - 1.0) > 1e-8)
    throw Error("bump kernel is not a density");
  if (!(bump_kernel_d2(0.0) < 0.0))
    throw Error("bump kernel mode is not strict");

  // 1/2 |f'''(x1)| y^2 = |psi'(y)| must have exactly one root on (0, inf),
  // and there f'''(x1) y + psi''(y) != 0. psi' vanishes beyond 1.
  const double f3 = base_.d3(base_.shoulder());
  const auto gap = [&](double y) { return 0.5 * std::abs(f3) * y * y - std::abs(bump_kernel_d1(y)); };
  const std::size_t scan = 20000;
  std::size_t roots = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double prev = gap(1e-6);
  for (std::size_t i = 1; i <= scan; ++i) {
    const double y = 1e-6 + (1.0 - 1e-6) * static_cast<double>(i) / static_cast<double>(scan);
    const double cur = gap(y);
    if ((prev < 0.0) != (cur < 0.0)) {
      ++roots;
      bracket_hi = y;
      bracket_lo = y - (1.0 - 1e-6) / static_cast<double>(scan);
    }
    prev = cur;
  }
  if (roots != 1)
    throw Error("bump kernel fails the unique-crossing condition");
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(gap, bracket_lo, bracket_hi,
                                                   boost::math::tools::eps_tolerance<double>(50), iters);
  const double y0 = 0.5 * (r.first + r.second);
  if (std::abs(f3 * y0 + bump_kernel_d2(y0)) < 1e-10)
    throw Error("bump kernel fails the transversality condition");
}

double BumpDensity::pdf(double x) const
{
  const double h4 = h1_ * h1_ * h1_ * h1_;
  return (base_.pdf(x) + h1_ * h1_ * h1_ * bump_kernel((x - base_.shoulder()) / h1_)) / (1.0 + h4);
}

double BumpDensity::d1(double x) const
{
  const double h4 = h1_ * h1_ * h1_ * h1_;
  return (base_.d1(x) + h1_ * h1_ * bump_kernel_d1((x - base_.shoulder()) / h1_)) / (1.0 + h4);
}

double BumpDensity::sample(StreamRng& rng) const
{
  const double h4 = h1_ * h1_ * h1_ * h1_;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= h4 / (1.0 + h4))
    return base_.sample(rng);
  // (1 - u^2)^4 on [-1, 1] is the Beta(5, 5) law mapped by u = 2B - 1
  std::gamma_distribution<double> g(5.0, 1.0);
  const double a = g(rng);
  const double b = g(rng);
  return base_.shoulder() + h1_ * (2.0 * a / (a + b) - 1.0);
}

std::size_t BumpDensity::exact_mode_count(std::size_t grid) const
{
  if (grid < 3)
    throw Error("grid must have at least 3 points");
  // open support: f_n' jumps at the ends, which are not modes
  const double lo = base_.lo();
  const double hi = base_.hi();
  std::vector<double> d(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
    d[i] = d1(x);
  }
  std::size_t modes = 0;
  int previous = 0;
  for (double v : d) {
    if (v == 0.0)
      continue;
    const int sign = v > 0.0 ? 1 : -1;
    if (previous > 0 && sign < 0)
      ++modes;
    previous = sign;
  }
  return modes;
}

BumpExperiment bump_detection_experiment(double h1,
                                         std::size_t n,
                                         const std::vector<double>& bandwidths,
                                         std::size_t reps,
                                         std::uint64_t seed,
                                         Exec exec)
{
  if (n < 2 || reps == 0)
    throw Error("need n >= 2 and reps >= 1");
  const BumpDensity bumped(ShoulderDensity{}, h1);
  const ShoulderDensity& base = bumped.base();
  const std::uint64_t bump_base = derive_seed(seed, "bump-sample");
  const std::uint64_t shoulder_base = derive_seed(seed, "shoulder-sample");

  BumpExperiment out;
  out.h1 = h1;
  out.n = n;
  out.reps = reps;
  for (double hv : bandwidths) {
    const Bandwidth h(hv);
    std::vector<char> detected(reps, 0), unimodal(reps, 0), spurious(reps, 0);
    for_each_index(reps, exec, [&](std::size_t r) {
      std::vector<double> xs(n);
      StreamRng brng(bump_base, r);
      for (auto& x : xs)
        x = bumped.sample(brng);
      const ModeReport with_bump = count_modes(DensityEstimate(Sample(xs), h));
      detected[r] = with_bump.count == 2;

      StreamRng srng(shoulder_base, r);
      for (auto& x : xs)
        x = base.sample(srng);
      const ModeReport plain = count_modes(DensityEstimate(Sample(xs), h));
      unimodal[r] = plain.count == 1;
      bool near = false;
      for (double m : plain.modes)
        near = near || std::abs(m - base.shoulder()) <= 3.0 * hv;
      spurious[r] = plain.count >= 2 && near;
    });
    const auto rate = [&](const std::vector<char>& v) {
      return static_cast<double>(std::count(v.begin(), v.end(), 1)) / static_cast<double>(reps);
    };
    out.rows.push_back({ hv, rate(detected), rate(unimodal), rate(spurious) });
  }
  return out;
}

} // namespace densityshape

#include "densityshape/excess_mass.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace densityshape {

double IntervalSet::total_length() const
{
  double s = 0.0;
  for (const auto& iv : intervals)
    s += iv.length();
  return s;
}

std::string_view to_string(DeltaMethod method)
{
  switch (method) {
    case DeltaMethod::exact_candidates:
      return "exact-candidates";
    case DeltaMethod::grid_refined:
      return "grid-refined";
    case DeltaMethod::continuous_grid:
      return "continuous-grid";
  }
  return "unknown";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Distinct sample values with multiplicities.
struct Atoms
{
  std::vector<double> x;
  std::vector<std::size_t> count;
  std::size_t n = 0;

  explicit Atoms(const Sample& sample)
  {
    n = sample.size();
    for (double v : sample.values()) {
      if (!x.empty() && x.back() == v) {
        ++count.back();
      } else {
        x.push_back(v);
        count.push_back(1);
      }
    }
  }
  std::size_t distinct() const { return x.size(); }
};

// Best selection of at most m disjoint runs of consecutive items. A run over
// items i..j earns gain[i] + ... + gain[j] minus the bridge costs
// bridge[i] + ... + bridge[j-1] between them. in[j]: j runs, the last one
// covers item k. out[j]: j runs, item k uncovered.
struct RunChoice
{
  double value = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> runs; // [first, last] items
};

RunChoice best_runs(std::span<const double> gain,
                    std::span<const double> bridge,
                    std::size_t m,
                    bool want_runs)
{
  const std::size_t d = gain.size();
  const std::size_t w = m + 1;
  RunChoice result;
  if (d == 0)
    return result;

  std::vector<double> in(w, kNegInf), out(w, kNegInf);
  std::vector<double> nin(w), nout(w);
  // in: 0 new run after an uncovered item, 1 extended, 2 new run right after
  // another; out: 1 when the previous item was covered
  std::vector<std::uint8_t> bp_in(want_runs ? d * w : 0), bp_out(want_runs ? d * w : 0);

  out[0] = 0.0;
  in[1] = gain[0];
  for (std::size_t k = 1; k < d; ++k) {
    nout[0] = out[0];
    nin[0] = kNegInf;
    for (std::size_t j = 1; j < w; ++j) {
      const double ext = in[j] - bridge[k - 1];
      // a new run may follow an uncovered item or close the previous run
      const double start = std::max(out[j - 1], in[j - 1]);
      std::uint8_t how_in = 1;
      if (ext >= start) {
        nin[j] = ext + gain[k];
      } else {
        nin[j] = start + gain[k];
        how_in = in[j - 1] > out[j - 1] ? 2 : 0;
      }
      const bool from_in = in[j] > out[j];
      nout[j] = from_in ? in[j] : out[j];
      if (want_runs) {
        bp_in[k * w + j] = how_in;
        bp_out[k * w + j] = from_in ? 1 : 0;
      }
    }
    in.swap(nin);
    out.swap(nout);
  }

  std::size_t best_j = 0;
  bool best_in = false;
  for (std::size_t j = 1; j < w; ++j) {
    if (in[j] > result.value) {
      result.value = in[j];
      best_j = j;
      best_in = true;
    }
    if (out[j] > result.value) {
      result.value = out[j];
      best_j = j;
      best_in = false;
    }
  }
  if (!want_runs)
    return result;

  std::size_t j = best_j;
  bool covered = best_in;
  std::size_t end = d - 1;
  for (std::size_t k = d; k-- > 0 && j > 0;) {
    if (covered) {
      const std::uint8_t how = k > 0 ? bp_in[k * w + j] : 0;
      if (how == 1)
        continue; // run extends further left
      result.runs.push_back({ k, end });
      --j;
      covered = how == 2;
      end = k - 1;
    } else if (k > 0 && bp_out[k * w + j] == 1) {
      covered = true;
      end = k - 1;
    }
  }
  std::reverse(result.runs.begin(), result.runs.end());
  return result;
}

ExcessMassAt solve(const Atoms& a, std::size_t m, double lambda, bool want_witness = true)
{
  const std::size_t d = a.distinct();
  const double inv_n = 1.0 / static_cast<double>(a.n);
  std::vector<double> gain(d), bridge(d > 0 ? d - 1 : 0);
  for (std::size_t k = 0; k < d; ++k)
    gain[k] = static_cast<double>(a.count[k]) * inv_n;
  for (std::size_t k = 0; k + 1 < d; ++k)
    bridge[k] = lambda * (a.x[k + 1] - a.x[k]);
  const RunChoice choice = best_runs(gain, bridge, m, want_witness);

  ExcessMassAt result;
  result.value = choice.value;
  for (const auto& [first, last] : choice.runs) {
    result.witness.intervals.push_back({ a.x[first], a.x[last] });
    for (std::size_t k = first; k <= last; ++k)
      result.captured += a.count[k];
  }
  return result;
}

// A candidate solution seen as a line in lambda: captured/n - lambda * length.
struct Line
{
  std::size_t captured;
  double length;
  double at(double lambda, double inv_n) const
  {
    return static_cast<double>(captured) * inv_n - lambda * length;
  }
};

// Breakpoints of the convex envelope E_m(lambda), found by probing the
// intersection of two known optimal lines: if nothing beats them there the
// intersection is a breakpoint, otherwise the winner splits the search.
std::vector<double> envelope_breakpoints(const Atoms& a, std::size_t m, std::size_t& probes)
{
  const std::size_t d = a.distinct();
  const double inv_n = 1.0 / static_cast<double>(a.n);
  std::vector<double> gaps(d > 0 ? d - 1 : 0);
  for (std::size_t k = 0; k + 1 < d; ++k)
    gaps[k] = a.x[k + 1] - a.x[k];
  std::sort(gaps.begin(), gaps.end(), std::greater<>());
  double cut = 0.0;
  for (std::size_t k = 0; k + 1 < m && k < gaps.size(); ++k)
    cut += gaps[k];
  const Line first{ a.n, (a.x.back() - a.x.front()) - cut };

  std::vector<std::size_t> counts = a.count;
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::size_t top = 0;
  for (std::size_t k = 0; k < m && k < counts.size(); ++k)
    top += counts[k];
  const Line last{ top, 0.0 };

  std::vector<double> out;
  if (!(first.length > 0.0))
    return out;
  std::vector<std::pair<Line, Line>> stack{ { first, last } };
  while (!stack.empty()) {
    const auto [left, right] = stack.back();
    stack.pop_back();
    const double lam = static_cast<double>(left.captured - right.captured) * inv_n /
                       (left.length - right.length);
    const ExcessMassAt probe = solve(a, m, lam);
    ++probes;
    const Line mid{ probe.captured, probe.witness.total_length() };
    const double gain = mid.at(lam, inv_n) - std::max(left.at(lam, inv_n), right.at(lam, inv_n));
    if (gain <= 1e-13 || !(mid.length < left.length && mid.length > right.length)) {
      out.push_back(lam);
      continue;
    }
    stack.push_back({ mid, right });
    stack.push_back({ left, mid });
  }
  std::sort(out.begin(), out.end());
  return out;
}

double difference_at(const Atoms& a, std::size_t m, double lambda)
{
  const double upper = solve(a, m, lambda, false).value;
  const double lower = m > 1 ? solve(a, m - 1, lambda, false).value : 0.0;
  return upper - lower;
}

void fill_witnesses(const Atoms& a, ExcessMassResult& r)
{
  r.witness_m = solve(a, r.m, r.lambda_star).witness;
  if (r.m > 1)
    r.witness_m_minus_1 = solve(a, r.m - 1, r.lambda_star).witness;
}

ExcessMassResult exact_delta(const Atoms& a, std::size_t m)
{
  ExcessMassResult r;
  r.m = m;
  r.method = DeltaMethod::exact_candidates;

  std::vector<double> cand = envelope_breakpoints(a, m, r.evaluations);
  if (m > 1) {
    auto lower = envelope_breakpoints(a, m - 1, r.evaluations);
    cand.insert(cand.end(), lower.begin(), lower.end());
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  if (m == 1) {
    r.delta = 1.0;
    r.lambda_star = cand.empty() ? 1.0 : cand.front();
    r.witness_m.intervals = { { a.x.front(), a.x.back() } };
    return r;
  }
  if (cand.empty()) {
    // no breakpoints: D is constant in lambda
    r.lambda_star = 1.0;
    r.delta = difference_at(a, m, r.lambda_star);
    fill_witnesses(a, r);
    return r;
  }

  std::vector<double> values(cand.size());
  for (std::size_t k = 0; k < cand.size(); ++k)
    values[k] = difference_at(a, m, cand[k]);
  r.evaluations += cand.size();
  const double best = *std::max_element(values.begin(), values.end());
  for (std::size_t k = 0; k < cand.size(); ++k) {
    if (values[k] >= best - 1e-13) {
      r.lambda_star = cand[k];
      r.delta = values[k];
      break;
    }
  }
  fill_witnesses(a, r);
  return r;
}

ExcessMassResult grid_delta(const Atoms& a, std::size_t m, const DeltaOptions& options, Exec exec)
{
  ExcessMassResult r;
  r.m = m;
  r.method = DeltaMethod::grid_refined;
  const double n = static_cast<double>(a.n);
  const double range = a.x.back() - a.x.front();
  double lo = 1.0 / (n * range);
  double hi = n / range;
  std::size_t points = std::max<std::size_t>(options.grid_points, 3);

  double best_lam = lo;
  double best_val = kNegInf;
  double spacing = 0.0;
  for (int round = 0; round <= options.refine_rounds; ++round) {
    std::vector<double> lams(points), vals(points);
    const double step = std::log(hi / lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k)
      lams[k] = lo * std::exp(step * static_cast<double>(k));
    for_each_index(points, exec, [&](std::size_t k) { vals[k] = difference_at(a, m, lams[k]); });
    r.evaluations += points;
    std::size_t arg = 0;
    for (std::size_t k = 1; k < points; ++k)
      if (vals[k] > vals[arg])
        arg = k;
    if (vals[arg] > best_val || (vals[arg] == best_val && lams[arg] < best_lam)) {
      best_val = vals[arg];
      best_lam = lams[arg];
    }
    spacing = lams[std::min(arg + 1, points - 1)] - lams[arg > 0 ? arg - 1 : 0];
    lo = lams[arg > 0 ? arg - 1 : 0];
    hi = lams[std::min(arg + 1, points - 1)];
    // later rounds place 21 points across the bracket: ten times finer
    points = 21;
  }
  r.lambda_star = best_lam;
  r.delta = m == 1 ? 1.0 : best_val;
  // D has slopes bounded by the sample range
  r.tolerance = m == 1 ? 0.0 : range * spacing;
  if (m == 1)
    r.witness_m.intervals = { { a.x.front(), a.x.back() } };
  else
    fill_witnesses(a, r);
  return r;
}

} // namespace

ExcessMassAt empirical_excess_mass_at(const Sample& sample, std::size_t m, double lambda)
{
  if (m < 1)
    throw Error("excess mass order m must be at least 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error("excess mass level lambda must be positive and finite");
  return solve(Atoms(sample), m, lambda);
}

ExcessMassResult delta_m(const Sample& sample,
                         std::size_t m,
                         const DeltaOptions& options,
                         Exec exec)
{
  if (m < 1)
    throw Error("excess mass order m must be at least 1");
  const Atoms a(sample);
  if (sample.degenerate()) {
    ExcessMassResult r;
    r.m = m;
    r.delta = m == 1 ? 1.0 : 0.0;
    r.lambda_star = 1.0;
    r.witness_m.intervals = { { sample.min(), sample.max() } };
    if (m > 1)
      r.witness_m_minus_1 = r.witness_m;
    return r;
  }
  if (sample.size() <= options.n_exact)
    return exact_delta(a, m);
  return grid_delta(a, m, options, exec);
}

std::vector<ExcessMassCurve> excess_mass_curves(const Sample& sample,
                                                std::size_t m_max,
                                                std::span<const double> lambdas,
                                                Exec exec)
{
  if (m_max < 1)
    throw Error("excess mass order m must be at least 1");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0) || !std::isfinite(lambdas[k]))
      throw Error("lambda grid must be positive and finite");
    if (k > 0 && !(lambdas[k] > lambdas[k - 1]))
      throw Error("lambda grid must be strictly ascending");
  }
  const Atoms a(sample);
  std::vector<ExcessMassCurve> curves(m_max);
  for (std::size_t j = 0; j < m_max; ++j) {
    curves[j].m = j + 1;
    curves[j].lambdas.assign(lambdas.begin(), lambdas.end());
    curves[j].values.resize(lambdas.size());
  }
  for_each_index(m_max * lambdas.size(), exec, [&](std::size_t idx) {
    const std::size_t j = idx / lambdas.size();
    const std::size_t k = idx % lambdas.size();
    curves[j].values[k] = solve(a, j + 1, lambdas[k], false).value;
  });
  return curves;
}

namespace {

// int over one grid cell of (f - level)+ for the linear interpolant.
double cell_excess(double a, double b, double level, double dx)
{
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (lo >= level)
    return dx * (0.5 * (a + b) - level);
  if (hi <= level)
    return 0.0;
  const double t = (hi - level) / (hi - lo);
  return 0.5 * dx * t * (hi - level);
}

// where the interpolant on cell k crosses the level
double crossing(std::span<const double> v, std::size_t k, double level, double x0, double dx)
{
  const double a = v[k];
  const double b = v[k + 1];
  const double t = a == b ? 0.5 : (level - a) / (b - a);
  return x0 + dx * (static_cast<double>(k) + std::clamp(t, 0.0, 1.0));
}

// Components of {f > level} with their excess masses, and the deficit
// int (level - f)+ of each valley separating neighbouring components.
struct LevelStructure
{
  std::vector<double> excess;
  std::vector<double> deficit;
  std::vector<Interval> spans;
};

LevelStructure level_structure(std::span<const double> v, double level, double x0, double dx)
{
  LevelStructure out;
  const std::size_t g = v.size();
  bool open = v[0] > level;
  double comp = 0.0;
  double valley = 0.0;
  double start = x0;
  for (std::size_t k = 0; k + 1 < g; ++k) {
    const bool right_above = v[k + 1] > level;
    const double pos = cell_excess(v[k], v[k + 1], level, dx);
    const double neg = cell_excess(-v[k], -v[k + 1], -level, dx);
    if (open && right_above) {
      comp += pos;
    } else if (open) {
      out.excess.push_back(comp + pos);
      out.spans.push_back({ start, crossing(v, k, level, x0, dx) });
      open = false;
      valley = neg;
    } else if (right_above) {
      if (!out.excess.empty())
        out.deficit.push_back(valley + neg);
      open = true;
      comp = pos;
      start = crossing(v, k, level, x0, dx);
    } else {
      valley += neg;
    }
  }
  if (open) {
    out.excess.push_back(comp);
    out.spans.push_back({ start, x0 + dx * static_cast<double>(g - 1) });
  }
  return out;
}

double difference_at_level(std::span<const double> v, double level, double x0, double dx,
                           std::size_t m)
{
  const LevelStructure ls = level_structure(v, level, x0, dx);
  const double upper = best_runs(ls.excess, ls.deficit, m, false).value;
  const double lower = m > 1 ? best_runs(ls.excess, ls.deficit, m - 1, false).value : 0.0;
  return upper - lower;
}

IntervalSet level_witness(const LevelStructure& ls, std::size_t m)
{
  IntervalSet out;
  if (m == 0)
    return out;
  for (const auto& [first, last] : best_runs(ls.excess, ls.deficit, m, true).runs)
    out.intervals.push_back({ ls.spans[first].lo, ls.spans[last].hi });
  return out;
}

} // namespace

GridDelta grid_delta_m(std::span<const double> values,
                       double x0,
                       double dx,
                       std::size_t m,
                       const LevelSearch& search)
{
  if (m < 1)
    throw Error("excess mass order m must be at least 1");
  if (values.size() < 2)
    throw Error("density grid needs at least two points");
  const double fmax = *std::max_element(values.begin(), values.end());

  GridDelta r;
  r.level = 0.0;
  r.delta = difference_at_level(values, 0.0, x0, dx, m);
  r.levels_evaluated = 1;
  if (fmax > 0.0) {
    double lo = 0.0;
    double hi = fmax;
    std::size_t points = std::max<std::size_t>(search.levels, 1);
    for (int round = 0; round <= search.refine_rounds; ++round) {
      // interior points of [lo, hi]
      const double step = (hi - lo) / static_cast<double>(points + 1);
      std::size_t arg = 0;
      double arg_val = kNegInf;
      for (std::size_t k = 1; k <= points; ++k) {
        const double level = lo + step * static_cast<double>(k);
        const double d = difference_at_level(values, level, x0, dx, m);
        if (d > arg_val) {
          arg_val = d;
          arg = k;
        }
      }
      r.levels_evaluated += points;
      const double best_level = lo + step * static_cast<double>(arg);
      if (arg_val > r.delta) {
        r.delta = arg_val;
        r.level = best_level;
      }
      r.level_spacing = step;
      lo = best_level - step;
      hi = best_level + step;
      points = search.refine_points;
    }
  }
  const LevelStructure ls = level_structure(values, r.level, x0, dx);
  r.witness_m = level_witness(ls, m);
  r.witness_m_minus_1 = level_witness(ls, m - 1);
  return r;
}

ExcessMassResult continuous_delta_m(const std::function<double(double)>& density,
                                    double lo,
                                    double hi,
                                    std::size_t m,
                                    std::size_t grid_n,
                                    Exec exec)
{
  if (!(lo < hi))
    throw Error("support must satisfy lo < hi");
  if (grid_n < 1000)
    throw Error("continuous oracle needs grid_n >= 1000");
  const double dx = (hi - lo) / static_cast<double>(grid_n - 1);
  std::vector<double> v(grid_n);
  for_each_index(grid_n, exec, [&](std::size_t k) {
    const double f = density(lo + dx * static_cast<double>(k));
    v[k] = f;
  });
  double mass = 0.0;
  double curvature = 0.0;
  for (std::size_t k = 0; k < grid_n; ++k) {
    if (!std::isfinite(v[k]) || v[k] < 0.0)
      throw Error("density must be finite and nonnegative on the support");
    mass += (k == 0 || k + 1 == grid_n ? 0.5 : 1.0) * v[k];
    if (k > 0 && k + 1 < grid_n)
      curvature = std::max(curvature, std::abs(v[k + 1] - 2.0 * v[k] + v[k - 1]));
  }
  mass *= dx;
  if (mass < 0.99 || mass > 1.01)
    throw Error("unnormalized density");

  const GridDelta g = grid_delta_m(v, lo, dx, m, LevelSearch{});
  ExcessMassResult r;
  r.m = m;
  r.delta = g.delta;
  r.lambda_star = g.level;
  r.witness_m = g.witness_m;
  r.witness_m_minus_1 = g.witness_m_minus_1;
  r.method = DeltaMethod::continuous_grid;
  // linear interpolation error, once for each of the two excess masses, plus
  // the level resolution: D moves by at most (hi - lo) per unit of level
  r.tolerance = (hi - lo) * curvature / 4.0 + (hi - lo) * g.level_spacing;
  r.evaluations = g.levels_evaluated;
  return r;
}

} // namespace densityshape

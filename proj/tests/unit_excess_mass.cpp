#include "densityshape/excess_mass.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace densityshape;
using testing_support::brute_delta;
using testing_support::brute_excess_mass;
using testing_support::Component;
using testing_support::mixture_pdf;
using testing_support::normal_draws;

namespace {

// small samples with ties: values on a coarse lattice
std::vector<double> lattice_draws(std::size_t n, StreamRng& rng)
{
  std::uniform_int_distribution<int> pick(0, 9);
  std::vector<double> x(n);
  for (auto& v : x)
    v = 0.5 * pick(rng);
  return x;
}

} // namespace

TEST(EmpiricalExcessMass, HandValues)
{
  const Sample two({ 0.0, 1.0 });
  EXPECT_NEAR(empirical_excess_mass_at(two, 1, 0.25).value, 0.75, 1e-15);
  EXPECT_NEAR(empirical_excess_mass_at(two, 1, 2.0).value, 0.5, 1e-15);
  EXPECT_NEAR(empirical_excess_mass_at(two, 2, 0.25).value, 1.0, 1e-15);
  const auto at = empirical_excess_mass_at(Sample({ 0.0, 0.0, 5.0 }), 1, 10.0);
  EXPECT_NEAR(at.value, 2.0 / 3.0, 1e-15);
  ASSERT_EQ(at.witness.size(), 1u);
  EXPECT_EQ(at.witness.intervals[0].lo, 0.0);
  EXPECT_EQ(at.witness.intervals[0].hi, 0.0);
  EXPECT_EQ(at.captured, 2u);
  EXPECT_THROW(empirical_excess_mass_at(two, 0, 1.0), Error);
  EXPECT_THROW(empirical_excess_mass_at(two, 1, 0.0), Error);
}

TEST(EmpiricalExcessMass, MatchesExhaustiveEnumeration)
{
  StreamRng rng(1, 0);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  std::uniform_int_distribution<std::size_t> order(1, 3);
  std::uniform_real_distribution<double> level(-3.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Sample s(lattice_draws(size(rng), rng));
    const std::size_t m = order(rng);
    const double lambda = std::pow(10.0, level(rng));
    const ExcessMassAt at = empirical_excess_mass_at(s, m, lambda);
    ASSERT_NEAR(at.value, brute_excess_mass(s, m, lambda), 1e-12) << "trial " << trial;
    ASSERT_LE(at.witness.size(), m);
    // the witness attains the value it reports
    double length = 0.0;
    std::size_t captured = 0;
    for (const auto& iv : at.witness.intervals) {
      length += iv.length();
      for (double v : s.values())
        captured += v >= iv.lo && v <= iv.hi;
    }
    ASSERT_EQ(captured, at.captured);
    ASSERT_NEAR(static_cast<double>(captured) / s.size() - lambda * length, at.value, 1e-12);
  }
}

TEST(DeltaM, HandValuesAndConventions)
{
  EXPECT_EQ(delta_m(Sample({ 0.0, 1.0 }), 2).delta, 0.5);
  EXPECT_EQ(delta_m(Sample({ 0.0, 1.0 }), 1).delta, 1.0);
  EXPECT_EQ(delta_m(Sample({ 3.0 }), 1).delta, 1.0);
  EXPECT_EQ(delta_m(Sample({ 3.0 }), 2).delta, 0.0);
  EXPECT_EQ(delta_m(Sample({ 2.0, 2.0, 2.0 }), 3).delta, 0.0);
  EXPECT_NEAR(delta_m(Sample({ 0.0, 1.0, 2.0 }), 3).delta, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(delta_m(Sample({ 0.0, 1.0 }), 0), Error);
  EXPECT_EQ(delta_m(Sample({ 0.0, 1.0 }), 2).method, DeltaMethod::exact_candidates);
}

TEST(DeltaM, MatchesExhaustiveBreakpointSearch)
{
  StreamRng rng(2, 0);
  std::uniform_int_distribution<std::size_t> size(2, 6);
  std::uniform_int_distribution<std::size_t> order(2, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const Sample s(lattice_draws(size(rng), rng));
    const std::size_t m = order(rng);
    const ExcessMassResult r = delta_m(s, m);
    ASSERT_NEAR(r.delta, brute_delta(s, m), 1e-12) << "trial " << trial;
    if (!s.degenerate()) {
      const double at_star = empirical_excess_mass_at(s, m, r.lambda_star).value -
                             empirical_excess_mass_at(s, m - 1, r.lambda_star).value;
      ASSERT_NEAR(at_star, r.delta, 1e-12);
    }
  }
}

TEST(DeltaM, GridPathBracketsExact)
{
  DeltaOptions grid;
  grid.n_exact = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Sample s(normal_draws(150, seed));
    const ExcessMassResult exact = delta_m(s, 2);
    const ExcessMassResult approx = delta_m(s, 2, grid);
    EXPECT_EQ(approx.method, DeltaMethod::grid_refined);
    EXPECT_LE(approx.delta, exact.delta + 1e-12);
    EXPECT_GE(approx.delta, exact.delta - approx.tolerance - 1e-12);
  }
}

TEST(DeltaM, InvariantUnderAffineMaps)
{
  const Sample s(normal_draws(120, 4));
  for (std::size_t m : { 2u, 3u }) {
    const double d = delta_m(s, m).delta;
    EXPECT_NEAR(delta_m(s.affine(7.0, -3.0), m).delta, d, 1e-12);
    EXPECT_NEAR(delta_m(s.affine(0.01, 100.0), m).delta, d, 1e-12);
  }
  // E_m(lambda) for the scaled sample at lambda / c is unchanged
  const double c = 2.5;
  EXPECT_NEAR(empirical_excess_mass_at(s.affine(c, 1.0), 2, 0.4 / c).value,
              empirical_excess_mass_at(s, 2, 0.4).value, 1e-12);
}

TEST(DeltaM, SerialEqualsParallelOnGridPath)
{
  DeltaOptions grid;
  grid.n_exact = 0;
  const Sample s(normal_draws(400, 7));
  EXPECT_EQ(delta_m(s, 2, grid, Exec::serial).delta, delta_m(s, 2, grid, Exec::parallel).delta);
}

TEST(ExcessMassCurves, MonotoneAndPointwise)
{
  const Sample s(normal_draws(60, 3));
  std::vector<double> lambdas;
  for (int k = 0; k < 30; ++k)
    lambdas.push_back(0.01 * std::pow(1.3, k));
  const auto curves = excess_mass_curves(s, 3, lambdas);
  ASSERT_EQ(curves.size(), 3u);
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_EQ(curves[m].m, m + 1);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      EXPECT_NEAR(curves[m].values[k], empirical_excess_mass_at(s, m + 1, lambdas[k]).value, 1e-12);
      if (k > 0)
        EXPECT_LE(curves[m].values[k], curves[m].values[k - 1] + 1e-15);
      if (m > 0)
        EXPECT_GE(curves[m].values[k], curves[m - 1].values[k] - 1e-15);
    }
  }
  const std::vector<double> bad{ 1.0, 0.5 };
  EXPECT_THROW(excess_mass_curves(s, 2, bad), Error);
}

TEST(ContinuousDelta, UnimodalIsNearZero)
{
  const std::vector<Component> normal{ { 1.0, 0.0, 1.0 } };
  const auto r = continuous_delta_m([&](double x) { return mixture_pdf(normal, x); }, -8.0, 8.0, 2);
  EXPECT_EQ(r.method, DeltaMethod::continuous_grid);
  EXPECT_LT(r.delta, 1e-3);
}

TEST(ContinuousDelta, SymmetricMixtureRegression)
{
  const std::vector<Component> mix{ { 0.5, 0.0, 1.0 }, { 0.5, 6.0, 1.0 } };
  const auto r = continuous_delta_m([&](double x) { return mixture_pdf(mix, x); }, -8.0, 14.0, 2);
  EXPECT_NEAR(r.delta, 0.186583167596, 1e-6);
  EXPECT_GE(r.tolerance, 0.0);
  ASSERT_EQ(r.witness_m.size(), 2u);
  EXPECT_LT(r.witness_m.intervals[0].hi, 3.0);
  EXPECT_GT(r.witness_m.intervals[1].lo, 3.0);
}

TEST(ContinuousDelta, EmpiricalConvergesToOracle)
{
  const std::vector<Component> mix{ { 0.5, 0.0, 1.0 }, { 0.5, 6.0, 1.0 } };
  StreamRng rng(11, 0);
  const Sample s(testing_support::mixture_draws(20000, mix, rng));
  EXPECT_NEAR(delta_m(s, 2).delta, 0.186583167596, 0.02);
}

TEST(ContinuousDelta, TrimodalThirdModeSemantics)
{
  // Delta_3 measures the third mode: close to zero for two modes, clearly
  // positive for three, and growing as the third bump separates.
  const auto delta3 = [](double third) {
    const std::vector<Component> mix{ { 1.0 / 3, 0.0, 1.0 }, { 1.0 / 3, 6.0, 1.0 }, { 1.0 / 3, third, 1.0 } };
    return continuous_delta_m([&](double x) { return mixture_pdf(mix, x); }, -8.0, third + 8.0, 3).delta;
  };
  const std::vector<Component> two{ { 0.5, 0.0, 1.0 }, { 0.5, 6.0, 1.0 } };
  const double bimodal = continuous_delta_m([&](double x) { return mixture_pdf(two, x); }, -8.0, 14.0, 3).delta;
  EXPECT_LT(bimodal, 1e-3);
  const double near = delta3(9.0), far = delta3(12.0);
  EXPECT_GT(near, 0.01);
  EXPECT_GT(far, near);

  // density on each side of the boundary: bumps at 0, 6 and a third bump whose
  // modality appears as it separates past 2 sd
  const auto modes_of = [](double third) {
    const std::vector<Component> mix{ { 0.5, 0.0, 1.0 }, { 0.25, 6.0, 1.0 }, { 0.25, third, 1.0 } };
    std::size_t count = 0;
    double prev = mixture_pdf(mix, -8.0);
    double prev_slope = 1.0;
    for (int i = 1; i <= 40000; ++i) {
      const double x = -8.0 + (third + 16.0) * i / 40000.0;
      const double f = mixture_pdf(mix, x);
      const double slope = f - prev;
      count += prev_slope > 0.0 && slope <= 0.0;
      if (slope != 0.0)
        prev_slope = slope;
      prev = f;
    }
    return std::pair{ count, continuous_delta_m([&](double x) { return mixture_pdf(mix, x); }, -8.0, third + 8.0, 3).delta };
  };
  const auto [below_modes, below_delta] = modes_of(7.8);
  const auto [above_modes, above_delta] = modes_of(8.5);
  EXPECT_EQ(below_modes, 2u);
  EXPECT_EQ(above_modes, 3u);
  EXPECT_LT(below_delta, 1e-3);
  EXPECT_GT(above_delta, below_delta);
}

TEST(ContinuousDelta, RejectsUnnormalized)
{
  try {
    continuous_delta_m([](double) { return 1.0; }, 0.0, 2.0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "unnormalized density");
  }
}

TEST(GridDelta, TwoSpikes)
{
  // two unit triangles 10 apart: one component carries (1-l)^2 above level
  // l, the valley costs 8l + l^2, so D peaks at l = 0.1
  std::vector<double> v(21, 0.0);
  v[5] = 1.0;
  v[15] = 1.0;
  const GridDelta g = grid_delta_m(v, 0.0, 1.0, 2);
  const double l = 0.1;
  EXPECT_NEAR(g.level, l, 1e-3);
  EXPECT_NEAR(g.delta, (1 - l) * (1 - l), 1e-4);
  EXPECT_EQ(g.witness_m.size(), 2u);
}

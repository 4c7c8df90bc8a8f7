#pragma once

#include "densityshape/execution.hpp"
#include "densityshape/sample.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace densityshape {

struct Interval
{
  double lo;
  double hi;
  double length() const { return hi - lo; }
};

//! Disjoint closed intervals in ascending order. Degenerate [x, x] intervals
//! are allowed and capture the multiplicity of x.
struct IntervalSet
{
  std::vector<Interval> intervals;

  std::size_t size() const { return intervals.size(); }
  double total_length() const;
};

//! Value of sup over at most m disjoint intervals of
//!   sum_j { F_n(L_j) - lambda |L_j| }
//! together with one maximising interval set.
struct ExcessMassAt
{
  double value = 0.0;
  IntervalSet witness;
  std::size_t captured = 0; // observations inside the witness
};

ExcessMassAt empirical_excess_mass_at(const Sample& sample, std::size_t m, double lambda);

enum class DeltaMethod
{
  exact_candidates,
  grid_refined,
  continuous_grid
};

std::string_view to_string(DeltaMethod method);

struct ExcessMassResult
{
  std::size_t m = 1;
  double delta = 0.0;
  double lambda_star = 0.0;
  IntervalSet witness_m;
  IntervalSet witness_m_minus_1;
  DeltaMethod method = DeltaMethod::exact_candidates;
  //! Bound on how far delta may sit below the true supremum: 0 for the
  //! exact method, a Lipschitz bound for the grid search, an interpolation
  //! bound for the continuous oracle.
  double tolerance = 0.0;
  std::size_t evaluations = 0; // level or lambda evaluations performed
};

struct DeltaOptions
{
  //! Samples up to this size use the exact breakpoint search.
  std::size_t n_exact = 20000;
  std::size_t grid_points = 512;
  int refine_rounds = 3;
};

//! Delta_m = sup_lambda { E_m(lambda) - E_{m-1}(lambda) } for the empirical
//! distribution, with E_0 = 0. Ties in lambda go to the smallest maximiser.
//! For m = 1 delta is 1 (attained as lambda -> 0); lambda_star is then the
//! smallest breakpoint of E_1.
ExcessMassResult delta_m(const Sample& sample,
                         std::size_t m,
                         const DeltaOptions& options = {},
                         Exec exec = Exec::serial);

struct ExcessMassCurve
{
  std::size_t m = 1;
  std::vector<double> lambdas;
  std::vector<double> values;
};

//! E_1 .. E_{m_max} evaluated on a shared ascending grid of positive levels.
std::vector<ExcessMassCurve> excess_mass_curves(const Sample& sample,
                                                std::size_t m_max,
                                                std::span<const double> lambdas,
                                                Exec exec = Exec::serial);

//! Delta_m of gridded density values, treating the density as the linear
//! interpolant of the grid and zero outside it. At a level l the components
//! of {f > l} carry excess int (f - l)+ and the valleys between them a
//! deficit int (l - f)+; E_m(l) is the best choice of at most m runs of
//! consecutive components. D(l) = E_m(l) - E_{m-1}(l) is searched on a
//! uniform level grid over (0, max f) with local refinement, plus l = 0.
struct LevelSearch
{
  std::size_t levels = 512;
  int refine_rounds = 3;
  std::size_t refine_points = 19; // spread across the incumbent's bracket
};

struct GridDelta
{
  double delta = 0.0;
  double level = 0.0;
  IntervalSet witness_m;
  IntervalSet witness_m_minus_1;
  std::size_t levels_evaluated = 0;
  double level_spacing = 0.0; // final level resolution
};

GridDelta grid_delta_m(std::span<const double> values,
                       double x0,
                       double dx,
                       std::size_t m,
                       const LevelSearch& search = {});

//! Oracle for Delta_m of a known density on [lo, hi]. Throws
//! "unnormalized density" if the trapezoid integral leaves [0.99, 1.01].
ExcessMassResult continuous_delta_m(const std::function<double(double)>& density,
                                    double lo,
                                    double hi,
                                    std::size_t m,
                                    std::size_t grid_n = 100000,
                                    Exec exec = Exec::parallel);

} // namespace densityshape

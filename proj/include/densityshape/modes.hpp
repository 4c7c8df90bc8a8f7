#pragma once

#include "densityshape/density.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace densityshape {

struct SearchInterval
{
  double lo;
  double hi;
};

struct ModeOptions
{
  //! Unset means [min(X) - 3h, max(X) + 3h]; outermost bumps then extend to
  //! +-infinity when their mass is measured.
  std::optional<SearchInterval> interval;
  //! Modes whose bump mass is below the floor are dropped. Negative selects
  //! the default 1/n of the sample being analysed.
  double tail_mass_floor = -1.0;
  std::size_t max_grid = std::size_t{ 1 } << 20;
};

//! Local maxima of a density estimate.
struct ModeReport
{
  std::size_t count = 0;
  std::vector<double> modes;     // ascending
  std::vector<double> antimodes; // ascending, interleaved with modes
  double lo = 0.0;
  double hi = 0.0;
  std::size_t excluded_tail_modes = 0;
  double tail_mass_floor = 0.0;
  std::size_t grid_points = 0;
};

//! Counts the downcrossings of zero by f' on a grid that doubles until the
//! raw count is unchanged across two consecutive refinements, then bisects
//! each crossing to 1e-8 (hi - lo). Throws "unresolved mode structure" when
//! the grid cap is reached first.
ModeReport count_modes(const DensityEstimate& est,
                       const ModeOptions& options = {},
                       Exec exec = Exec::serial);

struct ModeCountDistribution
{
  std::map<std::size_t, double> probs;
  std::size_t replicates = 0;    // B
  std::size_t failures = 0;      // replicates whose count could not be resolved
  std::size_t resample_size = 0; // m
  double bandwidth = 0.0;
  std::uint64_t seed = 0;
  double tail_mass_floor = -1.0;
  std::vector<std::size_t> counts; // per successful replicate, index order
};

struct ModeBootstrapOptions
{
  std::size_t replicates = 200;
  std::size_t resample_size = 0; // 0 means n
  double tail_mass_floor = -1.0;
  std::uint64_t seed = 0;
};

//! Mode-count distribution of the estimate recomputed, with the same h, on B
//! resamples of size m drawn with replacement.
ModeCountDistribution bootstrap_mode_distribution(const Sample& sample,
                                                  Bandwidth h,
                                                  const ModeBootstrapOptions& options,
                                                  Exec exec = Exec::parallel);

struct ModeLikelihoodReport
{
  ModeReport observed;
  ModeCountDistribution distribution;
  //! (k, P(k modes)) sorted by probability, largest first; ties by k.
  std::vector<std::pair<std::size_t, double>> table;
};

ModeLikelihoodReport mode_likelihood_report(const Sample& sample,
                                            Bandwidth h,
                                            const ModeBootstrapOptions& options,
                                            Exec exec = Exec::parallel);

namespace detail {

// Critical points found on a grid, before any tail exclusion.
struct GridCritical
{
  std::vector<double> modes;
  std::vector<double> antimodes;
};

//! Drops modes whose bump mass is below the floor. `mass` gives the
//! estimate's mass over (a, b); `height` its value at a point. Excluded
//! modes merge through their shallower flanking antimode. Returns the number
//! of excluded modes.
template<class Mass, class Height>
std::size_t apply_tail_floor(std::vector<double>& modes,
                             std::vector<double>& antimodes,
                             double left_end,
                             double right_end,
                             double floor,
                             Mass&& mass,
                             Height&& height);

} // namespace detail

} // namespace densityshape

#include "densityshape/detail/tail_floor.hpp"

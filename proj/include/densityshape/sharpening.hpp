#pragma once

#include "densityshape/bootstrap.hpp"
#include "densityshape/density.hpp"
#include "densityshape/modes.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace densityshape {

struct AnnealConfig
{
  //! Move scale s; 0 means range / 1000.
  double step = 0.0;
  std::size_t restarts = 100;
  std::size_t max_sweeps = 2000;
  //! Stop when |Delta - target| < tolerance; 0 means tolerance = s.
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  //! Grid on which Delta_m(f_Y) is tracked: [min - 4h, max + 4h].
  std::size_t grid_points = 256;
  //! Fine enough that single-point moves register; coarser searches stall.
  LevelSearch level_search{ 64, 6, 9 };
  //! Mode counting used to confirm the mode-count stage.
  double tail_mass_floor = -1.0;
};

//! Per-restart record. `trace` holds |Delta - target| (or the mode-count
//! penalty) after every accepted move.
struct RestartLog
{
  bool converged = false;
  double distance = 0.0;
  double achieved = 0.0;
  std::size_t sweeps = 0;
  std::size_t accepted_moves = 0;
  std::vector<double> trace;
};

struct SharpenedSample
{
  //! y[i] is the moved copy of source[i] (source in sorted order).
  std::vector<double> y;
  Sample source{ std::vector<double>{ 0.0 } };
  double distance = 0.0; // sum_i (source_i - y_i)^2
  double achieved_delta = 0.0;
  double target_delta = 0.0;
  double tolerance = 0.0;
  double step = 0.0;
  std::size_t achieved_modes = 0;
  std::size_t restarts_used = 0;
  std::size_t accepted_moves = 0;
  std::size_t chosen_restart = 0;
  std::vector<RestartLog> restarts;

  Sample sorted() const { return Sample(y); }
};

//! Moves points until f_Z has exactly m modes, keeping sum (X_i - Z_i)^2
//! small. Acceptance is greedy on (|modes - m|, shape guide); the guide is
//! the depth of the shallowest modes when there are too many and the
//! flatness of the flattest shoulders when there are too few. Throws
//! "mode-count constraint unreachable" when no restart gets there.
SharpenedSample sharpen_to_mode_count(const Sample& x,
                                      Bandwidth h,
                                      std::size_t m,
                                      const AnnealConfig& config,
                                      Exec exec = Exec::parallel);

//! Greedy annealing towards Delta_m(f_Y) = target. f~ = f_Z stays fixed.
//! Below target points move by y += s z exp(-f~(y)/f~max) (sharper);
//! above it by y += s z exp((f~(y) - f~max)/f~max) (more diffuse). A move is
//! kept unless it takes Delta further from the target. The closest of the
//! converged restarts wins.
SharpenedSample sharpen_to_excess_mass(const Sample& z,
                                       Bandwidth h,
                                       std::size_t m,
                                       double target,
                                       const AnnealConfig& config,
                                       Exec exec = Exec::parallel);

//! Delta_m of the estimate on the sharpening grid, computed from scratch.
double estimate_delta_m(const Sample& sample, Bandwidth h, std::size_t m, const AnnealConfig& config,
                        double lo, double hi);

struct QuantileCurve
{
  double alpha;
  double target;
  SharpenedSample sharpened;
};

struct QuantileCurveRun
{
  Bandwidth h{ 1.0 };
  bool bandwidth_fell_back = false;
  std::size_t observed_modes = 0;
  bool mode_stage_ran = false;
  SharpenedSample mode_stage; // Z; equals X when no sharpening was needed
  QuantileTargets targets;
  std::vector<QuantileCurve> curves;
};

//! Fix h (SJ on X unless given), sharpen X to m modes if needed, bootstrap
//! the Delta_m quantile targets on Z and sharpen Z to each of them.
QuantileCurveRun quantile_curve_pipeline(const Sample& x,
                                         std::size_t m,
                                         const std::vector<double>& alphas,
                                         std::optional<Bandwidth> h,
                                         const ResamplePlan& plan,
                                         const AnnealConfig& config,
                                         const DeltaOptions& delta_options = {},
                                         Exec exec = Exec::parallel);

} // namespace densityshape

#pragma once

#include "densityshape/density.hpp"
#include "densityshape/rng.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace densityshape {

//! Brownian bridge sampled on a uniform grid of [0, 1].
struct BridgePath
{
  std::vector<double> grid;
  std::vector<double> values; // values.front() == values.back() == 0
};

//! Cumulative Gaussian increments V, pinned as V(t) - t V(1).
BridgePath simulate_bridge(std::size_t grid_n, StreamRng& rng);

//! Parameters of the local limit processes at the mode x0:
//!   xi(y)  = f(x0)^(1/2) int K''(u) W(y + u) du
//!   eta(y) = C0^(-3/2) xi(y) + C0 y f''(x0)
//! y_range = 0 picks Y automatically (see resolved_y_range).
struct LimitConfig
{
  double c0 = 1.0;
  double f_x0 = kInvSqrt2Pi;
  double f2_x0 = -kInvSqrt2Pi;
  double y_range = 0.0;
  double y_step = 0.02;
  double u_trunc = 8.0;
  std::uint64_t seed = 0;
};

void validate(const LimitConfig& cfg);

//! Y large enough that the drift C0 |f''| Y exceeds six noise standard
//! deviations of C0^(-3/2) xi, at least 6 and at most 200, rounded to the
//! y step.
double resolved_y_range(const LimitConfig& cfg);

//! Points a bridge needs so that its grid, mapped to the (y + u) axis,
//! has spacing y_step and covers [-(Y + T + 1), Y + T + 1].
std::size_t bridge_points(const LimitConfig& cfg);

//! A process sampled on the y grid.
struct ProcessPath
{
  std::vector<double> y;
  std::vector<double> values;
};

//! Trapezoid convolution of K'' with the bridge. The bridge time t is
//! identified with s = y + u through t = 1/2 + s/L, L = 2(Y + T + 1), and the
//! bridge is scaled by sqrt(L) so that s carries unit variance per unit.
ProcessPath xi_process(const BridgePath& bridge, const LimitConfig& cfg);

//! eta when xi_star is null, eta* = C0^(-3/2)(xi + xi*) + C0 y f'' otherwise.
ProcessPath eta_process(const ProcessPath& xi, const ProcessPath* xi_star, const LimitConfig& cfg);

struct Downcrossings
{
  std::size_t count = 0;
  bool degenerate = false; // every value was exactly zero
};

//! Transitions from a positive value to a nonpositive one. Exact zeros are
//! skipped forward to the next nonzero value; a positive run followed only by
//! zeros up to the end counts once.
Downcrossings count_downcrossings(std::span<const double> values);

struct LimitModeDistribution
{
  std::map<std::size_t, double> probs;
  std::vector<std::size_t> counts; // per rep
  std::size_t reps = 0;
  double y_range = 0.0;
  std::size_t degenerate = 0;
};

//! Distribution of the number of downcrossings N of eta over fresh bridges.
LimitModeDistribution limit_mode_distribution(const LimitConfig& cfg,
                                              std::size_t reps,
                                              Exec exec = Exec::parallel);

//! Distribution of N* given one realised W (drawn from stream
//! `conditioning_index`), over fresh W*.
LimitModeDistribution conditional_star_distribution(const LimitConfig& cfg,
                                                    std::uint64_t conditioning_index,
                                                    std::size_t reps,
                                                    Exec exec = Exec::parallel);

double total_variation(const std::map<std::size_t, double>& p, const std::map<std::size_t, double>& q);

//! Limit law of sqrt(n)(Delta_2 - Delta_2): Z = N_{2I} - N_3, with
//! (N_2, N_3, N_4) centred normal, cov(N_i, N_j) = F_i (1 - F_j) for i <= j,
//! and I = 1 when sup{B_2(u) - u^2} / sup{B_4(u) - u^2} < |f'_2 / f'_4|^(1/3)
//! for independent two-sided Brownian motions B_2, B_4; I = 2 otherwise.
struct ZLimitConfig
{
  double F2 = 0.2;
  double F3 = 0.5;
  double F4 = 0.8;
  double fprime2 = 1.0;
  double fprime4 = -1.0;
  std::size_t reps = 10000;
  double u_trunc = 8.0;
  double u_step = 0.01;
  std::uint64_t seed = 0;
};

struct ZLimitSamples
{
  std::vector<double> z;
  std::vector<int> indicator; // I per rep
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double standard_error = 0.0;
};

ZLimitSamples excess_mass_limit_samples(const ZLimitConfig& cfg, Exec exec = Exec::parallel);

//! Base density with a mode at 0 and a shoulder at 1 on [-1, b]:
//!   f(x) = k (Q(-1) - Q(x)),  Q(t) = t^4/4 - 2t^3/3 + t^2/2,
//! so f'(x) = -k x (x - 1)^2. b solves Q(b) = Q(-1); k normalises.
class ShoulderDensity
{
public:
  ShoulderDensity();

  double lo() const { return -1.0; }
  double hi() const { return b_; }
  double mode() const { return 0.0; }
  double shoulder() const { return 1.0; }
  double norm() const { return k_; }

  double pdf(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  double d3(double x) const;
  double sample(StreamRng& rng) const;

private:
  double b_;
  double k_;
  double peak_;
};

//! psi(u) = (315/256)(1 - u^2)^4 on [-1, 1]: symmetric, C^3, unique mode.
double bump_kernel(double u);
double bump_kernel_d1(double u);
double bump_kernel_d2(double u);

//! f_n(x) = {f(x) + h1^3 psi((x - x1)/h1)} / (1 + h1^4).
class BumpDensity
{
public:
  //! Checks that psi integrates to 1 (to 1e-8) and satisfies the unique
  //! crossing condition against the base shoulder; throws otherwise.
  BumpDensity(ShoulderDensity base, double h1);

  const ShoulderDensity& base() const { return base_; }
  double h1() const { return h1_; }
  double pdf(double x) const;
  double d1(double x) const;
  double sample(StreamRng& rng) const;

  //! Local maxima of the exact density, from a sign scan of f_n' with the
  //! given number of grid points over the support.
  std::size_t exact_mode_count(std::size_t grid = 200001) const;

private:
  ShoulderDensity base_;
  double h1_;
};

struct BumpExperimentRow
{
  double h;
  double bump_detection;      // P(count == 2) on f_n samples
  double base_unimodal;       // P(count == 1) on f samples
  double shoulder_spurious;   // P(count >= 2 with a mode within 3h of x1) on f samples
};

struct BumpExperiment
{
  double h1;
  std::size_t n;
  std::size_t reps;
  std::vector<BumpExperimentRow> rows;
};

BumpExperiment bump_detection_experiment(double h1,
                                         std::size_t n,
                                         const std::vector<double>& bandwidths,
                                         std::size_t reps,
                                         std::uint64_t seed,
                                         Exec exec = Exec::parallel);

} // namespace densityshape

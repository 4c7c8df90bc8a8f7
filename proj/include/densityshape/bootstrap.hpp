#pragma once

#include "densityshape/excess_mass.hpp"
#include "densityshape/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace densityshape {

struct ResamplePlan
{
  std::size_t replicates = 400; // B
  std::size_t resample_size = 0; // 0 means n
  std::uint64_t seed = 0;
};

//! m_sub draws with replacement, sorted. Consumes m_sub outputs of `rng`.
Sample resample(const Sample& sample, std::size_t m_sub, StreamRng& rng);

struct BootstrapDistribution
{
  std::string statistic;
  std::vector<double> values; // ascending
  std::size_t failures = 0;
  ResamplePlan plan;
};

//! Delta_m recomputed on B resamples. Replicate b draws from stream (seed, b).
BootstrapDistribution bootstrap_delta_distribution(const Sample& sample,
                                                   std::size_t m,
                                                   const ResamplePlan& plan,
                                                   const DeltaOptions& options = {},
                                                   Exec exec = Exec::parallel);

struct QuantileEstimate
{
  double alpha;
  double t_hat;
};

//! Smallest replicate value t with empirical CDF(t) >= alpha, i.e.
//! values[ceil(alpha B) - 1].
QuantileEstimate percentile_quantile(const BootstrapDistribution& dist, double alpha);

struct QuantileTargets
{
  BootstrapDistribution distribution;
  std::vector<QuantileEstimate> targets; // in the order the alphas were given
};

QuantileTargets delta_quantile_targets(const Sample& sample,
                                       std::size_t m,
                                       const ResamplePlan& plan,
                                       const std::vector<double>& alphas,
                                       const DeltaOptions& options = {},
                                       Exec exec = Exec::parallel);

} // namespace densityshape

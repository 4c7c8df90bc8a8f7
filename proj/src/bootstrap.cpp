#include "densityshape/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace densityshape {

Sample resample(const Sample& sample, std::size_t m_sub, StreamRng& rng)
{
  if (m_sub < 1 || m_sub > sample.size())
    throw Error("resample size must satisfy 1 <= m <= n");
  std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
  std::vector<double> out(m_sub);
  for (auto& v : out)
    v = sample[pick(rng)];
  return Sample(std::move(out));
}

BootstrapDistribution bootstrap_delta_distribution(const Sample& sample,
                                                   std::size_t m,
                                                   const ResamplePlan& plan,
                                                   const DeltaOptions& options,
                                                   Exec exec)
{
  if (plan.replicates < 1)
    throw Error("number of bootstrap replicates must be at least 1");
  const std::size_t m_sub = plan.resample_size == 0 ? sample.size() : plan.resample_size;
  if (m_sub < 1 || m_sub > sample.size())
    throw Error("resample size must satisfy 1 <= m <= n");

  const double failed = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values(plan.replicates, failed);
  for_each_index(plan.replicates, exec, [&](std::size_t b) {
    StreamRng rng(plan.seed, b);
    try {
      values[b] = delta_m(resample(sample, m_sub, rng), m, options, Exec::serial).delta;
    } catch (const Error&) {
      values[b] = failed;
    }
  });

  BootstrapDistribution dist;
  dist.statistic = "delta_" + std::to_string(m);
  dist.plan = plan;
  dist.plan.resample_size = m_sub;
  for (double v : values) {
    if (std::isnan(v))
      ++dist.failures;
    else
      dist.values.push_back(v);
  }
  std::sort(dist.values.begin(), dist.values.end());
  return dist;
}

QuantileEstimate percentile_quantile(const BootstrapDistribution& dist, double alpha)
{
  if (dist.values.empty())
    throw Error("bootstrap distribution has no replicate values");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error("alpha must lie in (0, 1)");
  const double b = static_cast<double>(dist.values.size());
  // the small offset keeps products like 0.9 * 400 from rounding up a rank
  const double rank = std::ceil(alpha * b - 1e-9);
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, b)) - 1;
  return { alpha, dist.values[idx] };
}

QuantileTargets delta_quantile_targets(const Sample& sample,
                                       std::size_t m,
                                       const ResamplePlan& plan,
                                       const std::vector<double>& alphas,
                                       const DeltaOptions& options,
                                       Exec exec)
{
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0))
      throw Error("alpha must lie in (0, 1)");
  QuantileTargets out;
  out.distribution = bootstrap_delta_distribution(sample, m, plan, options, exec);
  for (double a : alphas)
    out.targets.push_back(percentile_quantile(out.distribution, a));
  return out;
}

} // namespace densityshape

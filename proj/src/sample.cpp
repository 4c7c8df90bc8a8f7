#include "densityshape/sample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace densityshape {

Sample::Sample(std::vector<double> values)
  : values_(std::move(values))
{
  if (values_.empty())
    throw Error("empty sample");
  for (double v : values_)
    if (!std::isfinite(v))
      throw Error("sample contains a non-finite value");
  std::sort(values_.begin(), values_.end());
}

Sample Sample::affine(double scale, double shift) const
{
  if (!(scale > 0.0))
    throw Error("affine scale must be positive");
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(),
                 [&](double v) { return scale * v + shift; });
  return Sample(std::move(out));
}

Bandwidth::Bandwidth(double h)
  : h_(h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error("bandwidth must be positive and finite");
}

double sample_sd(const Sample& sample)
{
  const auto x = sample.values();
  const double n = static_cast<double>(x.size());
  if (x.size() < 2)
    return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

double sample_quantile(const Sample& sample, double p)
{
  const auto x = sample.values();
  const double pos = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

} // namespace densityshape

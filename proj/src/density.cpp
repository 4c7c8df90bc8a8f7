#include "densityshape/density.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace densityshape {

namespace {

// |u| beyond this makes exp(-u^2/2) underflow to exactly zero.
constexpr double kCutoff = 40.0;

double phi4(double u)
{
  const double u2 = u * u;
  return (u2 * u2 - 6.0 * u2 + 3.0) * gauss_kernel(u);
}

double phi6(double u)
{
  const double u2 = u * u;
  return (u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0) * gauss_kernel(u);
}

// (1/(n(n-1)g^(r+1))) sum_{i,j} phi_r((X_i - X_j)/g), diagonal included.
template<class Phi>
double functional_estimate(std::span<const double> x, double g, int r, Phi phi,
                           Exec exec)
{
  const std::size_t n = x.size();
  std::vector<double> partial(n, 0.0);
  for_each_index(n, exec, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double u = (x[j] - x[i]) / g;
      if (u > kCutoff)
        break;
      s += phi(u);
    }
    partial[i] = s;
  });
  const double off = std::accumulate(partial.begin(), partial.end(), 0.0);
  const double nn = static_cast<double>(n);
  const double total = 2.0 * off + nn * phi(0.0);
  return total / (nn * (nn - 1.0) * std::pow(g, r + 1));
}

} // namespace

DensityEstimate::DensityEstimate(Sample sample, Bandwidth h)
  : sample_(std::move(sample))
  , h_(h.value())
{}

std::pair<std::size_t, std::size_t> DensityEstimate::window(double x) const
{
  const auto v = sample_.values();
  const auto lo = std::lower_bound(v.begin(), v.end(), x - kCutoff * h_);
  const auto hi = std::upper_bound(lo, v.end(), x + kCutoff * h_);
  return { static_cast<std::size_t>(lo - v.begin()),
           static_cast<std::size_t>(hi - v.begin()) };
}

double DensityEstimate::eval(double x) const
{
  const auto v = sample_.values();
  const auto [lo, hi] = window(x);
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i)
    s += gauss_kernel((x - v[i]) / h_);
  return s / (static_cast<double>(v.size()) * h_);
}

double DensityEstimate::derivative(double x, int order) const
{
  if (order != 1 && order != 2)
    throw Error("derivative order must be 1 or 2");
  const auto v = sample_.values();
  const auto [lo, hi] = window(x);
  double s = 0.0;
  if (order == 1) {
    for (std::size_t i = lo; i < hi; ++i)
      s += gauss_kernel_d1((x - v[i]) / h_);
    return s / (static_cast<double>(v.size()) * h_ * h_);
  }
  for (std::size_t i = lo; i < hi; ++i)
    s += gauss_kernel_d2((x - v[i]) / h_);
  return s / (static_cast<double>(v.size()) * h_ * h_ * h_);
}

double DensityEstimate::cdf(double x) const
{
  const auto v = sample_.values();
  const auto [lo, hi] = window(x);
  // everything left of the window contributes exactly 1
  double s = static_cast<double>(lo);
  for (std::size_t i = lo; i < hi; ++i)
    s += 0.5 * std::erfc(-(x - v[i]) / (h_ * std::numbers::sqrt2));
  return s / static_cast<double>(v.size());
}

void DensityEstimate::evaluate(std::span<const double> xs,
                               std::span<double> out,
                               int order,
                               Exec exec) const
{
  if (out.size() != xs.size())
    throw Error("output span size mismatch");
  if (order == 0)
    for_each_index(xs.size(), exec, [&](std::size_t k) { out[k] = eval(xs[k]); });
  else
    for_each_index(xs.size(), exec,
                   [&](std::size_t k) { out[k] = derivative(xs[k], order); });
}

double kde_eval(const DensityEstimate& est, double x)
{
  return est.eval(x);
}

double kde_deriv(const DensityEstimate& est, double x, int order)
{
  return est.derivative(x, order);
}

Bandwidth bandwidth_rot(const Sample& sample)
{
  if (sample.size() < 2)
    throw Error("rule-of-thumb bandwidth needs at least two observations");
  if (sample.degenerate())
    throw Error("zero-spread sample");
  const double sd = sample_sd(sample);
  const double iqr = sample_quantile(sample, 0.75) - sample_quantile(sample, 0.25);
  double scale = std::min(sd, iqr / 1.34);
  // heavy ties can leave the IQR at zero while the spread is not
  if (!(scale > 0.0))
    scale = sd;
  const double n = static_cast<double>(sample.size());
  return Bandwidth(0.9 * scale * std::pow(n, -0.2));
}

SjBandwidth bandwidth_sj(const Sample& sample, Exec exec)
{
  if (sample.size() < 4)
    throw Error("Sheather-Jones bandwidth needs at least four observations");
  if (sample.degenerate())
    throw Error("zero-spread sample");

  const auto x = sample.values();
  const double n = static_cast<double>(x.size());
  const double h_rot = bandwidth_rot(sample).value();
  SjBandwidth result{ Bandwidth(h_rot), h_rot, false, {} };

  const double sd = sample_sd(sample);
  const double iqr = sample_quantile(sample, 0.75) - sample_quantile(sample, 0.25);
  double scale = std::min(sd, iqr / 1.349);
  if (!(scale > 0.0))
    scale = sd;

  const double a = 1.24 * scale * std::pow(n, -1.0 / 7.0);
  const double b = 1.23 * scale * std::pow(n, -1.0 / 9.0);
  const double c1 = 1.0 / (2.0 * std::sqrt(std::numbers::pi) * n);

  const double td = -functional_estimate(x, b, 6, phi6, exec);
  const double sa = functional_estimate(x, a, 4, phi4, exec);
  if (!(td > 0.0) || !(sa > 0.0) || !std::isfinite(td)) {
    result.fell_back = true;
    result.note = "pilot curvature estimate unusable; using rule-of-thumb";
    return result;
  }
  const double alpha2 = 1.357 * std::pow(sa / td, 1.0 / 7.0);

  auto equation = [&](double h) {
    const double s = functional_estimate(x, alpha2 * std::pow(h, 5.0 / 7.0), 4,
                                         phi4, exec);
    if (!(s > 0.0))
      return -h;
    return std::pow(c1 / s, 0.2) - h;
  };

  const double lo = h_rot / 20.0;
  const double hi = h_rot * 20.0;
  const double f_lo = equation(lo);
  const double f_hi = equation(hi);
  if (!(f_lo * f_hi < 0.0)) {
    result.fell_back = true;
    result.note = "no plug-in root in [h_rot/20, 20 h_rot]; using rule-of-thumb";
    return result;
  }

  const double tol = 1e-7 * h_rot;
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
    equation, lo, hi, f_lo, f_hi,
    [tol](double l, double r) { return std::abs(r - l) <= tol; }, max_iter);
  result.h = Bandwidth(0.5 * (bracket.first + bracket.second));
  return result;
}

} // namespace densityshape

#pragma once

#include "densityshape/execution.hpp"
#include "densityshape/sample.hpp"

#include <cmath>
#include <span>
#include <string>
#include <utility>

namespace densityshape {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946;

//! Standard Gaussian kernel and its first two derivatives.
inline double gauss_kernel(double u);
inline double gauss_kernel_d1(double u);
inline double gauss_kernel_d2(double u);

//! Gaussian kernel density estimate
//!   f(x) = (1/nh) sum_i K((x - X_i)/h).
//!
//! Evaluation is exact summation. Only observations within 40h of x are
//! visited; every skipped term underflows to zero in double precision, so
//! the result is identical to the full sum.
class DensityEstimate
{
public:
  DensityEstimate(Sample sample, Bandwidth h);

  const Sample& sample() const { return sample_; }
  double bandwidth() const { return h_; }

  double operator()(double x) const { return eval(x); }
  double eval(double x) const;
  //! order 1 or 2; throws for anything else.
  double derivative(double x, int order) const;
  //! Distribution function of the estimate, (1/n) sum_i Phi((x - X_i)/h).
  double cdf(double x) const;

  //! Grid kernels: out[k] = f(xs[k]) (order 0) or its derivative.
  void evaluate(std::span<const double> xs,
                std::span<double> out,
                int order = 0,
                Exec exec = Exec::parallel) const;

private:
  std::pair<std::size_t, std::size_t> window(double x) const;

  Sample sample_;
  double h_;
};

double kde_eval(const DensityEstimate& est, double x);
double kde_deriv(const DensityEstimate& est, double x, int order);

//! Normal-reference rule 0.9 min(sd, IQR/1.34) n^(-1/5).
Bandwidth bandwidth_rot(const Sample& sample);

struct SjBandwidth
{
  Bandwidth h;
  double h_rot;
  //! Set when the plug-in equation had no root in [h_rot/20, 20 h_rot]
  //! (or the pilot curvature estimate was unusable) and h fell back to h_rot.
  bool fell_back = false;
  std::string note;
};

//! Sheather-Jones solve-the-equation plug-in bandwidth with normal-reference
//! pilots. Requires n >= 4 and a non-degenerate sample.
SjBandwidth bandwidth_sj(const Sample& sample, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------

inline double gauss_kernel(double u)
{
  return kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

inline double gauss_kernel_d1(double u)
{
  return -u * gauss_kernel(u);
}

inline double gauss_kernel_d2(double u)
{
  return (u * u - 1.0) * gauss_kernel(u);
}

} // namespace densityshape

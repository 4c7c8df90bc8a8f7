#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace densityshape {

//! Raised for violated preconditions and numerical failures. The message is
//! surfaced verbatim by the command-line front end.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Sorted, finite, non-empty set of real observations.
class Sample
{
public:
  explicit Sample(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double range() const { return values_.back() - values_.front(); }

  //! True when every observation has the same value.
  bool degenerate() const { return values_.front() == values_.back(); }

  //! Returns a copy with every value multiplied by `scale` and shifted by
  //! `shift`; `scale` must be positive.
  Sample affine(double scale, double shift) const;

private:
  std::vector<double> values_;
};

//! Positive, finite smoothing scale in data units.
class Bandwidth
{
public:
  explicit Bandwidth(double h);
  double value() const { return h_; }

private:
  double h_;
};

// sample moments used by bandwidth rules
double sample_sd(const Sample& sample);
//! Type-7 (linear interpolation) sample quantile.
double sample_quantile(const Sample& sample, double p);

} // namespace densityshape

#pragma once

#include "densityshape/rng.hpp"
#include "densityshape/sample.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace testing_support {

using densityshape::Sample;
using densityshape::StreamRng;

inline std::vector<double> normal_draws(std::size_t n, std::uint64_t seed, double mu = 0.0, double sd = 1.0)
{
  StreamRng rng(seed, 0);
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> x(n);
  for (auto& v : x)
    v = d(rng);
  return x;
}

struct Component
{
  double weight, mu, sd;
};

inline std::vector<double> mixture_draws(std::size_t n, const std::vector<Component>& comps, StreamRng& rng)
{
  std::vector<double> w;
  for (const auto& c : comps)
    w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  for (auto& v : x) {
    const auto& c = comps[pick(rng)];
    v = c.mu + c.sd * z(rng);
  }
  return x;
}

inline double mixture_pdf(const std::vector<Component>& comps, double x)
{
  double f = 0.0;
  for (const auto& c : comps) {
    const double u = (x - c.mu) / c.sd;
    f += c.weight * std::exp(-0.5 * u * u) / (c.sd * std::sqrt(2.0 * std::numbers::pi));
  }
  return f;
}

// ---- excess mass by exhaustive enumeration -------------------------------

struct Atoms
{
  std::vector<double> value;
  std::vector<double> mass; // multiplicity / n
};

inline Atoms atoms_of(const Sample& s)
{
  Atoms a;
  const auto v = s.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == 0 || v[i] != v[i - 1]) {
      a.value.push_back(v[i]);
      a.mass.push_back(0.0);
    }
    a.mass.back() += 1.0 / static_cast<double>(v.size());
  }
  return a;
}

// Every choice of at most m disjoint closed intervals with endpoints at
// atoms, reported as (captured mass, total length).
inline void enumerate_configs(const Atoms& a, std::size_t m, std::size_t from, double mass, double length,
                              const std::function<void(double, double)>& emit)
{
  emit(mass, length);
  if (m == 0)
    return;
  const std::size_t d = a.value.size();
  for (std::size_t i = from; i < d; ++i) {
    double cm = 0.0;
    for (std::size_t j = i; j < d; ++j) {
      cm += a.mass[j];
      enumerate_configs(a, m - 1, j + 1, mass + cm, length + (a.value[j] - a.value[i]), emit);
    }
  }
}

inline double brute_excess_mass(const Sample& s, std::size_t m, double lambda)
{
  const Atoms a = atoms_of(s);
  double best = 0.0;
  enumerate_configs(a, m, 0, 0.0, 0.0, [&](double mass, double len) { best = std::max(best, mass - lambda * len); });
  return best;
}

// sup over lambda of E_m - E_{m-1}: D is piecewise linear with breakpoints
// where two configurations of the same order tie, so checking every pairwise
// intersection (plus both limits) finds the supremum.
inline double brute_delta(const Sample& s, std::size_t m)
{
  const Atoms a = atoms_of(s);
  std::vector<std::pair<double, double>> lines_m, lines_k;
  enumerate_configs(a, m, 0, 0.0, 0.0, [&](double c, double l) { lines_m.emplace_back(c, l); });
  if (m > 1)
    enumerate_configs(a, m - 1, 0, 0.0, 0.0, [&](double c, double l) { lines_k.emplace_back(c, l); });
  const auto envelope = [](const std::vector<std::pair<double, double>>& lines, double lambda) {
    double best = 0.0;
    for (const auto& [c, l] : lines)
      best = std::max(best, c - lambda * l);
    return best;
  };
  std::vector<double> lambdas{ 1e-12, 1e12 };
  for (const auto* lines : { &lines_m, &lines_k })
    for (std::size_t i = 0; i < lines->size(); ++i)
      for (std::size_t j = i + 1; j < lines->size(); ++j) {
        const auto [c1, l1] = (*lines)[i];
        const auto [c2, l2] = (*lines)[j];
        if (l1 != l2) {
          const double lam = (c1 - c2) / (l1 - l2);
          if (lam > 0.0)
            lambdas.push_back(lam);
        }
      }
  double best = -1.0;
  for (double lam : lambdas)
    best = std::max(best, envelope(lines_m, lam) - (m > 1 ? envelope(lines_k, lam) : 0.0));
  return best;
}

// ---- Sheather-Jones, written directly from the two-stage recipe ----------

inline double phi_deriv(int r, double u)
{
  const double k = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  const double u2 = u * u;
  if (r == 4)
    return (u2 * u2 - 6.0 * u2 + 3.0) * k;
  return (u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0) * k; // r == 6
}

inline double reference_functional(const std::vector<double>& x, double g, int r)
{
  const double n = static_cast<double>(x.size());
  double s = 0.0;
  for (double xi : x)
    for (double xj : x)
      s += phi_deriv(r, (xi - xj) / g);
  return s / (n * (n - 1.0) * std::pow(g, r + 1));
}

inline double reference_sj(std::vector<double> x)
{
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const auto q = [&](double p) {
    const double h = (n - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
  };
  const double scale = std::min(sd, (q(0.75) - q(0.25)) / 1.349);
  const double a = 1.24 * scale * std::pow(n, -1.0 / 7.0);
  const double b = 1.23 * scale * std::pow(n, -1.0 / 9.0);
  const double c1 = 1.0 / (2.0 * std::sqrt(std::numbers::pi) * n);
  const double td = -reference_functional(x, b, 6);
  const double sa = reference_functional(x, a, 4);
  const double alpha2 = 1.357 * std::pow(sa / td, 1.0 / 7.0);
  const auto eq = [&](double h) { return std::pow(c1 / reference_functional(x, alpha2 * std::pow(h, 5.0 / 7.0), 4), 0.2) - h; };
  const double rot = 0.9 * std::min(sd, (q(0.75) - q(0.25)) / 1.34) * std::pow(n, -0.2);
  double lo = rot / 20.0, hi = rot * 20.0;
  double flo = eq(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = eq(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace testing_support

#pragma once

// Shared helpers for the unit tests.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "doctest.h"

namespace testing {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

/// Integral over [a, b] by adaptive Gauss-Kronrod.
template <class F>
double integrate(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// Integral over (a, inf). The integrands here are negligible past a + 1e4, and
/// cutting them off keeps polynomial-times-density products from overflowing.
template <class F>
double integrate_to_inf(F f, double a) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double t) { return t > a + 1e4 ? 0.0 : f(t); }, a,
                     std::numeric_limits<double>::infinity());
}

/// Integral over the real line.
template <class F>
double integrate_line(F f) {
  boost::math::quadrature::sinh_sinh<double> q;
  return q.integrate(f);
}

}  // namespace testing

#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "infgame/errors.hpp"

namespace infgame::quadrature {

/// Integral of samples f_0..f_{K-1} on a uniform grid with spacing h.
/// Composite Simpson when the interval count is even; otherwise Simpson on
/// all but the last three intervals plus Simpson's 3/8 rule on those.
inline double integrate_samples(std::span<const double> f, double h) {
  const std::size_t k = f.size();
  if (k < 2) throw DimensionError("need at least two samples to integrate");
  const std::size_t intervals = k - 1;
  if (intervals == 1) return 0.5 * h * (f[0] + f[1]);
  if (intervals == 2) return h / 3.0 * (f[0] + 4.0 * f[1] + f[2]);

  auto simpson = [&](std::size_t first, std::size_t last) {
    double s = f[first] + f[last];
    for (std::size_t i = first + 1; i < last; ++i) s += ((i - first) % 2 == 1 ? 4.0 : 2.0) * f[i];
    return h / 3.0 * s;
  };
  if (intervals % 2 == 0) return simpson(0, intervals);

  const std::size_t tail = intervals - 3;
  const double head = tail > 0 ? simpson(0, tail) : 0.0;
  const double three_eighths =
      3.0 * h / 8.0 * (f[tail] + 3.0 * f[tail + 1] + 3.0 * f[tail + 2] + f[tail + 3]);
  return head + three_eighths;
}

/// Adaptive 21-point Gauss-Kronrod. Refinement stops once the error estimate
/// is below max(abs_tol, rel_tol * |I|), the same rule as QUADPACK's qags.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol = 1.49e-8,
                          double rel_tol = 1.49e-8, unsigned max_depth = 15) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  const double coarse = GK::integrate(f, a, b, 0);
  const double scale = std::abs(coarse);
  const double tol = scale > 0.0 ? std::max(rel_tol, abs_tol / scale) : rel_tol;
  if (scale > 0.0 && tol >= 1.0) return coarse;
  return GK::integrate(f, a, b, max_depth, tol);
}

}  // namespace infgame::quadrature

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace ratingdesign {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

// Golden-section search for a unimodal f on [lo, hi]. Stops once the bracket is
// narrower than `tolerance` (or cannot shrink further in floating point); the
// bracket endpoints are also evaluated so boundary minima are returned exactly.
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double tolerance, int max_iterations = 500) {
  constexpr double inv_phi = 0.6180339887498948482;  // (sqrt(5) - 1) / 2
  ScalarMinimum best{lo, f(lo), 1};
  if (!(hi > lo)) return best;

  const double f_hi = f(hi);
  ++best.evaluations;
  if (f_hi < best.value) best = {hi, f_hi, best.evaluations};

  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  best.evaluations += 2;

  for (int it = 0; it < max_iterations; ++it) {
    const double floor = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
    if (b - a <= std::max(tolerance, floor)) break;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++best.evaluations;
  }

  const double x = 0.5 * (a + b);
  const double fx = f(x);
  ++best.evaluations;
  // Interior point wins ties against the endpoints.
  if (fx <= best.value) {
    best.x = x;
    best.value = fx;
  }
  if (fc < best.value) {
    best.x = c;
    best.value = fc;
  }
  if (fd < best.value) {
    best.x = d;
    best.value = fd;
  }
  return best;
}

}  // namespace ratingdesign

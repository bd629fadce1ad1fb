#pragma once

#include <cmath>
#include <utility>

namespace polaron_tfim {

struct GoldenSectionResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
};

/// Minimizes a unimodal f on [a, b] until the bracket is narrower than `tol`.
template <class F>
GoldenSectionResult golden_section_minimize(F&& f, double a, double b, double tol, int max_iterations = 200) {
  if (a > b) std::swap(a, b);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  for (int it = 0; it < max_iterations && (b - a) > tol; ++it) {
    if (fc <= fd) {
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
    ++evals;
  }
  const double x = 0.5 * (a + b);
  const double fx = f(x);
  ++evals;
  // The midpoint can lose to an interior probe on a flat or noisy objective.
  if (fc < fx && fc <= fd) return {c, fc, evals};
  if (fd < fx) return {d, fd, evals};
  return {x, fx, evals};
}

}  // namespace polaron_tfim

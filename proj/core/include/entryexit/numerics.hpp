#pragma once

#include <functional>
#include <optional>

namespace entryexit::numerics {

using RealFn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (7/15) integral of f over [a, b]; b < a gives the
/// signed result. Throws QuadratureError when the error estimate stays above
/// abs_tol after max_depth bisections.
double integrate(const RealFn& f, double a, double b, double abs_tol = 1e-11, unsigned max_depth = 30);

/// Root of f in [a, b] given f(a), f(b) of opposite sign (or one zero).
/// TOMS 748 bracketing, capped at max_iter evaluations.
double solve_bracketed(const RealFn& f, double a, double b, double fa, double fb, int max_iter = 200);

/// Walk from `start` towards `limit` in steps of `step`, calling f at each
/// point, until f changes sign relative to `f_start`. Returns the bracket.
struct Bracket {
  double a, b, fa, fb;
};
std::optional<Bracket> expand_bracket(const RealFn& f, double start, double f_start, double limit,
                                      double step);

/// First x in (start, limit] where base + integral_{start}^{x} g changes sign
/// from negative, or nullopt. With base == 0 the sign is judged on the running
/// mean of g, so the trivial root at `start` is skipped; g(start) must then be
/// negative. Partial integrals are accumulated once per bracket step.
std::optional<double> first_balance(const RealFn& g, double start, double base, double limit, double step,
                                    double abs_tol = 1e-11);

/// Minimiser of f on [a, b] (Brent: golden section with parabolic steps).
double minimize(const RealFn& f, double a, double b);

}  // namespace entryexit::numerics

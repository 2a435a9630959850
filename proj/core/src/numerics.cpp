#include "entryexit/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>

#include "entryexit/errors.hpp"

namespace entryexit::numerics {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Segment {
  double value;
  double error;
};

Segment kronrod(const RealFn& f, double a, double b) {
  double err = 0.0;
  // max_depth 0: a single 7/15 evaluation with its embedded error estimate.
  const double v = Rule::integrate(f, a, b, 0, 0.0, &err);
  return {v, err};
}

double adapt(const RealFn& f, double a, double b, Segment whole, double tol, unsigned depth, unsigned max_depth,
             double& worst) {
  if (whole.error <= tol || whole.error <= 50.0 * std::numeric_limits<double>::epsilon() * std::abs(whole.value)) {
    return whole.value;
  }
  if (depth >= max_depth) {
    worst = std::max(worst, whole.error);
    return whole.value;
  }
  const double m = 0.5 * (a + b);
  const Segment left = kronrod(f, a, m);
  const Segment right = kronrod(f, m, b);
  return adapt(f, a, m, left, 0.5 * tol, depth + 1, max_depth, worst) +
         adapt(f, m, b, right, 0.5 * tol, depth + 1, max_depth, worst);
}

}  // namespace

double integrate(const RealFn& f, double a, double b, double abs_tol, unsigned max_depth) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, abs_tol, max_depth);
  double worst = 0.0;
  const double v = adapt(f, a, b, kronrod(f, a, b), abs_tol, 0, max_depth, worst);
  if (!std::isfinite(v)) {
    throw QuadratureError("quadrature produced a non-finite value on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "]");
  }
  if (worst > 1e3 * abs_tol) {
    throw QuadratureError("quadrature did not converge on [" + std::to_string(a) + ", " + std::to_string(b) +
                          "]: error estimate " + std::to_string(worst));
  }
  return v;
}

double solve_bracketed(const RealFn& f, double a, double b, double fa, double fb, int max_iter) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa < 0.0) == (fb < 0.0)) {
    throw PreconditionError("solve_bracketed: f(a) and f(b) have the same sign");
  }
  auto tol = [](double lo, double hi) {
    return std::abs(hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(lo) + std::abs(hi)) + 1e-300;
  };
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (lo + hi);
}

std::optional<Bracket> expand_bracket(const RealFn& f, double start, double f_start, double limit, double step) {
  if (step <= 0.0 || start >= limit) return std::nullopt;
  double a = start;
  double fa = f_start;
  while (a < limit) {
    const double b = std::min(a + step, limit);
    const double fb = f(b);
    if (fb == 0.0 || (fa < 0.0) != (fb < 0.0)) return Bracket{a, b, fa, fb};
    a = b;
    fa = fb;
  }
  return std::nullopt;
}

std::optional<double> first_balance(const RealFn& g, double start, double base, double limit, double step,
                                    double abs_tol) {
  if (base > 0.0) throw PreconditionError("first_balance: accumulated value is already positive");
  const bool mean_mode = base == 0.0;
  double a = start;
  double sum_a = base;  // base + integral_{start}^{a} g
  double fa = mean_mode ? g(start) : base;
  if (mean_mode && !(fa < 0.0)) {
    throw PreconditionError("first_balance: integrand must be negative at the start point");
  }
  auto value = [&](double x, double sum) { return mean_mode ? sum / (x - start) : sum; };
  while (a < limit) {
    const double b = std::min(a + step, limit);
    const double sum_b = sum_a + integrate(g, a, b, abs_tol);
    const double fb = value(b, sum_b);
    if (fb >= 0.0) {
      if (fb == 0.0) return b;
      const double sa = sum_a;
      const double a0 = a;
      auto f = [&](double x) { return value(x, sa + integrate(g, a0, x, abs_tol)); };
      return solve_bracketed(f, a, b, fa, fb);
    }
    a = b;
    sum_a = sum_b;
    fa = fb;
  }
  return std::nullopt;
}

double minimize(const RealFn& f, double a, double b) {
  const int bits = std::numeric_limits<double>::digits / 2;
  std::uintmax_t iters = 500;
  return boost::math::tools::brent_find_minima(f, a, b, bits, iters).first;
}

}  // namespace entryexit::numerics

#include "entryexit/entry_exit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "entryexit/errors.hpp"
#include "entryexit/numerics.hpp"

namespace entryexit {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

constexpr double kQuadTol = 1e-11;

double bracket_step(double from, double x_hi) { return 0.1 * std::max(x_hi - from, 1e-12); }

/// First x > from with base + int_{from}^{x} mu = 0.
double second_leg(const RealFunction& mu, double from, double base, double x_hi) {
  if (!(base < 0.0)) {
    throw PreconditionError("accumulated exponent " + fmt(base) + " at x=" + fmt(from) + " is not negative");
  }
  const auto root = numerics::first_balance(mu, from, base, x_hi, bracket_step(from, x_hi), kQuadTol);
  if (!root) {
    throw NoExitInDomain("accumulated exponent does not return to zero before x=" + fmt(x_hi));
  }
  return *root;
}

}  // namespace

std::string_view to_string(ExitCase c) noexcept {
  switch (c) {
    case ExitCase::trans:
      return "trans";
    case ExitCase::invar:
      return "invar";
    case ExitCase::classical:
      return "classical";
  }
  return "classical";
}

double accumulated_exponent(const RealFunction& mu, double x0, double x) {
  return numerics::integrate(mu, x0, x, kQuadTol);
}

double solve_trans(const SpectralProfile& profile, double x0, const Interval& domain) {
  if (!(x0 < profile.x_star)) {
    throw PreconditionError("x0=" + fmt(x0) + " must lie before x*=" + fmt(profile.x_star));
  }
  const double w_star = accumulated_exponent(profile.mu1, x0, profile.x_star);
  return second_leg(profile.mu2, profile.x_star, w_star, domain.hi);
}

double solve_xtil(const FastSlowSystem& sys, const SpectralProfile& profile, double x0) {
  if (std::abs(x0 - profile.x_star) <= 1e-9) return x0;
  if (!(x0 < profile.x_star)) {
    throw PreconditionError("x0=" + fmt(x0) + " must lie before x*=" + fmt(profile.x_star));
  }
  auto rate = [&](double x) { return dphi_dtheta(sys, x, branch_angles(sys, profile, x).theta1, 0.0); };
  if (!(rate(x0) < 0.0)) {
    throw PreconditionError("the S0 branch is not attracting at x0=" + fmt(x0));
  }
  const double hi = sys.domain.hi;
  const auto root = numerics::first_balance(rate, x0, 0.0, hi, 0.02 * (hi - x0), kQuadTol);
  if (!root) throw NoSwitchInDomain("no switch point on the S0 branch before x=" + fmt(hi));
  return *root;
}

InvarSolution solve_invar(const SpectralProfile& profile, const FastSlowSystem& sys, double x0) {
  const double xt = solve_xtil(sys, profile, x0);
  if (xt == x0) return {xt, solve_classical(profile.mu2, x0, sys.domain.hi)};
  const double base = accumulated_exponent(profile.mu1, x0, xt);
  return {xt, second_leg(profile.mu2, xt, base, sys.domain.hi)};
}

double solve_classical(const RealFunction& mu, double x0, double x_hi) {
  if (!(mu(x0) < 0.0)) {
    throw PreconditionError("the eigenvalue at x0=" + fmt(x0) + " is not negative");
  }
  const auto root = numerics::first_balance(mu, x0, 0.0, x_hi, bracket_step(x0, x_hi), kQuadTol);
  if (!root) {
    throw NoExitInDomain("accumulated exponent does not return to zero before x=" + fmt(x_hi));
  }
  return *root;
}

ExitPrediction predict_exit(const FastSlowSystem& sys, double x0, const DispatchOptions& opts) {
  SpectralProfile profile = spectral_profile(sys);
  const PolarAnalysis polar = analyze_polar(sys, profile);
  profile.theta_star = polar.theta_star;
  return predict_exit(sys, profile, polar, x0, opts);
}

ExitPrediction predict_exit(const FastSlowSystem& sys, const SpectralProfile& profile, const PolarAnalysis& polar,
                            double x0, const DispatchOptions& opts) {
  if (!sys.domain.contains(x0)) {
    throw PreconditionError("x0=" + fmt(x0) + " lies outside the domain");
  }
  ExitPrediction p;
  p.x0 = x0;
  p.s0_invariant = polar.s0_invariant;
  p.z0_invariant = polar.z0_invariant;
  const double hi = sys.domain.hi;

  if (x0 >= profile.x_star - opts.collision_tol) {
    p.exit_case = ExitCase::classical;
    if (std::abs(x0 - profile.x_star) <= opts.collision_tol) {
      p.x1 = solve_classical(profile.mu2, x0, hi);
      return p;
    }
    std::optional<double> best;
    for (const RealFunction* mu : {&profile.mu1, &profile.mu2}) {
      if (!((*mu)(x0) < 0.0)) {
        throw UncoveredCase("an eigendirection is already repelling at x0=" + fmt(x0));
      }
      try {
        const double x1 = solve_classical(*mu, x0, hi);
        best = best ? std::min(*best, x1) : x1;
      } catch (const NoExitInDomain&) {
      }
    }
    if (!best) throw NoExitInDomain("no eigenvalue balances before x=" + fmt(hi));
    p.x1 = *best;
    return p;
  }

  if (!polar.lambda_value) {
    throw UncoveredCase("the determinant condition fails at (x*, theta*)");
  }
  const double lambda = *polar.lambda_value;
  p.lambda_used = lambda;
  const bool unit = std::abs(lambda - 1.0) <= opts.lambda_tol;
  if (unit && polar.s0_invariant && polar.z0_invariant) {
    const double xt = solve_trans(profile, x0, sys.domain);
    const InvarSolution inv = solve_invar(profile, sys, x0);
    throw AmbiguousCase("lambda = 1 with both branches invariant: trans predicts x1=" + fmt(xt) +
                        ", invar predicts x1=" + fmt(inv.x1) + " (x_tilde=" + fmt(inv.x_tilde) + ")");
  }
  if (!unit || polar.z0_invariant) {
    p.exit_case = ExitCase::trans;
    p.x1 = solve_trans(profile, x0, sys.domain);
    return p;
  }
  if (polar.s0_invariant) {
    p.exit_case = ExitCase::invar;
    const InvarSolution inv = solve_invar(profile, sys, x0);
    p.x_tilde = inv.x_tilde;
    p.x1 = inv.x1;
    return p;
  }
  throw UncoveredCase("lambda = 1 and neither branch is invariant for eps > 0");
}

}  // namespace entryexit

#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "entryexit/polar.hpp"
#include "entryexit/spectral.hpp"
#include "entryexit/system.hpp"

namespace entryexit {

enum class ExitCase {
  trans,      // switch eigendirection at x*
  invar,      // ride the invariant S0 branch until x_tilde, then switch
  classical,  // single-direction entry-exit relation
};
std::string_view to_string(ExitCase c) noexcept;

struct ExitPrediction {
  ExitCase exit_case = ExitCase::classical;
  double x0 = 0.0;
  std::optional<double> x_tilde;
  double x1 = 0.0;
  std::optional<double> lambda_used;
  bool s0_invariant = false;
  bool z0_invariant = false;
};

using RealFunction = std::function<double(double)>;

/// integral_{x0}^{x} mu, adaptive quadrature to 1e-11 absolute.
double accumulated_exponent(const RealFunction& mu, double x0, double x);

/// Root x1 > x* of int_{x0}^{x*} mu1 + int_{x*}^{x1} mu2 = 0.
double solve_trans(const SpectralProfile& profile, double x0, const Interval& domain);

/// Switch point x_tilde > x* of int_{x0}^{x_tilde} dPhi/dtheta(x, theta1(x), 0) = 0.
double solve_xtil(const FastSlowSystem& sys, const SpectralProfile& profile, double x0);

struct InvarSolution {
  double x_tilde;
  double x1;
};

/// x_tilde from solve_xtil, then x1 > x_tilde of
/// int_{x0}^{x_tilde} mu1 + int_{x_tilde}^{x1} mu2 = 0.
InvarSolution solve_invar(const SpectralProfile& profile, const FastSlowSystem& sys, double x0);

/// Root x1 in (x0, x_hi] of int_{x0}^{x1} mu = 0; requires mu(x0) < 0.
double solve_classical(const RealFunction& mu, double x0, double x_hi);

struct DispatchOptions {
  double lambda_tol = 1e-8;
  std::vector<double> invariance_eps = {1e-2, 1e-3};
  double invariance_tol = 1e-8;
  double collision_tol = 1e-9;
};

/// Chooses among the trans, invar and classical relations and solves it.
ExitPrediction predict_exit(const FastSlowSystem& sys, double x0, const DispatchOptions& opts = {});
ExitPrediction predict_exit(const FastSlowSystem& sys, const SpectralProfile& profile,
                            const PolarAnalysis& polar, double x0, const DispatchOptions& opts = {});

}  // namespace entryexit

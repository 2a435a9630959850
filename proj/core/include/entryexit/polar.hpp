#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "entryexit/spectral.hpp"
#include "entryexit/system.hpp"

namespace entryexit {

/// Reduces an angle into [-pi/2, pi/2); the polar vector field has period pi.
double reduce_angle(double theta) noexcept;

/// Smallest signed difference a - b modulo pi, in [-pi/2, pi/2).
double angle_difference(double a, double b) noexcept;

/// Angular rate Phi(x, theta, eps) of the linearised fast flow.
double phi(const FastSlowSystem& sys, double x, double theta, double eps);
double phi(const Matrix2& a, double theta) noexcept;

/// d Phi / d theta (analytic).
double dphi_dtheta(const FastSlowSystem& sys, double x, double theta, double eps);
double dphi_dtheta(const Matrix2& a, double theta) noexcept;

/// Radial rate r'/r of the linearised fast flow.
double radial_rate(const Matrix2& a, double theta) noexcept;

/// Angle in [-pi/2, pi/2) of an eigenvector of `a` for eigenvalue `mu`;
/// nullopt when a - mu*Id vanishes (every direction is an eigenvector).
std::optional<double> eigenvector_angle(const Matrix2& a, double mu) noexcept;

struct BranchAngles {
  double theta1;  // S0, eigendirection of mu1
  double theta2;  // Z0, eigendirection of mu2
};

/// Branch angles at eps = 0. At x = x* both branches take their limits from
/// the left, which equal theta* when the multiplicity there is 1.
BranchAngles branch_angles(const FastSlowSystem& sys, const SpectralProfile& profile, double x);

/// theta* as the left limit of the S0 angle at x*.
double select_theta_star(const FastSlowSystem& sys, const SpectralProfile& profile);
/// The alternative collision angle (left limit of the Z0 angle). Equal to
/// select_theta_star when the multiplicity at x* is 1.
double alternative_theta_star(const FastSlowSystem& sys, const SpectralProfile& profile);

/// Roots of Phi(x, ., 0) in [-pi/2, pi/2), found by scanning independently of
/// the eigenvector computation.
std::vector<double> phi_roots(const FastSlowSystem& sys, double x, int samples = 720);

struct TranscriticalCoeffs {
  double T1;
  double T2;
};

/// Normal-form coefficients of Phi(x, ., 0) expanded about theta_star.
TranscriticalCoeffs transcritical_coeffs(const FastSlowSystem& sys, double x, double theta_star);

struct TheoremCoeffs {
  double alpha;
  double beta;
  double gamma;
  double coef_delta;  // half dPhi/deps, distinct from the cylinder radius
};

/// Half second partials of Phi at (x*, theta*, 0) by Richardson-extrapolated
/// central differences.
TheoremCoeffs theorem_coeffs(const FastSlowSystem& sys, double x_star, double theta_star);

/// (coef_delta*alpha + beta) / sqrt(beta^2 - gamma*alpha). Throws
/// DeterminantConditionViolated when the radicand is not positive.
double lambda_value(const TheoremCoeffs& c);
double lambda_value(double alpha, double beta, double gamma, double coef_delta);

enum class Branch { S0, Z0 };
std::string_view to_string(Branch b) noexcept;

/// Largest residual |Phi(x, theta_b(x), eps) - eps * theta_b'(x)| over a
/// 101-point grid and the given eps values. Zero iff the curve theta_b is an
/// orbit of x' = eps, theta' = Phi.
double branch_invariance_residual(const FastSlowSystem& sys, const SpectralProfile& profile, Branch branch,
                                  const std::vector<double>& eps_samples);

bool branch_invariance(const FastSlowSystem& sys, const SpectralProfile& profile, Branch branch,
                       const std::vector<double>& eps_samples = {1e-2, 1e-3}, double tol = 1e-8);

enum class Stability { attracting, repelling };
std::string_view to_string(Stability s) noexcept;

struct BranchStability {
  Stability s0;
  Stability z0;
};

/// Sign of dPhi/dtheta on each branch. Throws DegenerateClassification when
/// either slope is below 1e-12 in magnitude.
BranchStability classify_branch_stability(const FastSlowSystem& sys, const SpectralProfile& profile, double x);

struct CorollaryCondition {
  std::string name;
  double value;
  bool pass;
};

/// dPhi/dtheta = 0, dPhi/dx = 0, Phi_thth != 0, Phi_xth != 0 and the Hessian
/// determinant < 0 at (x*, theta*, 0).
std::array<CorollaryCondition, 5> corollary_checks(const FastSlowSystem& sys, double x_star, double theta_star);

struct CollisionRoute {
  double theta_star;
  TheoremCoeffs coeffs;
  std::optional<double> lambda;  // nullopt when the determinant condition fails
  std::array<CorollaryCondition, 5> corollary;
};

struct PolarAnalysis {
  double x_star;
  double theta_star;
  std::function<double(double)> theta1;
  std::function<double(double)> theta2;
  std::function<double(double)> T1;
  std::function<double(double)> T2;
  double alpha;
  double beta;
  double gamma;
  double coef_delta;
  std::optional<double> lambda_value;
  bool s0_invariant;
  bool z0_invariant;
  std::array<CorollaryCondition, 5> corollary_report;
  /// Evaluation at the other collision angle, present when the multiplicity
  /// at x* is 2 and the two candidate angles differ.
  std::optional<CollisionRoute> alternative;
};

PolarAnalysis analyze_polar(const FastSlowSystem& sys, const SpectralProfile& profile);

}  // namespace entryexit

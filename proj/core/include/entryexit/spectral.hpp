#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "entryexit/system.hpp"

namespace entryexit {

/// Ordered real eigenvalues of A(x; eps), xi_plus >= xi_minus.
struct EigenPair {
  double xi_plus;
  double xi_minus;
};

/// Throws ComplexEigenvalues when (tr A)^2 - 4 det A < 0.
EigenPair eigenvalues_xi(const FastSlowSystem& sys, double x, double eps);

/// Discriminant (tr A)^2 - 4 det A.
double discriminant(const FastSlowSystem& sys, double x, double eps);

/// Every zero of the discriminant in the domain: sign changes plus tangential
/// minima. Candidates are sorted.
std::vector<double> discriminant_zeros(const FastSlowSystem& sys, double eps);

/// Unique eigenvalue collision point. Throws NoCollision or UniquenessViolation.
double find_x_star(const FastSlowSystem& sys, double eps = 0.0);

struct EigenvalueZeros {
  std::optional<double> x_plus;
  std::optional<double> x_minus;
};

/// Roots of xi_plus(.;0) and xi_minus(.;0); more than one root of either
/// curve throws UniquenessViolation.
EigenvalueZeros find_eigenvalue_zeros(const FastSlowSystem& sys);

/// 2 iff A(x; eps) is a multiple of the identity within tol. The default tol
/// is 1e-9 (1 + max|A|). Throws PreconditionError if the eigenvalues differ.
int geometric_multiplicity(const FastSlowSystem& sys, double x, double eps,
                           std::optional<double> tol = std::nullopt);

struct AssumptionItem {
  bool pass = false;
  std::string detail;
  std::vector<double> witnesses;
};

using AssumptionReport = std::array<AssumptionItem, 6>;

/// Eigenvalue structure along the critical manifold at eps = 0.
struct SpectralProfile {
  double x_star = 0.0;
  double theta_star = 0.0;  // filled in by the polar analysis
  double xi_star = 0.0;
  std::optional<double> x_plus;
  std::optional<double> x_minus;
  int geometric_multiplicity_at_star = 1;
  /// Eigenvalue curves relabelled to pass smoothly through x_star.
  std::function<double(double)> mu1;
  std::function<double(double)> mu2;
  std::optional<AssumptionReport> assumption_report;

  bool assumptions_hold() const;
};

/// x*, xi*, multiplicity and the relabelled curves. Requires a unique x*.
SpectralProfile spectral_profile(const FastSlowSystem& sys);

/// Full assumption check for an entry point x0 < x*. Item failures are
/// verdicts; only x0 outside the domain or x0 >= x* throws.
SpectralProfile check_assumptions(const FastSlowSystem& sys, double x0);

/// First x > x0 in the domain with integral_{x0}^{x} mu = 0, or nullopt
/// (the "+infinity" convention).
std::optional<double> balance_point(const std::function<double(double)>& mu, double x0, double x_hi);

}  // namespace entryexit

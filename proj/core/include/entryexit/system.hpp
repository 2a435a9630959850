#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace entryexit {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  double span() const noexcept { return hi - lo; }
};

/// Linearisation A(x; eps) of the fast subsystem along z1 = z2 = 0:
///   [ f1  f2 ]
///   [ g1  g2 ]
struct Matrix2 {
  double f1 = 0.0;
  double f2 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;

  double trace() const noexcept { return f1 + g2; }
  double det() const noexcept { return f1 * g2 - f2 * g1; }
  double max_abs() const noexcept;
};

using FastField = std::function<double(double x, double z1, double z2, double eps)>;
using Coefficient = std::function<double(double x, double eps)>;

/// Fast-slow system x' = eps, z1' = Z1, z2' = Z2 whose critical manifold is
/// the x-axis. Immutable after construction; safe to share across threads.
struct FastSlowSystem {
  std::string name;
  Interval domain;
  FastField rhs_z1;
  FastField rhs_z2;
  Coefficient jac_f1;
  Coefficient jac_f2;
  Coefficient jac_g1;
  Coefficient jac_g2;

  Matrix2 jacobian(double x, double eps) const {
    return {jac_f1(x, eps), jac_f2(x, eps), jac_g1(x, eps), jac_g2(x, eps)};
  }
};

enum class Builtin { one_way_coupled, eps_coupled, nonlinear };

Builtin builtin_from_name(std::string_view name);
std::string_view to_string(Builtin b) noexcept;

/// Builtin example systems. `nonlinear` reads parameter "a" (default 4, must
/// be positive); other parameters are rejected.
FastSlowSystem make_builtin(Builtin name, const std::map<std::string, double>& params = {});
FastSlowSystem make_builtin(std::string_view name, const std::map<std::string, double>& params = {});

/// Polynomial term c * x^i * eps^j of a Jacobian entry.
struct CoefficientTerm {
  int i = 0;
  int j = 0;
  double c = 0.0;
};

/// Nonlinear monomial c * x^ix * z1^i1 * z2^i2 * eps^j added to Z1 or Z2.
struct MonomialTerm {
  int ix = 0;
  int i1 = 0;
  int i2 = 0;
  int j = 0;
  double c = 0.0;
};

struct PolynomialSystemSpec {
  std::string name;
  Interval domain;
  std::vector<CoefficientTerm> f1, f2, g1, g2;
  std::vector<MonomialTerm> nonlinear_z1, nonlinear_z2;
};

/// Parses the YAML system description. Throws ConfigError with the line of
/// the offending node.
PolynomialSystemSpec parse_system_spec(std::string_view text);

/// Builds a system from a parsed spec and validates manifold invariance and
/// Jacobian consistency; violations throw ConfigError naming the sample point.
FastSlowSystem build_system(const PolynomialSystemSpec& spec);

FastSlowSystem load_system(std::string_view spec_text);
FastSlowSystem load_system_file(const std::string& path);

/// Largest |Z_k(x,0,0,eps)| over a grid of x in the domain and eps in [0, eps_max].
struct InvarianceResidual {
  double max_residual = 0.0;
  double x = 0.0;
  double eps = 0.0;
};
InvarianceResidual manifold_invariance_residual(const FastSlowSystem& sys, double eps_max = 0.05,
                                                int nx = 101, int neps = 5);

/// Worst relative mismatch between the supplied Jacobian and central
/// differences of the vector field at z = 0, normalised by (1 + |jac|).
struct JacobianMismatch {
  double max_error = 0.0;
  double x = 0.0;
  double eps = 0.0;
  std::string entry;
};
JacobianMismatch jacobian_consistency(const FastSlowSystem& sys, double eps_max = 0.05, int nx = 101,
                                      int neps = 5);

}  // namespace entryexit

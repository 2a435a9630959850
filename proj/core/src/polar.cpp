#include "entryexit/polar.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "entryexit/errors.hpp"
#include "entryexit/numerics.hpp"

namespace entryexit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

bool at_star(const SpectralProfile& p, double x) { return std::abs(x - p.x_star) <= 1e-12 * (1.0 + std::abs(p.x_star)); }

// Richardson-extrapolated central differences.
double d1(const std::function<double(double)>& f, double x, double h) {
  auto c = [&](double s) { return (f(x + s) - f(x - s)) / (2.0 * s); };
  return (4.0 * c(0.5 * h) - c(h)) / 3.0;
}

double d2(const std::function<double(double)>& f, double x, double h) {
  const double f0 = f(x);
  auto c = [&](double s) { return (f(x + s) - 2.0 * f0 + f(x - s)) / (s * s); };
  return (4.0 * c(0.5 * h) - c(h)) / 3.0;
}

double d11(const std::function<double(double, double)>& f, double x, double y, double h) {
  auto c = [&](double s) {
    return (f(x + s, y + s) - f(x + s, y - s) - f(x - s, y + s) + f(x - s, y - s)) / (4.0 * s * s);
  };
  return (4.0 * c(0.5 * h) - c(h)) / 3.0;
}

double step1(double x) { return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(x)); }
double step2(double x) { return std::pow(std::numeric_limits<double>::epsilon(), 0.25) * (1.0 + std::abs(x)); }

/// Left limit at x* of the eigenvector angle for `mu`, by linear
/// extrapolation from two points just left of x*.
double left_limit_angle(const FastSlowSystem& sys, const std::function<double(double)>& mu, double xs) {
  const double h = 1e-6 * (1.0 + std::abs(xs));
  auto angle_at = [&](double x) {
    auto a = eigenvector_angle(sys.jacobian(x, 0.0), mu(x));
    if (!a) throw DegenerateClassification("no eigendirection near x*=" + fmt(xs));
    return *a;
  };
  const double t1 = angle_at(xs - h);
  const double t2 = angle_at(xs - 2.0 * h);
  return reduce_angle(t1 + angle_difference(t1, t2));
}

}  // namespace

double reduce_angle(double theta) noexcept {
  double r = std::fmod(theta + kHalfPi, kPi);
  if (r < 0.0) r += kPi;
  if (r >= kPi) r -= kPi;
  return r - kHalfPi;
}

double angle_difference(double a, double b) noexcept { return reduce_angle(a - b); }

double phi(const Matrix2& a, double theta) noexcept {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return a.g1 * c * c + (a.g2 - a.f1) * c * s - a.f2 * s * s;
}

double phi(const FastSlowSystem& sys, double x, double theta, double eps) {
  return phi(sys.jacobian(x, eps), theta);
}

double dphi_dtheta(const Matrix2& a, double theta) noexcept {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return (a.g2 - a.f1) * (c * c - s * s) - 2.0 * (a.f2 + a.g1) * s * c;
}

double dphi_dtheta(const FastSlowSystem& sys, double x, double theta, double eps) {
  return dphi_dtheta(sys.jacobian(x, eps), theta);
}

double radial_rate(const Matrix2& a, double theta) noexcept {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return c * (a.f1 * c + a.f2 * s) + s * (a.g1 * c + a.g2 * s);
}

std::optional<double> eigenvector_angle(const Matrix2& a, double mu) noexcept {
  const double m11 = a.f1 - mu, m12 = a.f2, m21 = a.g1, m22 = a.g2 - mu;
  const double n1 = std::hypot(m11, m12);
  const double n2 = std::hypot(m21, m22);
  if (n1 == 0.0 && n2 == 0.0) return std::nullopt;
  // Null vector orthogonal to the better-conditioned row.
  const double vx = n1 >= n2 ? m12 : m22;
  const double vy = n1 >= n2 ? -m11 : -m21;
  return reduce_angle(std::atan2(vy, vx));
}

double select_theta_star(const FastSlowSystem& sys, const SpectralProfile& profile) {
  if (profile.geometric_multiplicity_at_star == 1) {
    if (auto a = eigenvector_angle(sys.jacobian(profile.x_star, 0.0), profile.xi_star)) return *a;
  }
  return left_limit_angle(sys, profile.mu1, profile.x_star);
}

double alternative_theta_star(const FastSlowSystem& sys, const SpectralProfile& profile) {
  if (profile.geometric_multiplicity_at_star == 1) return select_theta_star(sys, profile);
  return left_limit_angle(sys, profile.mu2, profile.x_star);
}

BranchAngles branch_angles(const FastSlowSystem& sys, const SpectralProfile& profile, double x) {
  if (at_star(profile, x)) return {select_theta_star(sys, profile), alternative_theta_star(sys, profile)};
  const Matrix2 a = sys.jacobian(x, 0.0);
  const auto t1 = eigenvector_angle(a, profile.mu1(x));
  const auto t2 = eigenvector_angle(a, profile.mu2(x));
  if (!t1 || !t2) throw DegenerateClassification("A(x;0) is a multiple of the identity at x=" + fmt(x));
  return {*t1, *t2};
}

std::vector<double> phi_roots(const FastSlowSystem& sys, double x, int samples) {
  const Matrix2 a = sys.jacobian(x, 0.0);
  auto f = [&](double t) { return phi(a, t); };
  // Grid offset by half a step so that the boundary angle -pi/2 (a common
  // root) falls strictly inside a cell.
  const double dt = kPi / samples;
  std::vector<double> roots;
  double t_prev = -kHalfPi - 0.5 * dt;
  double f_prev = f(t_prev);
  for (int i = 1; i <= samples; ++i) {
    const double t = -kHalfPi - 0.5 * dt + i * dt;
    const double ft = f(t);
    if (ft == 0.0) {
      roots.push_back(reduce_angle(t));
    } else if (f_prev != 0.0 && (f_prev < 0.0) != (ft < 0.0)) {
      roots.push_back(reduce_angle(numerics::solve_bracketed(f, t_prev, t, f_prev, ft)));
    }
    t_prev = t;
    f_prev = ft;
  }
  std::vector<double> out;
  for (double r : roots) {
    bool dup = false;
    for (double o : out) dup = dup || std::abs(angle_difference(r, o)) <= 1e-12;
    if (!dup) out.push_back(r);
  }
  return out;
}

TranscriticalCoeffs transcritical_coeffs(const FastSlowSystem& sys, double x, double theta_star) {
  const Matrix2 a = sys.jacobian(x, 0.0);
  const double c = std::cos(theta_star);
  const double s = std::sin(theta_star);
  const double cc = c * c - s * s;
  const double sc = s * c;
  return {(a.g2 - a.f1) * cc - 2.0 * (a.f2 + a.g1) * sc, -(a.f2 + a.g1) * cc - 2.0 * (a.g2 - a.f1) * sc};
}

TheoremCoeffs theorem_coeffs(const FastSlowSystem& sys, double x_star, double theta_star) {
  auto in_theta = [&](double t) { return phi(sys, x_star, t, 0.0); };
  auto in_x = [&](double x) { return phi(sys, x, theta_star, 0.0); };
  auto in_eps = [&](double e) { return phi(sys, x_star, theta_star, e); };
  auto both = [&](double x, double t) { return phi(sys, x, t, 0.0); };
  const double h2x = step2(x_star);
  const double h2t = step2(theta_star);
  TheoremCoeffs out;
  out.alpha = 0.5 * d2(in_theta, theta_star, h2t);
  out.beta = 0.5 * d11(both, x_star, theta_star, std::max(h2x, h2t));
  out.gamma = 0.5 * d2(in_x, x_star, h2x);
  out.coef_delta = 0.5 * d1(in_eps, 0.0, step1(0.0));
  return out;
}

double lambda_value(double alpha, double beta, double gamma, double coef_delta) {
  const double radicand = beta * beta - gamma * alpha;
  if (!(radicand > 0.0)) {
    throw DeterminantConditionViolated("beta^2 - gamma*alpha = " + fmt(radicand) + " is not positive");
  }
  return (coef_delta * alpha + beta) / std::sqrt(radicand);
}

double lambda_value(const TheoremCoeffs& c) { return lambda_value(c.alpha, c.beta, c.gamma, c.coef_delta); }

std::string_view to_string(Branch b) noexcept { return b == Branch::S0 ? "S0" : "Z0"; }

double branch_invariance_residual(const FastSlowSystem& sys, const SpectralProfile& profile, Branch branch,
                                  const std::vector<double>& eps_samples) {
  auto angle = [&](double x) {
    const BranchAngles b = branch_angles(sys, profile, x);
    return branch == Branch::S0 ? b.theta1 : b.theta2;
  };
  const Interval dom = sys.domain;
  constexpr int n = 101;
  const double h = 1e-5 * (1.0 + dom.span());
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = dom.lo + dom.span() * i / (n - 1);
    // The branch is not a graph through the collision point.
    if (std::abs(x - profile.x_star) <= 4.0 * h) continue;
    const double xl = std::max(dom.lo, x - h);
    const double xr = std::min(dom.hi, x + h);
    const double th = angle(x);
    const double slope = angle_difference(angle(xr), angle(xl)) / (xr - xl);
    for (double e : eps_samples) {
      worst = std::max(worst, std::abs(phi(sys, x, th, e) - e * slope));
    }
  }
  return worst;
}

bool branch_invariance(const FastSlowSystem& sys, const SpectralProfile& profile, Branch branch,
                       const std::vector<double>& eps_samples, double tol) {
  return branch_invariance_residual(sys, profile, branch, eps_samples) <= tol;
}

std::string_view to_string(Stability s) noexcept { return s == Stability::attracting ? "attracting" : "repelling"; }

BranchStability classify_branch_stability(const FastSlowSystem& sys, const SpectralProfile& profile, double x) {
  if (at_star(profile, x)) throw PreconditionError("stability is undefined at the collision point x*");
  const BranchAngles b = branch_angles(sys, profile, x);
  const Matrix2 a = sys.jacobian(x, 0.0);
  const double k1 = dphi_dtheta(a, b.theta1);
  const double k2 = dphi_dtheta(a, b.theta2);
  if (std::abs(k1) < 1e-12 || std::abs(k2) < 1e-12) {
    throw DegenerateClassification("branch slope vanishes at x=" + fmt(x));
  }
  auto cls = [](double k) { return k < 0.0 ? Stability::attracting : Stability::repelling; };
  return {cls(k1), cls(k2)};
}

std::array<CorollaryCondition, 5> corollary_checks(const FastSlowSystem& sys, double x_star, double theta_star) {
  auto in_theta = [&](double t) { return phi(sys, x_star, t, 0.0); };
  auto in_x = [&](double x) { return phi(sys, x, theta_star, 0.0); };
  auto both = [&](double x, double t) { return phi(sys, x, t, 0.0); };
  const double p_t = dphi_dtheta(sys, x_star, theta_star, 0.0);
  const double p_x = d1(in_x, x_star, step1(x_star));
  const double p_tt = d2(in_theta, theta_star, step2(theta_star));
  const double p_xx = d2(in_x, x_star, step2(x_star));
  const double p_xt = d11(both, x_star, theta_star, std::max(step2(x_star), step2(theta_star)));
  const double det = p_tt * p_xx - p_xt * p_xt;
  return {{
      {"dPhi/dtheta = 0", p_t, std::abs(p_t) <= 1e-8},
      {"dPhi/dx = 0", p_x, std::abs(p_x) <= 1e-8},
      {"d2Phi/dtheta2 != 0", p_tt, std::abs(p_tt) >= 1e-8},
      {"d2Phi/dxdtheta != 0", p_xt, std::abs(p_xt) >= 1e-8},
      {"Hessian determinant < 0", det, det < 0.0},
  }};
}

namespace {

CollisionRoute route_at(const FastSlowSystem& sys, double x_star, double theta_star) {
  CollisionRoute r;
  r.theta_star = theta_star;
  r.coeffs = theorem_coeffs(sys, x_star, theta_star);
  try {
    r.lambda = lambda_value(r.coeffs);
  } catch (const DeterminantConditionViolated&) {
  }
  r.corollary = corollary_checks(sys, x_star, theta_star);
  return r;
}

}  // namespace

PolarAnalysis analyze_polar(const FastSlowSystem& sys, const SpectralProfile& profile) {
  PolarAnalysis out;
  out.x_star = profile.x_star;
  out.theta_star = select_theta_star(sys, profile);
  const double ts = out.theta_star;
  out.theta1 = [sys, profile](double x) { return branch_angles(sys, profile, x).theta1; };
  out.theta2 = [sys, profile](double x) { return branch_angles(sys, profile, x).theta2; };
  out.T1 = [sys, ts](double x) { return transcritical_coeffs(sys, x, ts).T1; };
  out.T2 = [sys, ts](double x) { return transcritical_coeffs(sys, x, ts).T2; };
  const CollisionRoute main = route_at(sys, profile.x_star, ts);
  out.alpha = main.coeffs.alpha;
  out.beta = main.coeffs.beta;
  out.gamma = main.coeffs.gamma;
  out.coef_delta = main.coeffs.coef_delta;
  out.lambda_value = main.lambda;
  out.corollary_report = main.corollary;
  out.s0_invariant = branch_invariance(sys, profile, Branch::S0);
  out.z0_invariant = branch_invariance(sys, profile, Branch::Z0);
  if (profile.geometric_multiplicity_at_star == 2) {
    const double alt = alternative_theta_star(sys, profile);
    if (std::abs(angle_difference(alt, ts)) > 1e-9) out.alternative = route_at(sys, profile.x_star, alt);
  }
  return out;
}

}  // namespace entryexit

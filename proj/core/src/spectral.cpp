#include "entryexit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "entryexit/errors.hpp"
#include "entryexit/numerics.hpp"

namespace entryexit {

namespace {

constexpr int kScanPoints = 2001;

double scale2(const Matrix2& a) {
  const double s = 1.0 + a.max_abs();
  return s * s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::vector<double> dedupe(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || std::abs(x - out.back()) > tol) out.push_back(x);
  }
  return out;
}

/// Vertex of the parabola through three equally spaced points.
double parabola_vertex(const std::function<double(double)>& f, double center, double h) {
  const double fm = f(center - h);
  const double f0 = f(center);
  const double fp = f(center + h);
  const double curv = fm - 2.0 * f0 + fp;
  if (!(curv > 0.0)) return center;
  return center + 0.5 * h * (fm - fp) / curv;
}

std::vector<double> roots_of(const std::function<double(double)>& f, const Interval& dom) {
  std::vector<double> xs(kScanPoints), fs(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    xs[i] = dom.lo + dom.span() * i / (kScanPoints - 1);
    fs[i] = f(xs[i]);
  }
  std::vector<double> roots;
  for (int i = 0; i < kScanPoints; ++i) {
    if (fs[i] == 0.0) roots.push_back(xs[i]);
    if (i + 1 < kScanPoints && fs[i] != 0.0 && fs[i + 1] != 0.0 && (fs[i] < 0.0) != (fs[i + 1] < 0.0)) {
      roots.push_back(numerics::solve_bracketed(f, xs[i], xs[i + 1], fs[i], fs[i + 1]));
    }
  }
  return dedupe(std::move(roots), 1e-9 * (1.0 + dom.span()));
}

}  // namespace

double discriminant(const FastSlowSystem& sys, double x, double eps) {
  const Matrix2 a = sys.jacobian(x, eps);
  // (f1 - g2)^2 + 4 f2 g1 equals tr^2 - 4 det without the cancellation.
  const double d = a.f1 - a.g2;
  return d * d + 4.0 * a.f2 * a.g1;
}

EigenPair eigenvalues_xi(const FastSlowSystem& sys, double x, double eps) {
  const Matrix2 a = sys.jacobian(x, eps);
  double disc = discriminant(sys, x, eps);
  if (disc < 0.0) {
    if (disc < -1e-14 * scale2(a)) {
      throw ComplexEigenvalues("eigenvalues of A(" + fmt(x) + "; " + fmt(eps) +
                               ") are complex (discriminant " + fmt(disc) + ")");
    }
    disc = 0.0;
  }
  const double tr = a.trace();
  const double root = std::sqrt(disc);
  // Larger-magnitude root first, the other from the determinant.
  if (tr >= 0.0) {
    const double hi = 0.5 * (tr + root);
    const double lo = hi != 0.0 ? a.det() / hi : 0.5 * (tr - root);
    return {hi, lo};
  }
  const double lo = 0.5 * (tr - root);
  const double hi = a.det() / lo;
  return {hi, lo};
}

std::vector<double> discriminant_zeros(const FastSlowSystem& sys, double eps) {
  const Interval dom = sys.domain;
  auto d = [&](double x) { return discriminant(sys, x, eps); };
  std::vector<double> xs(kScanPoints), ds(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    xs[i] = dom.lo + dom.span() * i / (kScanPoints - 1);
    ds[i] = d(xs[i]);
  }
  const double dx = dom.span() / (kScanPoints - 1);
  std::vector<double> zeros;
  for (int i = 0; i + 1 < kScanPoints; ++i) {
    const bool change = (ds[i] < 0.0) != (ds[i + 1] < 0.0);
    if (change) zeros.push_back(numerics::solve_bracketed(d, xs[i], xs[i + 1], ds[i], ds[i + 1]));
  }
  // Tangential zeros: D >= 0 touches zero without a sign change.
  for (int i = 1; i + 1 < kScanPoints; ++i) {
    if (ds[i] < 0.0 || ds[i] > ds[i - 1] || ds[i] > ds[i + 1]) continue;
    double xm = ds[i] == 0.0 ? xs[i] : numerics::minimize(d, xs[i - 1], xs[i + 1]);
    for (double h : {1e-3, 1e-4, 1e-5}) {
      xm = parabola_vertex(d, xm, h * (1.0 + std::abs(xm)));
    }
    if (ds[i] == 0.0 && std::abs(d(xm)) > std::abs(ds[i])) xm = xs[i];
    const double scale = scale2(sys.jacobian(xm, eps));
    if (std::abs(d(xm)) <= 1e-12 * scale && std::abs(xm - xs[i]) <= 2.0 * dx) zeros.push_back(xm);
  }
  return dedupe(std::move(zeros), 1e-7 * (1.0 + dom.span()));
}

double find_x_star(const FastSlowSystem& sys, double eps) {
  const std::vector<double> zeros = discriminant_zeros(sys, eps);
  if (zeros.empty()) {
    throw NoCollision("eigenvalues of A(x; " + fmt(eps) + ") never coincide on [" + fmt(sys.domain.lo) + ", " +
                      fmt(sys.domain.hi) + "]");
  }
  if (zeros.size() > 1) {
    throw UniquenessViolation("eigenvalues coincide at " + std::to_string(zeros.size()) + " points", zeros);
  }
  return zeros.front();
}

EigenvalueZeros find_eigenvalue_zeros(const FastSlowSystem& sys) {
  EigenvalueZeros out;
  const auto plus = roots_of([&](double x) { return eigenvalues_xi(sys, x, 0.0).xi_plus; }, sys.domain);
  const auto minus = roots_of([&](double x) { return eigenvalues_xi(sys, x, 0.0).xi_minus; }, sys.domain);
  if (plus.size() > 1) throw UniquenessViolation("xi_plus(.;0) has several zeros", plus);
  if (minus.size() > 1) throw UniquenessViolation("xi_minus(.;0) has several zeros", minus);
  if (!plus.empty()) out.x_plus = plus.front();
  if (!minus.empty()) out.x_minus = minus.front();
  return out;
}

int geometric_multiplicity(const FastSlowSystem& sys, double x, double eps, std::optional<double> tol) {
  const Matrix2 a = sys.jacobian(x, eps);
  const double disc = discriminant(sys, x, eps);
  if (std::abs(disc) > 1e-10 * scale2(a)) {
    throw PreconditionError("eigenvalues at x=" + fmt(x) + " are not coincident (discriminant " + fmt(disc) + ")");
  }
  const double xi = 0.5 * a.trace();
  const double t = tol.value_or(1e-9 * (1.0 + a.max_abs()));
  const double off = std::max({std::abs(a.f1 - xi), std::abs(a.g2 - xi), std::abs(a.f2), std::abs(a.g1)});
  return off <= t ? 2 : 1;
}

bool SpectralProfile::assumptions_hold() const {
  if (!assumption_report) return false;
  return std::all_of(assumption_report->begin(), assumption_report->end(),
                     [](const AssumptionItem& it) { return it.pass; });
}

namespace {

void fill_mu(SpectralProfile& p, const FastSlowSystem& sys) {
  const double xs = p.x_star;
  const double xi = p.xi_star;
  p.mu1 = [sys, xs, xi](double x) {
    if (x == xs) return xi;
    const EigenPair e = eigenvalues_xi(sys, x, 0.0);
    return x < xs ? e.xi_plus : e.xi_minus;
  };
  p.mu2 = [sys, xs, xi](double x) {
    if (x == xs) return xi;
    const EigenPair e = eigenvalues_xi(sys, x, 0.0);
    return x < xs ? e.xi_minus : e.xi_plus;
  };
}

}  // namespace

SpectralProfile spectral_profile(const FastSlowSystem& sys) {
  SpectralProfile p;
  p.x_star = find_x_star(sys, 0.0);
  p.xi_star = 0.5 * sys.jacobian(p.x_star, 0.0).trace();
  try {
    const EigenvalueZeros z = find_eigenvalue_zeros(sys);
    p.x_plus = z.x_plus;
    p.x_minus = z.x_minus;
  } catch (const UniquenessViolation&) {
    // Left absent; check_assumptions reports it.
  }
  p.geometric_multiplicity_at_star = geometric_multiplicity(sys, p.x_star, 0.0);
  fill_mu(p, sys);
  return p;
}

std::optional<double> balance_point(const std::function<double(double)>& mu, double x0, double x_hi) {
  if (!(mu(x0) < 0.0)) return std::nullopt;
  return numerics::first_balance(mu, x0, 0.0, x_hi, 0.01 * (x_hi - x0));
}

SpectralProfile check_assumptions(const FastSlowSystem& sys, double x0) {
  const Interval dom = sys.domain;
  if (!dom.contains(x0)) {
    throw PreconditionError("entry point x0=" + fmt(x0) + " lies outside [" + fmt(dom.lo) + ", " + fmt(dom.hi) + "]");
  }
  AssumptionReport rep;

  // 1: manifold invariance.
  {
    const InvarianceResidual inv = manifold_invariance_residual(sys);
    auto& it = rep[0];
    it.pass = inv.max_residual <= 1e-12;
    it.witnesses = {inv.max_residual, inv.x, inv.eps};
    it.detail = it.pass ? "Z(x,0,0,eps) vanishes on the sample grid"
                        : "Z(x,0,0,eps) = " + fmt(inv.max_residual) + " at x=" + fmt(inv.x) + ", eps=" + fmt(inv.eps);
  }

  // 2: real, non-decreasing eigenvalues.
  {
    auto& it = rep[1];
    it.pass = true;
    it.detail = "xi+ and xi- real and non-decreasing on a 1001-point grid";
    constexpr int n = 1001;
    std::optional<EigenPair> prev;
    for (int i = 0; i < n && it.pass; ++i) {
      const double x = dom.lo + dom.span() * i / (n - 1);
      try {
        const EigenPair e = eigenvalues_xi(sys, x, 0.0);
        if (prev && (e.xi_plus - prev->xi_plus < -1e-9 || e.xi_minus - prev->xi_minus < -1e-9)) {
          it.pass = false;
          it.detail = "eigenvalues decrease near x=" + fmt(x);
          it.witnesses = {x};
        }
        prev = e;
      } catch (const ComplexEigenvalues&) {
        it.pass = false;
        it.detail = "complex eigenvalues at x=" + fmt(x);
        it.witnesses = {x};
      }
    }
  }

  // 3: zeros of the eigenvalue curves exist and are unique.
  std::optional<double> xp, xm;
  {
    auto& it = rep[2];
    try {
      const EigenvalueZeros z = find_eigenvalue_zeros(sys);
      xp = z.x_plus;
      xm = z.x_minus;
      it.pass = xp.has_value() || xm.has_value();
      it.detail = "x+ = " + (xp ? fmt(*xp) : std::string("absent")) + ", x- = " + (xm ? fmt(*xm) : std::string("absent"));
      if (xp) it.witnesses.push_back(*xp);
      if (xm) it.witnesses.push_back(*xm);
    } catch (const UniquenessViolation& e) {
      it.pass = false;
      it.detail = e.what();
      it.witnesses = e.candidates();
    } catch (const ComplexEigenvalues& e) {
      it.pass = false;
      it.detail = e.what();
    }
  }

  // 4: unique collision point.
  std::optional<double> x_star;
  {
    auto& it = rep[3];
    std::vector<double> zeros;
    try {
      zeros = discriminant_zeros(sys, 0.0);
    } catch (const Error& e) {
      it.detail = e.what();
    }
    it.witnesses = zeros;
    it.pass = zeros.size() == 1;
    if (it.pass) {
      x_star = zeros.front();
      it.detail = "x* = " + fmt(*x_star);
    } else if (it.detail.empty()) {
      it.detail = zeros.empty() ? "eigenvalues never coincide" : "eigenvalues coincide at several points";
    }
  }

  SpectralProfile p;
  p.x_plus = xp;
  p.x_minus = xm;
  if (!x_star) {
    rep[4] = {false, "undefined without a unique x*", {}};
    rep[5] = {false, "undefined without a unique x*", {}};
    p.mu1 = [sys](double x) { return eigenvalues_xi(sys, x, 0.0).xi_plus; };
    p.mu2 = [sys](double x) { return eigenvalues_xi(sys, x, 0.0).xi_minus; };
    p.x_star = std::numeric_limits<double>::quiet_NaN();
    p.xi_star = std::numeric_limits<double>::quiet_NaN();
    p.assumption_report = rep;
    return p;
  }
  if (!(x0 < *x_star)) {
    throw PreconditionError("entry point x0=" + fmt(x0) + " must lie before the collision point x*=" + fmt(*x_star));
  }
  p.x_star = *x_star;
  p.xi_star = 0.5 * sys.jacobian(*x_star, 0.0).trace();
  p.geometric_multiplicity_at_star = geometric_multiplicity(sys, *x_star, 0.0);
  fill_mu(p, sys);

  // 5: the collision precedes each single-direction balance point.
  {
    auto& it = rep[4];
    const double inf = std::numeric_limits<double>::infinity();
    const double b1 = balance_point(p.mu1, x0, dom.hi).value_or(inf);
    const double b2 = balance_point(p.mu2, x0, dom.hi).value_or(inf);
    it.pass = *x_star < std::min(b1, b2);
    it.witnesses = {b1, b2, *x_star};
    it.detail = "x1(1) = " + fmt(b1) + ", x1(2) = " + fmt(b2) + ", x* = " + fmt(*x_star);
  }

  // 6: geometric multiplicity one at x*.
  {
    auto& it = rep[5];
    it.pass = p.geometric_multiplicity_at_star == 1;
    it.witnesses = {static_cast<double>(p.geometric_multiplicity_at_star), p.xi_star};
    it.detail = "eigenvalue " + fmt(p.xi_star) + " at x* has geometric multiplicity " +
                std::to_string(p.geometric_multiplicity_at_star);
  }
  p.assumption_report = rep;
  return p;
}

}  // namespace entryexit

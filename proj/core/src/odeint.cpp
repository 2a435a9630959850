#include "entryexit/odeint.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

#include "entryexit/polar.hpp"

namespace entryexit {

namespace {

using State = std::array<double, 4>;
using Rhs = std::function<State(const State&)>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// Step-size control (Hairer & Wanner, DOPRI5).
constexpr double kBeta = 0.04;
constexpr double kExpo1 = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

constexpr double kLinearRadius = 1e-150;

/// Per-component error scale atol_i + rtol_i * max(|y0_i|, |y1_i|).
struct Scales {
  State atol;
  State rtol;
};

double norm(const State& v, const State& y0, const State& y1, int dim, const Scales& sc) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double sk = sc.atol[i] + sc.rtol[i] * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = v[i] / sk;
    acc += q * q;
  }
  return std::sqrt(acc / dim);
}

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (const auto& [c, k] : terms) s += c * (*k)[i];
    out[i] += h * s;
  }
  return out;
}

double initial_step(const Rhs& f, const State& y, const State& f0, int dim, double span, const Scales& sc) {
  const double dn0 = norm(y, y, y, dim, sc);
  const double dn1 = norm(f0, y, y, dim, sc);
  double h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
  h = std::min(h, span);
  const State y1 = axpy(y, h, {{1.0, &f0}});
  const State f1 = f(y1);
  State df{};
  for (int i = 0; i < 4; ++i) df[i] = f1[i] - f0[i];
  const double dn2 = norm(df, y, y, dim, sc) / h;
  const double m = std::max(dn1, dn2);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / m, 0.2);
  return std::min({100.0 * h, h1, span});
}

/// Called after every accepted step; returning true stops the integration.
using StepHook = std::function<bool(const DenseStep&, const State& y_old, const State& y_new)>;

void run(const Rhs& f, int dim, State y, double t_end, const IntegratorOptions& o, const Scales& scales,
         double log_r_blowup,
         const std::function<double(const State&)>& log_radius, SimulationTrace& trace, const StepHook& hook) {
  double t = 0.0;
  State k1 = f(y);
  // The guess uses plain mixed scales; a zero direction component would
  // otherwise have a vanishing one.
  const Scales guess{{o.atol, o.atol, o.atol, o.atol}, {o.rtol, o.rtol, o.rtol, o.rtol}};
  double h = initial_step(f, y, k1, dim, t_end, guess);
  double facold = 1e-4;
  bool last_rejected = false;
  const double h_min = 1e-14 * t_end;
  std::size_t steps = 0;
  while (t < t_end) {
    if (++steps > o.max_steps) {
      throw StepSizeUnderflow(fmt::format("step budget of {} exhausted at x={:.6g}", o.max_steps, y[0]));
    }
    bool final_step = false;
    if (t + 1.01 * h >= t_end) {
      h = t_end - t;
      final_step = true;
    }
    if (h < h_min && !final_step) {
      throw StepSizeUnderflow(fmt::format(
          "step size {:.3g} underflowed at x={:.6g}; the problem is too stiff for the explicit integrator, "
          "try a smaller eps or a looser tolerance",
          h, y[0]));
    }
    const State k2 = f(axpy(y, h, {{a21, &k1}}));
    const State k3 = f(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const State k4 = f(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = f(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y_new = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const State k7 = f(y_new);
    State e{};
    for (int i = 0; i < 4; ++i) {
      e[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    double err = norm(e, y, y_new, dim, scales);
    if (!std::isfinite(err)) err = 1e10;
    const double fac11 = std::pow(err, kExpo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      facold = std::max(err, 1e-4);

      DenseStep d{t, h, {}};
      for (int i = 0; i < 4; ++i) {
        const double ydiff = y_new[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        d.coeff[0][i] = y[i];
        d.coeff[1][i] = ydiff;
        d.coeff[2][i] = bspl;
        d.coeff[3][i] = ydiff - h * k7[i] - bspl;
        d.coeff[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      const State y_old = y;
      t = final_step ? t_end : t + h;
      y = y_new;
      k1 = k7;
      ++trace.accepted;
      trace.append_step(d);
      trace.samples.push_back(trace.sample_from_state(t, y));
      last_rejected = false;
      if (hook && hook(d, y_old, y)) return;
      if (log_radius(y) > log_r_blowup) {
        trace.stopped_by_blowup = true;
        return;
      }
      h = h_new;
    } else {
      ++trace.rejected;
      h /= std::min(1.0 / kFacMin, fac11 / kSafe);
      last_rejected = true;
    }
  }
}

double stop_time(double x0, double x_stop, double eps, const Interval& dom) {
  if (!(eps > 0.0)) throw PreconditionError("eps must be positive");
  if (!(x0 < x_stop)) throw PreconditionError(fmt::format("x0={} must lie below x_stop={}", x0, x_stop));
  if (x_stop > dom.hi) throw PreconditionError(fmt::format("x_stop={} exceeds the domain end {}", x_stop, dom.hi));
  return (x_stop - x0) / eps;
}

void check_tolerances(const IntegratorOptions& o) {
  if (!(o.rtol > 0.0) || !(o.atol > 0.0)) throw PreconditionError("tolerances must be positive");
}

Rhs scaled_cartesian_rhs(const FastSlowSystem& sys, double eps) {
  return [&sys, eps](const State& y) {
    const double x = y[0], u1 = y[1], u2 = y[2];
    const double r = std::exp(y[3]);
    double w1, w2;
    if (r < kLinearRadius) {
      const Matrix2 a = sys.jacobian(x, eps);
      w1 = a.f1 * u1 + a.f2 * u2;
      w2 = a.g1 * u1 + a.g2 * u2;
    } else {
      w1 = sys.rhs_z1(x, r * u1, r * u2, eps) / r;
      w2 = sys.rhs_z2(x, r * u1, r * u2, eps) / r;
    }
    const double rho_dot = (u1 * w1 + u2 * w2) / (u1 * u1 + u2 * u2);
    return State{eps, w1 - rho_dot * u1, w2 - rho_dot * u2, rho_dot};
  };
}

// The angle is carried in units of pi so that the common branch angles 0 and
// -pi/2 are exact and cos/sin vanish exactly on them; otherwise the rounding
// of cos(-pi/2) is amplified by exp(50) once such a branch turns repelling.
Rhs polar_rhs(const FastSlowSystem& sys, double eps) {
  return [&sys, eps](const State& y) {
    const double x = y[0];
    const double c = boost::math::cos_pi(y[1]), s = boost::math::sin_pi(y[1]);
    const Matrix2 a = sys.jacobian(x, eps);
    double n1 = 0.0, n2 = 0.0;
    const double r = std::exp(y[2]);
    if (r >= kLinearRadius) {
      const double z1 = r * c, z2 = r * s;
      n1 = (sys.rhs_z1(x, z1, z2, eps) - (a.f1 * z1 + a.f2 * z2)) / r;
      n2 = (sys.rhs_z2(x, z1, z2, eps) - (a.g1 * z1 + a.g2 * z2)) / r;
    }
    const double angular = a.g1 * c * c + (a.g2 - a.f1) * c * s - a.f2 * s * s;
    const double radial = c * (a.f1 * c + a.f2 * s) + s * (a.g1 * c + a.g2 * s);
    return State{eps, (angular + (c * n2 - s * n1)) / std::numbers::pi, radial + (c * n1 + s * n2), 0.0};
  };
}

// Direction components are controlled relative to their own size: an
// exponentially small component along an invariant eigendirection decides
// where the trajectory leaves, so it may not be swamped by atol. log r is
// controlled absolutely at rtol, which is relative control of r itself.
Scales cartesian_scales(const IntegratorOptions& o) {
  constexpr double floor = std::numeric_limits<double>::min();
  return {{o.atol, floor, floor, o.rtol}, {o.rtol, o.rtol, o.rtol, 0.0}};
}

Scales polar_scales(const IntegratorOptions& o) {
  return {{o.atol, o.atol, o.rtol, 0.0}, {o.rtol, o.rtol, 0.0, 0.0}};
}

double log_radius_cartesian(const State& y) { return y[3] + 0.5 * std::log(y[1] * y[1] + y[2] * y[2]); }

}  // namespace

std::string_view to_string(EventKind k) noexcept { return k == EventKind::entry ? "entry" : "exit"; }

std::array<double, 4> DenseStep::operator()(double t) const noexcept {
  const double s = (t - t0) / h;
  const double s1 = 1.0 - s;
  std::array<double, 4> y{};
  for (int i = 0; i < 4; ++i) {
    y[i] = coeff[0][i] + s * (coeff[1][i] + s1 * (coeff[2][i] + s * (coeff[3][i] + s1 * coeff[4][i])));
  }
  return y;
}

Sample SimulationTrace::sample_from_state(double t, const std::array<double, 4>& y) const {
  Sample s{};
  s.t = t;
  s.x = y[0];
  if (coords_ == Coordinates::scaled_cartesian) {
    const double nu = std::hypot(y[1], y[2]);
    s.theta = reduce_angle(std::atan2(y[2], y[1]));
    s.log_r = y[3] + std::log(nu);
    const double scale = std::exp(y[3]);
    s.z1 = scale * y[1];
    s.z2 = scale * y[2];
  } else {
    s.theta = reduce_angle(std::numbers::pi * y[1]);
    s.log_r = y[2];
    const double r = std::exp(y[2]);
    s.z1 = r * boost::math::cos_pi(y[1]);
    s.z2 = r * boost::math::sin_pi(y[1]);
  }
  s.r = std::max(std::exp(s.log_r), 1e-300);
  if (on_manifold_) {
    s.z1 = s.z2 = s.r = 0.0;
    s.log_r = -std::numeric_limits<double>::infinity();
  }
  return s;
}

Sample SimulationTrace::at(double t) const {
  if (steps_.empty()) {
    if (!samples.empty() && t == samples.front().t) return samples.front();
    throw PreconditionError("trace has no integrated steps");
  }
  if (t < steps_.front().t0 || t > steps_.back().t0 + steps_.back().h * (1.0 + 1e-12)) {
    throw PreconditionError(fmt::format("t={} outside the integrated span", t));
  }
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                             [](double v, const DenseStep& d) { return v < d.t0; });
  if (it != steps_.begin()) --it;
  return sample_from_state(t, (*it)(t));
}

void SimulationTrace::write_csv(std::ostream& out) const {
  out << "t,x,z1,z2,r,theta,log_r,event\n";
  auto row = [&out](const Sample& s, std::string_view ev) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.t, s.x, s.z1, s.z2, s.r,
                       s.theta, s.log_r, ev);
  };
  std::size_t e = 0;
  std::vector<ExitEvent> evs = events;
  std::stable_sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) { return a.t_event < b.t_event; });
  for (const Sample& s : samples) {
    while (e < evs.size() && evs[e].t_event <= s.t) {
      row(at(evs[e].t_event), to_string(evs[e].kind));
      ++e;
    }
    row(s, "");
  }
  for (; e < evs.size(); ++e) row(at(evs[e].t_event), to_string(evs[e].kind));
}

SimulationTrace integrate_full(const FastSlowSystem& sys, FullState init, double eps, double x_stop,
                               const IntegratorOptions& opts) {
  check_tolerances(opts);
  const double t_end = stop_time(init.x, x_stop, eps, sys.domain);
  const double r0 = std::hypot(init.z1, init.z2);
  SimulationTrace trace(Coordinates::scaled_cartesian, r0 == 0.0);
  trace.eps = eps;
  trace.rtol = opts.rtol;
  trace.atol = opts.atol;
  const State y0 = r0 == 0.0 ? State{init.x, 1.0, 0.0, 0.0} : State{init.x, init.z1 / r0, init.z2 / r0, std::log(r0)};
  trace.samples.push_back(trace.sample_from_state(0.0, y0));
  const double blowup = r0 == 0.0 ? std::numeric_limits<double>::infinity() : std::log(opts.blowup_radius);
  run(scaled_cartesian_rhs(sys, eps), 4, y0, t_end, opts, cartesian_scales(opts), blowup, log_radius_cartesian, trace, nullptr);
  return trace;
}

SimulationTrace integrate_polar(const FastSlowSystem& sys, PolarState init, double eps, double x_stop,
                                const IntegratorOptions& opts) {
  check_tolerances(opts);
  if (init.r < 0.0) throw PreconditionError("initial radius must be non-negative");
  const double t_end = stop_time(init.x, x_stop, eps, sys.domain);
  SimulationTrace trace(Coordinates::polar, init.r == 0.0);
  trace.eps = eps;
  trace.rtol = opts.rtol;
  trace.atol = opts.atol;
  const State y0{init.x, init.theta / std::numbers::pi, init.r == 0.0 ? 0.0 : std::log(init.r), 0.0};
  trace.samples.push_back(trace.sample_from_state(0.0, y0));
  const double blowup = init.r == 0.0 ? std::numeric_limits<double>::infinity() : std::log(opts.blowup_radius);
  run(polar_rhs(sys, eps), 3, y0, t_end, opts, polar_scales(opts), blowup, [](const State& y) { return y[2]; }, trace, nullptr);
  return trace;
}

ExitDetection detect_exit(const FastSlowSystem& sys, FullState init, double eps, double cylinder_radius,
                          const IntegratorOptions& opts, std::optional<double> x_stop) {
  check_tolerances(opts);
  if (!(cylinder_radius > 0.0)) throw PreconditionError("cylinder radius must be positive");
  const double r0 = std::hypot(init.z1, init.z2);
  if (r0 == 0.0) throw PreconditionError("initial point lies on the critical manifold and never exits");
  const double t_end = stop_time(init.x, x_stop.value_or(sys.domain.hi), eps, sys.domain);
  SimulationTrace trace(Coordinates::scaled_cartesian);
  trace.eps = eps;
  trace.rtol = opts.rtol;
  trace.atol = opts.atol;
  const State y0{init.x, init.z1 / r0, init.z2 / r0, std::log(r0)};
  trace.samples.push_back(trace.sample_from_state(0.0, y0));

  const double log_delta = std::log(cylinder_radius);
  const double tol = 1e-10 * (1.0 + cylinder_radius);
  auto g = [&](const State& y) { return log_radius_cartesian(y) - log_delta; };

  std::optional<ExitEvent> entry, exit;
  if (r0 <= cylinder_radius) entry = ExitEvent{EventKind::entry, 0.0, init.x, 0.0};

  auto refine = [&](const DenseStep& d, EventKind kind) {
    double lo = d.t0, hi = d.t0 + d.h;
    const bool rising = kind == EventKind::exit;
    double t = hi;
    State y = d(hi);
    for (int it = 0; it < 200; ++it) {
      t = 0.5 * (lo + hi);
      y = d(t);
      const double gv = g(y);
      if (std::abs(std::exp(gv + log_delta) - cylinder_radius) <= tol) break;
      if ((gv < 0.0) == rising) lo = t; else hi = t;
    }
    const double r = std::exp(log_radius_cartesian(y));
    return ExitEvent{kind, t, y[0], std::abs(r - cylinder_radius)};
  };

  auto hook = [&](const DenseStep& d, const State& y_old, const State& y_new) {
    const double g0 = g(y_old), g1 = g(y_new);
    if (!entry) {
      if (g0 > 0.0 && g1 <= 0.0) entry = refine(d, EventKind::entry);
      if (!entry) return false;
    }
    if (g0 < 0.0 && g1 >= 0.0 && d.t0 + d.h > entry->t_event) {
      exit = refine(d, EventKind::exit);
      return true;
    }
    return false;
  };
  run(scaled_cartesian_rhs(sys, eps), 4, y0, t_end, opts, cartesian_scales(opts), std::log(opts.blowup_radius), log_radius_cartesian, trace,
      hook);
  if (entry) trace.events.push_back(*entry);
  if (!entry || !exit) {
    const std::string what =
        entry ? fmt::format("trajectory did not leave the cylinder of radius {} before x={}", cylinder_radius,
                            trace.samples.back().x)
              : fmt::format("trajectory never entered the cylinder of radius {}", cylinder_radius);
    throw NoExitObserved(what, std::move(trace));
  }
  trace.events.push_back(*exit);
  return {*entry, *exit, std::move(trace)};
}

}  // namespace entryexit

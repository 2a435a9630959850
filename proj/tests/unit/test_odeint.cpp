#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "entryexit/odeint.hpp"
#include "entryexit/polar.hpp"
#include "oracles.hpp"

using namespace entryexit;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;
const char* kBuiltins[] = {"one_way_coupled", "eps_coupled", "nonlinear"};

std::array<double, 4> linear_eps_coupled(double x, double eps) { return {x, -eps, x, -1.0}; }

int count_lines(const std::string& s, const std::string& needle) {
  int n = 0;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) n += line.ends_with(needle) ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("one-way system matches its closed form", "[odeint]") {
  const auto sys = make_builtin("one_way_coupled");
  const double eps = 0.01;
  const auto tr = integrate_full(sys, {-2, 1, 0}, eps, 2.0);
  REQUIRE(tr.samples.size() > 10);
  CHECK_THAT(tr.samples.back().x, WithinAbs(2.0, 1e-12));
  double worst = 0.0;
  auto check = [&](const Sample& s) {
    // log z1 = (x^2 - 4) / (2 eps). z1 reaches e^-200, so compare logs: the
    // difference is the relative error of z1.
    const double exact = (s.x * s.x - 4.0) / (2 * eps);
    worst = std::max(worst, std::abs(std::log(s.z1) - exact));
  };
  for (const auto& s : tr.samples) check(s);
  for (std::size_t i = 0; i + 1 < tr.samples.size(); ++i) check(tr.at(0.5 * (tr.samples[i].t + tr.samples[i + 1].t)));
  // Global error over ~2400 steps; same 100 rtol budget as the coordinate check.
  CHECK(worst <= 100 * IntegratorOptions{}.rtol);
  CHECK(tr.accepted == tr.samples.size() - 1);
}

TEST_CASE("manifold initial data stays on the manifold", "[odeint]") {
  for (const char* name : kBuiltins) {
    const auto sys = make_builtin(name);
    const auto tr = integrate_full(sys, {-2, 0, 0}, 0.05, 2.0);
    for (const auto& s : tr.samples) {
      CHECK(s.z1 == 0.0);
      CHECK(s.z2 == 0.0);
      CHECK(s.r == 0.0);
    }
    CHECK(tr.at(10.0).z1 == 0.0);
  }
}

TEST_CASE("polar integration keeps the invariant line", "[odeint]") {
  const auto sys = make_builtin("one_way_coupled");
  const auto tr = integrate_polar(sys, {-2, -kPi / 2, 0.01}, 0.01, 2.0);
  for (const auto& s : tr.samples) {
    INFO("x=" << s.x);
    CHECK(std::abs(angle_difference(s.theta, -kPi / 2)) <= 1e-12);
  }
}

TEST_CASE("polar angle relaxes onto the attracting branch", "[odeint]") {
  const auto sys = make_builtin("eps_coupled");
  const auto tr = integrate_polar(sys, {-2, -kPi / 2 + 0.1, 0.05}, 0.01, -1.0);
  const double dev_start = std::abs(angle_difference(tr.samples.front().theta, -kPi / 2));
  const double dev_mid = std::abs(angle_difference(tr.at(50.0).theta, -kPi / 2));  // x = -1.5
  CHECK(dev_start == Catch::Approx(0.1));
  CHECK(dev_mid < 0.05);
}

TEST_CASE("trace invariants", "[odeint]") {
  const auto sys = make_builtin("eps_coupled");
  const auto tr = integrate_full(sys, {-2, 1, 1}, 0.01, 2.0);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    CHECK(tr.samples[i].t > tr.samples[i - 1].t);
    CHECK(tr.samples[i].x > tr.samples[i - 1].x);
  }
  for (const auto& s : tr.samples) {
    CHECK(s.theta >= -kPi / 2);
    CHECK(s.theta < kPi / 2);
    CHECK(s.r >= 0.0);
  }
  const auto& mid = tr.samples[tr.samples.size() / 2];
  const auto again = tr.at(mid.t);
  CHECK_THAT(again.z1, WithinAbs(mid.z1, 1e-12 * (1 + std::abs(mid.z1))));
  CHECK_THROWS_AS(tr.at(tr.t_end() + 1.0), PreconditionError);
}

TEST_CASE("argument validation", "[odeint]") {
  const auto sys = make_builtin("eps_coupled");
  CHECK_THROWS_AS(integrate_full(sys, {-2, 1, 1}, 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(integrate_full(sys, {-2, 1, 1}, 0.01, 5.0), PreconditionError);
  CHECK_THROWS_AS(integrate_full(sys, {-2, 1, 1}, 0.01, -3.0), PreconditionError);
  IntegratorOptions bad;
  bad.rtol = 0.0;
  CHECK_THROWS_AS(integrate_full(sys, {-2, 1, 1}, 0.01, 1.0, bad), PreconditionError);
  CHECK_THROWS_AS(integrate_polar(sys, {-2, 0, -1}, 0.01, 1.0), PreconditionError);
  CHECK_THROWS_AS(detect_exit(sys, {-2, 0, 0}, 0.01), PreconditionError);
  CHECK_THROWS_AS(detect_exit(sys, {-2, 1, 1}, 0.01, 0.0), PreconditionError);
}

TEST_CASE("step budget exhaustion is reported", "[odeint]") {
  IntegratorOptions o;
  o.max_steps = 10;
  CHECK_THROWS_AS(integrate_full(make_builtin("eps_coupled"), {-2, 1, 1}, 0.01, 2.0, o), StepSizeUnderflow);
}

TEST_CASE("blow-up guard stops the integration", "[odeint]") {
  IntegratorOptions o;
  o.blowup_radius = 10.0;
  const auto tr = integrate_full(make_builtin("one_way_coupled"), {1, 1, 0}, 0.01, 4.0, o);
  CHECK(tr.stopped_by_blowup);
  CHECK(tr.samples.back().x < 4.0);
  CHECK(tr.samples.back().r > 10.0);
  CHECK(tr.samples[tr.samples.size() - 2].r <= 10.0);
}

TEST_CASE("cylinder exit", "[odeint]") {
  const auto sys = make_builtin("eps_coupled");
  const auto d = detect_exit(sys, {-2, 1, 1}, 0.01);
  CHECK(d.entry.kind == EventKind::entry);
  CHECK(d.exit.kind == EventKind::exit);
  CHECK(d.entry.t_event < d.exit.t_event);
  CHECK(d.exit.residual <= 1e-10 * 1.1);
  CHECK(d.entry.residual <= 1e-10 * 1.1);
  CHECK(d.exit.x_event >= 1.698);
  CHECK(d.exit.x_event <= 1.738);
  // r falls through the radius at entry and rises through it at exit.
  CHECK(d.trace.at(d.entry.t_event - 1e-3).r > 0.1);
  CHECK(d.trace.at(d.entry.t_event + 1e-3).r < 0.1);
  CHECK(d.trace.at(d.exit.t_event - 1e-3).r < 0.1);
  // Integration ends with the step that contains the exit.
  CHECK(d.trace.t_end() >= d.exit.t_event);
  CHECK(d.trace.samples[d.trace.samples.size() - 2].t < d.exit.t_event);
  CHECK(d.trace.events.size() == 2);

  const auto oracle_x = oracle::linear_exit_rk4([](double x) { return linear_eps_coupled(x, 0.01); }, -2, {1, 1},
                                                0.01, 0.1, 0.01, 4.0);
  CHECK_THAT(d.exit.x_event, WithinAbs(oracle_x, 1e-6));

  const auto one = detect_exit(make_builtin("one_way_coupled"), {-2, 1, 1}, 0.01);
  CHECK_THAT(one.exit.x_event, WithinAbs(2.0, 0.05));
}

TEST_CASE("starting inside the cylinder", "[odeint]") {
  const auto d = detect_exit(make_builtin("eps_coupled"), {-2, 0.01, 0}, 0.01);
  CHECK(d.entry.t_event == 0.0);
  CHECK(d.entry.x_event == -2.0);
  CHECK(d.entry.residual == 0.0);
  CHECK(d.exit.x_event > 1.0);
}

TEST_CASE("no exit before the stop point", "[odeint]") {
  try {
    detect_exit(make_builtin("one_way_coupled"), {-2, 1, 1}, 0.01, 0.1, {}, 1.0);
    FAIL("expected NoExitObserved");
  } catch (const NoExitObserved& e) {
    CHECK_FALSE(e.trace().samples.empty());
    CHECK_THAT(e.trace().samples.back().x, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("trace CSV", "[odeint]") {
  const auto d = detect_exit(make_builtin("eps_coupled"), {-2, 1, 1}, 0.05);
  std::ostringstream os;
  d.trace.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.starts_with("t,x,z1,z2,r,theta,log_r,event\n"));
  CHECK(count_lines(csv, ",entry") == 1);
  CHECK(count_lines(csv, ",exit") == 1);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  double prev_t = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    const double t = std::stod(line.substr(0, line.find(',')));
    CHECK(t >= prev_t);
    prev_t = t;
    ++rows;
  }
  CHECK(rows == static_cast<int>(d.trace.samples.size()) + 2);
}

TEST_CASE("exit point converges under tolerance halving", "[odeint][property]") {
  for (const char* name : kBuiltins) {
    const auto sys = make_builtin(name);
    IntegratorOptions a, b;
    b.rtol = a.rtol / 2;
    b.atol = a.atol / 2;
    const double xa = detect_exit(sys, {-2, 1, 1}, 0.01, 0.1, a).exit.x_event;
    const double xb = detect_exit(sys, {-2, 1, 1}, 0.01, 0.1, b).exit.x_event;
    INFO(name << " " << xa << " " << xb);
    CHECK(std::abs(xa - xb) <= 10 * a.rtol * sys.domain.span());
  }
}

TEST_CASE("full and polar integrations agree", "[odeint][property]") {
  for (const char* name : kBuiltins) {
    const auto sys = make_builtin(name);
    IntegratorOptions o;
    const double eps = 0.05;
    const FullState full0{-2, 0.3, 0.4};
    const auto full = integrate_full(sys, full0, eps, 1.0, o);
    const auto pol = integrate_polar(sys, {-2, std::atan2(0.4, 0.3), 0.5}, eps, 1.0, o);
    double worst = 0.0;
    const double t_hi = std::min(full.t_end(), pol.t_end());
    for (const auto& s : full.samples) {
      if (s.t > t_hi) break;
      const auto p = pol.at(s.t);
      const double scale = 100 * (o.rtol * s.r + o.atol);
      worst = std::max({worst, std::abs(p.z1 - s.z1) / scale, std::abs(p.z2 - s.z2) / scale});
    }
    INFO(name << " worst ratio " << worst);
    CHECK(worst <= 1.0);
  }
}

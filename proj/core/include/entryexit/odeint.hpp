#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "entryexit/errors.hpp"
#include "entryexit/system.hpp"

namespace entryexit {

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double blowup_radius = 1e6;
  std::size_t max_steps = 5'000'000;
};

/// Cartesian initial data (x0, z1, z2).
struct FullState {
  double x;
  double z1;
  double z2;
};

/// Cylindrical initial data (x0, theta, r).
struct PolarState {
  double x;
  double theta;
  double r;
};

struct Sample {
  double t;
  double x;
  double z1;
  double z2;
  double r;
  double theta;  // reduced into [-pi/2, pi/2)
  double log_r;
};

enum class EventKind { entry, exit };
std::string_view to_string(EventKind k) noexcept;

struct ExitEvent {
  EventKind kind = EventKind::entry;
  double t_event = 0.0;
  double x_event = 0.0;
  double residual = 0.0;  // |r - cylinder_radius| at the refined time
};

/// Continuous extension of one accepted Dormand-Prince step (order 4).
struct DenseStep {
  double t0;
  double h;
  std::array<std::array<double, 4>, 5> coeff;

  std::array<double, 4> operator()(double t) const noexcept;
};

enum class Coordinates { scaled_cartesian, polar };

/// One integration: accepted-step samples plus the dense solution between them.
class SimulationTrace {
 public:
  std::vector<Sample> samples;
  std::vector<ExitEvent> events;
  double eps = 0.0;
  double rtol = 0.0;
  double atol = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool stopped_by_blowup = false;

  SimulationTrace() = default;
  explicit SimulationTrace(Coordinates coords, bool on_manifold = false)
      : coords_(coords), on_manifold_(on_manifold) {}

  /// Interpolated sample at fast time t within the integrated span.
  Sample at(double t) const;
  double t_begin() const noexcept { return samples.empty() ? 0.0 : samples.front().t; }
  double t_end() const noexcept { return samples.empty() ? 0.0 : samples.back().t; }

  void append_step(const DenseStep& step) { steps_.push_back(step); }
  const std::vector<DenseStep>& steps() const noexcept { return steps_; }
  Sample sample_from_state(double t, const std::array<double, 4>& y) const;

  /// CSV with header t,x,z1,z2,r,theta,log_r,event.
  void write_csv(std::ostream& out) const;

 private:
  Coordinates coords_ = Coordinates::scaled_cartesian;
  bool on_manifold_ = false;  // started at z = 0, so z stays 0
  std::vector<DenseStep> steps_;
};

/// Full three-dimensional system, integrated in the scaled coordinates
/// (x, z/|z|, log|z|) so deep contraction never underflows.
SimulationTrace integrate_full(const FastSlowSystem& sys, FullState init, double eps, double x_stop,
                               const IntegratorOptions& opts = {});

/// Cylindrical form: x' = eps, theta' = Phi + nonlinear remainder,
/// (log r)' = radial rate + nonlinear remainder; theta is unwrapped.
SimulationTrace integrate_polar(const FastSlowSystem& sys, PolarState init, double eps, double x_stop,
                                const IntegratorOptions& opts = {});

struct ExitDetection {
  ExitEvent entry;
  ExitEvent exit;
  SimulationTrace trace;
};

/// Raised when the trajectory never leaves the cylinder before the domain end.
class NoExitObserved : public DomainError {
 public:
  NoExitObserved(const std::string& what, SimulationTrace trace)
      : DomainError(what), trace_(std::move(trace)) {}
  const SimulationTrace& trace() const noexcept { return trace_; }

 private:
  SimulationTrace trace_;
};

/// First entry into and subsequent exit from the cylinder r = cylinder_radius.
/// Starting inside synthesises the entry at t = 0.
ExitDetection detect_exit(const FastSlowSystem& sys, FullState init, double eps, double cylinder_radius = 0.1,
                          const IntegratorOptions& opts = {}, std::optional<double> x_stop = std::nullopt);

}  // namespace entryexit

#pragma once

// Dormand–Prince 5(4) with continuous extension of order 4, event location on
// the interpolant and rejection of steps that leave the admissible state set.

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tunnel {

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

/// Returns false for states the step controller must not accept.
using StateValidator = std::function<bool(std::span<const double> y)>;

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  ///< 0 selects the step automatically
  long max_steps = 10'000'000;
};

struct OdeEvent {
  std::function<double(double t, std::span<const double> y)> g;
  int direction = 0;  ///< +1: g crosses upward in integration order, -1 downward, 0 either
  bool terminal = false;
};

struct EventHit {
  int index = 0;
  double t = 0.0;
  std::vector<double> y;
};

/// One accepted step with its dense-output coefficients.
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<double> r;  // 5 blocks of n coefficients
};

class DenseSolution {
 public:
  DenseSolution() = default;
  explicit DenseSolution(std::size_t n) : n_(n) {}

  std::size_t size() const { return n_; }
  bool empty() const { return steps_.empty(); }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }

  /// Interpolated state; t must lie in the covered interval (clamped within 1e-12).
  std::vector<double> operator()(double t) const;
  void eval(double t, std::span<double> out) const;

  /// Grid of accepted step endpoints (including the start), in integration order.
  const std::vector<double>& grid_times() const { return times_; }
  const std::vector<std::vector<double>>& grid_states() const { return states_; }

  void start(double t0, std::vector<double> y0);
  void push(DenseStep step, double t1, std::vector<double> y1);
  /// Cuts the solution at t inside the last step (terminal events).
  void truncate(double t, std::vector<double> y);

 private:
  const DenseStep& locate(double t) const;

  std::size_t n_ = 0;
  double t_begin_ = 0.0, t_end_ = 0.0;
  std::vector<DenseStep> steps_;
  std::vector<double> times_;
  std::vector<std::vector<double>> states_;
};

enum class OdeStatus { Completed, EventStop, StepUnderflow, MaxSteps };

struct OdeResult {
  OdeStatus status = OdeStatus::Completed;
  std::string message;
  DenseSolution solution;
  std::vector<EventHit> events;
  long accepted = 0;
  long rejected = 0;

  bool ok() const { return status == OdeStatus::Completed || status == OdeStatus::EventStop; }
};

/// Integrates from t0 to t_end (either direction). Right-hand sides may throw
/// std::domain_error; such trial steps are rejected like invalid states.
OdeResult dopri5(const OdeRhs& rhs, double t0, std::vector<double> y0, double t_end, const OdeOptions& opts,
                 const StateValidator& valid = {}, const std::vector<OdeEvent>& events = {});

}  // namespace tunnel

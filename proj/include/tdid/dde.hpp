#pragma once

#include <deque>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tdid/model.hpp"

namespace tdid {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Interp { Linear, CubicHermite };

struct SimConfig {
  double h = 1e-3;        // step size, s
  double t_end = 1.0;     // horizon, s
  int record_stride = 1;  // emit every Nth step
  Interp interpolation = Interp::Linear;

  void validate() const;
};

/// Dense past-trajectory store for delayed-state lookups. Samples are spaced
/// exactly h apart starting at t0; times before t0 delegate to init_fn.
/// Derivatives are kept alongside values so cubic-hermite lookups are exact
/// at the stored nodes.
class HistoryBuffer {
 public:
  HistoryBuffer(double t0, double h, std::function<Vector(double)> init_fn,
                Interp mode = Interp::Linear);

  /// Append the sample at the next grid time together with its derivative.
  void append(const Vector& value, const Vector& deriv);

  /// Value at t: init_fn for t < t0, exact sample on the grid, interpolation
  /// in between. Throws SimError past the last sample.
  Vector lookup(double t) const;

  double start_time() const { return t0_; }
  double last_time() const { return t0_ + h_ * static_cast<double>(first_index_ + values_.size() - 1); }
  size_t size() const { return values_.size(); }

  /// Forget samples older than t (keeps one node at or before t).
  void drop_before(double t);

 private:
  double t0_;
  double h_;
  Interp mode_;
  std::function<Vector(double)> init_;
  size_t first_index_ = 0;  // grid index of values_.front()
  std::deque<Vector> values_;
  std::deque<Vector> derivs_;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> x;

  size_t rows() const { return t.size(); }
};

/// Delayed right-hand side: f(t, x(t), lookback) where lookback(s) returns the
/// state at an earlier time s <= t. Terms with zero delay must use the passed
/// current state, not the lookback.
using DelayedRhs = std::function<Vector(
    double t, const Vector& x, const std::function<Vector(double)>& lookback)>;

/// Observer invoked after the state at t is final; lookback resolves earlier
/// times through the integrator's history buffer.
using StepObserver = std::function<void(
    double t, const Vector& x, const std::function<Vector(double)>& lookback)>;

/// Classical fixed-step RK4 over [0, t_end] with history interpolation for
/// the delayed stage arguments. Every positive delay must be >= h.
/// `observer` fires at recorded steps, `per_step` at every step.
Trajectory integrate(const DelayedRhs& rhs,
                     const std::function<Vector(double)>& init,
                     const SimConfig& cfg, const std::vector<double>& delays,
                     const StepObserver& observer = nullptr,
                     const StepObserver& per_step = nullptr);

}  // namespace tdid

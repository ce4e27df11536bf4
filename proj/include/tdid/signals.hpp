#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "tdid/dde.hpp"
#include "tdid/model.hpp"

namespace tdid {

struct SineTerm {
  double amplitude = 0.0;
  double omega = 0.0;  // rad/s
  double phase = 0.0;  // rad
};

struct PulseTerm {
  double amplitude = 1.0;
  double period = 1.0;   // s
  double duty = 0.5;     // high fraction of each period, in (0,1)
};

struct InputSpec {
  std::vector<SineTerm> sines;
  std::optional<PulseTerm> pulse;
  double offset = 0.0;

  void validate() const;
};

/// Sum of sines plus pulse plus offset; the pulse is high during the first
/// duty*period of each period. Returns 0 for t < 0 (pre-start convention).
double eval_input(const InputSpec& spec, double t);

/// Integrate the plant alone under the configured input; `history` supplies
/// the initial state history (default all-zero).
Trajectory simulate_plant(const PlantModel& plant, const InputSpec& input,
                          const SimConfig& sim,
                          const std::function<Vector(double)>& history = nullptr);

/// Uniformly sampled regressor time series.
struct PhiSeries {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vector> samples;

  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].size()); }
  double duration() const {
    return samples.empty() ? 0.0 : dt * static_cast<double>(samples.size() - 1);
  }
};

/// Stack col{x(t-tau_i)..., phi(x(t-tau_i))..., psi(y(t-tau_i))..., u(t-tau_i)...}
/// along a trajectory, sampled on [t_start, t_end] at step dt.
/// state(t) must cover [t_start - max delay, t_end].
PhiSeries build_regressor(const PlantModel& plant,
                          const std::function<Vector(double)>& state,
                          const std::function<double(double)>& input,
                          double t_start, double t_end, double dt);

struct PEReport {
  double window_C = 0.0;
  double alpha = 0.0;  // min Gramian eigenvalue over all windows
  int gramian_dim = 0;
  std::vector<std::pair<double, double>> per_window;  // (window start, min eig)
};

/// Sliding-window Gramian int_t^{t+C} Phi Phi^T ds by trapezoid at the series
/// step; windows start every window_stride (default C/10).
PEReport pe_check(const PhiSeries& phi, double window_C,
                  double window_stride = 0.0);

}  // namespace tdid

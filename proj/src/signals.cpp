#include "tdid/signals.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "tdid/dde.hpp"

namespace tdid {

void InputSpec::validate() const {
  for (const auto& s : sines)
    if (!std::isfinite(s.amplitude) || !std::isfinite(s.omega) ||
        !std::isfinite(s.phase))
      throw ModelError("non-finite sine parameters");
  if (pulse) {
    if (!(pulse->period > 0)) throw ModelError("pulse period must be positive");
    if (!(pulse->duty > 0 && pulse->duty < 1))
      throw ModelError("pulse duty must be in (0,1)");
  }
  if (!std::isfinite(offset)) throw ModelError("non-finite input offset");
}

double eval_input(const InputSpec& spec, double t) {
  if (t < 0) return 0.0;
  double u = spec.offset;
  for (const auto& s : spec.sines)
    u += s.amplitude * std::sin(s.omega * t + s.phase);
  if (spec.pulse) {
    const double frac = t / spec.pulse->period -
                        std::floor(t / spec.pulse->period);
    if (frac < spec.pulse->duty) u += spec.pulse->amplitude;
  }
  return u;
}

Trajectory simulate_plant(const PlantModel& plant, const InputSpec& input,
                          const SimConfig& sim,
                          const std::function<Vector(double)>& history) {
  plant.validate();
  input.validate();
  auto init = history ? history
                      : std::function<Vector(double)>([&plant](double) {
                          return Vector(Vector::Zero(plant.n));
                        });
  DelayedRhs rhs = [&plant, &input](double t, const Vector& x,
                                    const std::function<Vector(double)>& lookback) {
    Vector dx = Vector::Zero(plant.n);
    for (int i = 0; i < plant.slots(); ++i) {
      const double tau = plant.delays[i];
      const Vector xd = tau == 0.0 ? x : lookback(t - tau);
      dx.noalias() += plant.A[i] * xd;
      dx.noalias() += plant.D[i] * eval_phi(plant, xd);
      dx.noalias() += plant.G[i] * eval_psi(plant, plant.C.dot(xd));
      dx.noalias() += plant.B[i] * eval_input(input, t - tau);
    }
    return dx;
  };
  return integrate(rhs, init, sim, plant.delays);
}

PhiSeries build_regressor(const PlantModel& plant,
                          const std::function<Vector(double)>& state,
                          const std::function<double(double)>& input,
                          double t_start, double t_end, double dt) {
  if (!(dt > 0) || !(t_end > t_start))
    throw ModelError("bad regressor sampling range");
  const int k1 = plant.slots();
  const int dim = k1 * (plant.n + plant.l + plant.m + 1);
  const auto count = static_cast<size_t>(std::floor((t_end - t_start) / dt + 1e-9)) + 1;

  PhiSeries series;
  series.t0 = t_start;
  series.dt = dt;
  series.samples.reserve(count);
  for (size_t j = 0; j < count; ++j) {
    const double t = t_start + dt * static_cast<double>(j);
    Vector phi(dim);
    int at = 0;
    std::vector<Vector> xs(k1);
    for (int i = 0; i < k1; ++i) xs[i] = state(t - plant.delays[i]);
    for (int i = 0; i < k1; ++i) {
      phi.segment(at, plant.n) = xs[i];
      at += plant.n;
    }
    for (int i = 0; i < k1; ++i) {
      phi.segment(at, plant.l) = eval_phi(plant, xs[i]);
      at += plant.l;
    }
    for (int i = 0; i < k1; ++i) {
      phi.segment(at, plant.m) = eval_psi(plant, plant.C.dot(xs[i]));
      at += plant.m;
    }
    for (int i = 0; i < k1; ++i) phi[at++] = input(t - plant.delays[i]);
    series.samples.push_back(std::move(phi));
  }
  return series;
}

PEReport pe_check(const PhiSeries& phi, double window_C, double window_stride) {
  if (phi.samples.size() < 2) throw ModelError("regressor series too short");
  if (window_C > phi.duration() + 1e-12)
    throw ModelError("PE window longer than the regressor series");
  if (window_stride <= 0) window_stride = window_C / 10.0;

  const int dim = phi.dim();
  const double dt = phi.dt;
  const auto win_len = static_cast<size_t>(std::round(window_C / dt));
  const auto stride = std::max<size_t>(1, static_cast<size_t>(std::round(window_stride / dt)));

  PEReport report;
  report.window_C = window_C;
  report.gramian_dim = dim;
  report.alpha = std::numeric_limits<double>::infinity();

  for (size_t start = 0; start + win_len < phi.samples.size(); start += stride) {
    Matrix gram = Matrix::Zero(dim, dim);
    for (size_t j = start; j <= start + win_len; ++j) {
      const double w = (j == start || j == start + win_len) ? 0.5 : 1.0;
      gram.noalias() += (w * dt) * (phi.samples[j] * phi.samples[j].transpose());
    }
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    const double t_win = phi.t0 + dt * static_cast<double>(start);
    report.per_window.emplace_back(t_win, min_eig);
    report.alpha = std::min(report.alpha, min_eig);
  }
  if (report.per_window.empty())
    throw ModelError("PE window longer than the regressor series");
  return report;
}

}  // namespace tdid

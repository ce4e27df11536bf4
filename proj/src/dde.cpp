#include "tdid/dde.hpp"

#include <cmath>
#include <sstream>

namespace tdid {

void SimConfig::validate() const {
  if (!(h > 0)) throw SimError("step size must be positive");
  if (!(t_end > 0)) throw SimError("horizon must be positive");
  if (record_stride < 1) throw SimError("record_stride must be >= 1");
}

HistoryBuffer::HistoryBuffer(double t0, double h,
                             std::function<Vector(double)> init_fn, Interp mode)
    : t0_(t0), h_(h), mode_(mode), init_(std::move(init_fn)) {
  if (!(h > 0)) throw SimError("history step must be positive");
  if (!init_) throw SimError("history needs an initial-history function");
}

void HistoryBuffer::append(const Vector& value, const Vector& deriv) {
  values_.push_back(value);
  derivs_.push_back(deriv);
}

void HistoryBuffer::drop_before(double t) {
  while (values_.size() > 1 &&
         t0_ + h_ * static_cast<double>(first_index_ + 1) <= t) {
    values_.pop_front();
    derivs_.pop_front();
    ++first_index_;
  }
}

Vector HistoryBuffer::lookup(double t) const {
  if (t < t0_) return init_(t);
  if (values_.empty()) throw SimError("history lookup before any sample");

  const double g = (t - t0_) / h_;
  const size_t last = first_index_ + values_.size() - 1;
  const double j_round = std::round(g);
  if (std::abs(g - j_round) <= 1e-12 * std::max(1.0, std::abs(g))) {
    const auto j = static_cast<long long>(j_round);
    if (j < static_cast<long long>(first_index_) ||
        j > static_cast<long long>(last)) {
      std::ostringstream os;
      os << "history lookup at t=" << t << " outside the recorded range";
      throw SimError(os.str());
    }
    return values_[static_cast<size_t>(j) - first_index_];
  }

  const auto j0 = static_cast<long long>(std::floor(g));
  if (j0 < static_cast<long long>(first_index_) ||
      j0 + 1 > static_cast<long long>(last)) {
    std::ostringstream os;
    os << "history lookup at t=" << t << " outside the recorded range";
    throw SimError(os.str());
  }
  const size_t i0 = static_cast<size_t>(j0) - first_index_;
  const double s = g - std::floor(g);  // in (0,1)
  const Vector& y0 = values_[i0];
  const Vector& y1 = values_[i0 + 1];
  if (mode_ == Interp::Linear) return (1.0 - s) * y0 + s * y1;

  // cubic Hermite on [t_j, t_j+h] with stored endpoint derivatives
  const Vector& d0 = derivs_[i0];
  const Vector& d1 = derivs_[i0 + 1];
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * y0 + h_ * h10 * d0 + h01 * y1 + h_ * h11 * d1;
}

Trajectory integrate(const DelayedRhs& rhs,
                     const std::function<Vector(double)>& init,
                     const SimConfig& cfg, const std::vector<double>& delays,
                     const StepObserver& observer, const StepObserver& per_step) {
  cfg.validate();
  double max_delay = 0.0;
  for (double tau : delays) {
    if (tau == 0.0) continue;
    if (tau < cfg.h - 1e-12 * cfg.h) {
      std::ostringstream os;
      os << "delay " << tau << " is smaller than the step size " << cfg.h;
      throw SimError(os.str());
    }
    max_delay = std::max(max_delay, tau);
  }

  const double h = cfg.h;
  const auto n_steps = static_cast<long long>(std::ceil(cfg.t_end / h - 1e-9));

  HistoryBuffer buf(0.0, h, init, cfg.interpolation);
  auto lookback = [&buf](double s) { return buf.lookup(s); };

  Trajectory out;
  out.t.reserve(static_cast<size_t>(n_steps / cfg.record_stride + 2));
  out.x.reserve(out.t.capacity());

  Vector x = init(0.0);
  double t = 0.0;
  for (long long j = 0;; ++j) {
    const Vector k1 = rhs(t, x, lookback);
    buf.append(x, k1);

    if (per_step) per_step(t, x, lookback);
    if (j % cfg.record_stride == 0 || j == n_steps) {
      out.t.push_back(t);
      out.x.push_back(x);
      if (observer) observer(t, x, lookback);
    }
    if (j == n_steps) break;

    const Vector k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1, lookback);
    const Vector k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2, lookback);
    const Vector k4 = rhs(t + h, x + h * k3, lookback);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = h * static_cast<double>(j + 1);

    if (!x.allFinite()) {
      std::ostringstream os;
      os << "state became non-finite at t=" << t;
      throw SimError(os.str());
    }
    if (max_delay > 0 && j % 1024 == 0) buf.drop_before(t - max_delay - 2 * h);
  }
  return out;
}

}  // namespace tdid

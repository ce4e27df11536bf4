#include "tdid/identifier.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace tdid {

SlotGains SlotGains::scaled_identity(double gamma, int n, int l, int m) {
  SlotGains g;
  g.A = gamma * Matrix::Identity(n, n);
  g.D = gamma * Matrix::Identity(l, l);
  g.G = gamma * Matrix::Identity(m, m);
  g.B = gamma;
  return g;
}

std::vector<Matrix> IdentifierConfig::effective_injection(const RowVector& C) const {
  std::vector<Matrix> out;
  if (injection == InjectionMode::Output) {
    for (const auto& k : K) out.push_back(k * C);
  } else {
    out = Y;
  }
  return out;
}

void IdentifierConfig::validate(const PlantModel& plant) const {
  const int k1 = plant.slots();
  if (static_cast<int>(gains.size()) != k1)
    throw ModelError("need one gain set per delay slot");
  for (const auto& g : gains) {
    if (g.A.rows() != plant.n || g.A.cols() != plant.n ||
        g.D.rows() != plant.l || g.D.cols() != plant.l ||
        g.G.rows() != plant.m || g.G.cols() != plant.m)
      throw ModelError("gain matrix dimensions do not match the plant");
    if (!(g.B > 0)) throw ModelError("Gamma^B must be positive");
  }
  if (injection == InjectionMode::Output) {
    if (static_cast<int>(K.size()) != k1)
      throw ModelError("need one injection column K per delay slot");
    for (const auto& k : K)
      if (k.size() != plant.n) throw ModelError("K dimension mismatch");
  } else {
    if (static_cast<int>(Y.size()) != k1)
      throw ModelError("need one injection matrix Y per delay slot");
    for (const auto& y : Y)
      if (y.rows() != plant.n || y.cols() != plant.n)
        throw ModelError("Y dimension mismatch");
  }
  if (static_cast<int>(known.A0.size()) != k1)
    throw ModelError("known parts must have one entry per delay slot");
  if (T0.size() != plant.n) throw ModelError("T0 dimension mismatch");
}

Vector identifier_rhs(const PlantModel& plant, const IdentifierConfig& cfg,
                      const KappaSet& kappa,
                      const std::vector<SlotMeasurements>& slots) {
  const int n = plant.n;
  auto active = [](int count, int i) { return count < 0 || i < count; };
  Vector dxh = Vector::Zero(n);
  double direction = 0.0;  // scalar multiplying T0
  for (int i = 0; i < plant.slots(); ++i) {
    const SlotMeasurements& s = slots[i];
    const Vector phi_h = plant.phi(s.xhat_delayed);
    const Vector psi_y = plant.psi(s.y_delayed);
    dxh.noalias() += cfg.known.A0[i] * s.xhat_delayed;
    dxh.noalias() += cfg.known.D0[i] * phi_h;
    dxh.noalias() += cfg.known.G0[i] * psi_y;
    dxh.noalias() += cfg.known.B0[i] * s.u_delayed;
    if (cfg.injection == InjectionMode::Output) {
      dxh.noalias() += cfg.K[i] * s.e_delayed;
    } else {
      dxh.noalias() += cfg.Y[i] * s.eps_delayed;
    }
    if (active(cfg.active.A, i)) direction += kappa.A[i].dot(s.xhat_delayed);
    if (active(cfg.active.D, i)) direction += kappa.D[i].dot(phi_h);
    if (active(cfg.active.G, i)) direction += kappa.G[i].dot(psi_y);
    if (active(cfg.active.B, i)) direction += kappa.B[i] * s.u_delayed;
  }
  dxh.noalias() += cfg.T0 * direction;
  return dxh;
}

Vector adaptation_rhs(const PlantModel& plant, const IdentifierConfig& cfg,
                      double e, const std::vector<SlotMeasurements>& slots) {
  const int n = plant.n, l = plant.l, m = plant.m;
  const int k1 = plant.slots();
  auto active = [](int count, int i) { return count < 0 || i < count; };
  Vector dk = Vector::Zero(KappaSet::flat_size(k1, n, l, m));
  int at = 0;
  for (int i = 0; i < k1; ++i) {
    const SlotMeasurements& s = slots[i];
    if (active(cfg.active.A, i))
      dk.segment(at, n).noalias() = cfg.gains[i].A * (s.xhat_delayed * e);
    at += n;
    if (active(cfg.active.D, i))
      dk.segment(at, l).noalias() = cfg.gains[i].D * (plant.phi(s.xhat_delayed) * e);
    at += l;
    if (active(cfg.active.G, i))
      dk.segment(at, m).noalias() = cfg.gains[i].G * (plant.psi(s.y_delayed) * e);
    at += m;
    if (active(cfg.active.B, i)) dk[at] = cfg.gains[i].B * s.u_delayed * e;
    ++at;
  }
  return dk;
}

double identifiability_residual(const PlantModel& plant, const Vector& T0,
                                const KappaSet& kappa_true,
                                const KappaSet& kappa_hat,
                                const std::vector<Vector>& x_delayed,
                                const std::vector<double>& u_delayed) {
  double sum = 0.0;
  for (int i = 0; i < plant.slots(); ++i) {
    const Vector& xi = x_delayed[i];
    const double yi = plant.C.dot(xi);
    sum += (kappa_true.A[i] - kappa_hat.A[i]).dot(xi);
    sum += (kappa_true.D[i] - kappa_hat.D[i]).dot(plant.phi(xi));
    sum += (kappa_true.G[i] - kappa_hat.G[i]).dot(plant.psi(yi));
    sum += (kappa_true.B[i] - kappa_hat.B[i]) * u_delayed[i];
  }
  return plant.C.dot(T0) * sum;
}

ParamErrors param_errors(const KappaSet& truth, const KappaSet& estimate) {
  ParamErrors pe;
  for (int i = 0; i < truth.slots(); ++i) {
    pe.A.push_back((truth.A[i] - estimate.A[i]).norm());
    pe.D.push_back((truth.D[i] - estimate.D[i]).norm());
    pe.G.push_back((truth.G[i] - estimate.G[i]).norm());
    pe.B.push_back(std::abs(truth.B[i] - estimate.B[i]));
  }
  return pe;
}

double ParamErrors::max_abs() const {
  double v = 0.0;
  for (double x : A) v = std::max(v, x);
  for (double x : D) v = std::max(v, x);
  for (double x : G) v = std::max(v, x);
  for (double x : B) v = std::max(v, x);
  return v;
}

namespace {

// Running trapezoidal accumulator for V2 = sum_i int_{t-tau_i}^t eps^T S_i eps.
class V2Accumulator {
 public:
  V2Accumulator(std::vector<Matrix> S, std::vector<double> delays, double h)
      : S_(std::move(S)), delays_(std::move(delays)), h_(h) {
    prefix_.assign(S_.size(), 0.0);
  }

  void push(const Vector& eps) {
    const size_t k1 = S_.size();
    std::vector<double> q(k1);
    for (size_t i = 0; i < k1; ++i) q[i] = eps.dot(S_[i] * eps);
    if (step_ > 0)
      for (size_t i = 0; i < k1; ++i) prefix_[i] += 0.5 * (prev_q_[i] + q[i]);
    prev_q_ = q;
    hist_.push_back(prefix_);
    ++step_;
    // retain a window covering the largest delay
    const double max_tau = delays_.empty() ? 0.0 : delays_.back();
    const auto keep = static_cast<size_t>(max_tau / h_) + 4;
    while (hist_.size() > keep) {
      hist_.pop_front();
      ++base_;
    }
  }

  double value() const {
    const auto j = step_ - 1;  // global index of the latest entry
    double v2 = 0.0;
    for (size_t i = 0; i < S_.size(); ++i) {
      if (delays_[i] == 0.0) continue;
      const double back = static_cast<double>(j) - delays_[i] / h_;
      v2 += h_ * (at(j, i) - interp(back, i));
    }
    return v2;
  }

 private:
  double at(long long idx, size_t slot) const {
    if (idx < 0) return 0.0;  // zero error history before the start
    const auto local = static_cast<size_t>(idx - base_);
    return hist_[local][slot];
  }
  double interp(double idx, size_t slot) const {
    const double lo = std::floor(idx);
    const double s = idx - lo;
    const auto i0 = static_cast<long long>(lo);
    return (1.0 - s) * at(i0, slot) + s * at(i0 + 1, slot);
  }

  std::vector<Matrix> S_;
  std::vector<double> delays_;
  double h_;
  std::vector<double> prefix_;
  std::vector<double> prev_q_;
  std::deque<std::vector<double>> hist_;
  long long base_ = 0;
  long long step_ = 0;
};

}  // namespace

RunResult run_identification(const PlantModel& plant, const InputSpec& input,
                             const IdentifierConfig& cfg, const SimConfig& sim,
                             const LmiCertificate* certificate,
                             const std::function<Vector(double)>& plant_history) {
  plant.validate();
  input.validate();
  cfg.validate(plant);

  const int n = plant.n, l = plant.l, m = plant.m;
  const int k1 = plant.slots();
  const int nk = KappaSet::flat_size(k1, n, l, m);
  const int dim = 2 * n + nk;

  RunResult result;
  try {
    result.kappa_true =
        decompose_matching(plant, cfg.known, cfg.T0).kappa;
    result.has_truth = true;
  } catch (const ModelError&) {
    result.has_truth = false;
  }

  KappaSet kappa0 = cfg.kappa_init.slots() == k1
                        ? cfg.kappa_init
                        : KappaSet::zero(k1, n, l, m);
  const Vector kappa0_flat = kappa0.flatten();

  auto x_init = plant_history
                    ? plant_history
                    : std::function<Vector(double)>(
                          [n](double) { return Vector::Zero(n); });
  auto xh_init = cfg.xhat_init
                     ? cfg.xhat_init
                     : std::function<Vector(double)>(
                           [n](double) { return Vector::Zero(n); });
  auto init = [&](double t) {
    Vector z(dim);
    z.head(n) = x_init(t);
    z.segment(n, n) = xh_init(t);
    z.tail(nk) = kappa0_flat;
    return z;
  };

  auto gather_slots = [&](double t, const Vector& z,
                          const std::function<Vector(double)>& lookback,
                          std::vector<SlotMeasurements>& slots,
                          std::vector<Vector>& x_del,
                          std::vector<double>& u_del) {
    for (int i = 0; i < k1; ++i) {
      const double tau = plant.delays[i];
      Vector zi = (tau == 0.0) ? z : lookback(t - tau);
      SlotMeasurements& s = slots[i];
      x_del[i] = zi.head(n);
      s.xhat_delayed = zi.segment(n, n);
      s.y_delayed = plant.C.dot(x_del[i]);
      s.u_delayed = eval_input(input, t - tau);
      u_del[i] = s.u_delayed;
      s.e_delayed = s.y_delayed - plant.C.dot(s.xhat_delayed);
      if (cfg.injection == InjectionMode::FullState)
        s.eps_delayed = x_del[i] - s.xhat_delayed;
    }
  };

  auto rhs = [&](double t, const Vector& z,
                 const std::function<Vector(double)>& lookback) {
    std::vector<SlotMeasurements> slots(k1);
    std::vector<Vector> x_del(k1);
    std::vector<double> u_del(k1);
    gather_slots(t, z, lookback, slots, x_del, u_del);

    Vector dz(dim);
    Vector dx = Vector::Zero(n);
    for (int i = 0; i < k1; ++i) {
      dx.noalias() += plant.A[i] * x_del[i];
      dx.noalias() += plant.D[i] * plant.phi(x_del[i]);
      dx.noalias() += plant.G[i] * plant.psi(slots[i].y_delayed);
      dx.noalias() += plant.B[i] * u_del[i];
    }
    const KappaSet kappa = KappaSet::unflatten(z.tail(nk), k1, n, l, m);
    const double e = plant.C.dot(z.head(n)) - plant.C.dot(z.segment(n, n));
    dz.head(n) = dx;
    dz.segment(n, n) = identifier_rhs(plant, cfg, kappa, slots);
    dz.tail(nk) = adaptation_rhs(plant, cfg, e, slots);
    return dz;
  };

  // Lyapunov diagnostic setup
  const bool lyap = certificate != nullptr &&
                    certificate->verdict == Verdict::Feasible &&
                    result.has_truth;
  std::vector<Matrix> inv_ga, inv_gd, inv_gg;
  std::vector<double> inv_gb;
  std::optional<V2Accumulator> v2;
  if (lyap) {
    for (const auto& g : cfg.gains) {
      inv_ga.push_back(g.A.inverse());
      inv_gd.push_back(g.D.inverse());
      inv_gg.push_back(g.G.inverse());
      inv_gb.push_back(1.0 / g.B);
    }
    v2.emplace(certificate->S, plant.delays, sim.h);
  }

  auto per_step = [&](double, const Vector& z,
                      const std::function<Vector(double)>&) {
    if (!v2) return;
    const Vector eps = z.head(n) - z.segment(n, n);
    v2->push(eps);
  };

  auto observer = [&](double t, const Vector& z,
                      const std::function<Vector(double)>& lookback) {
    DiagnosticsRecord rec;
    rec.t = t;
    const Vector eps = z.head(n) - z.segment(n, n);
    rec.eps_norm = eps.norm();
    rec.e = plant.C.dot(eps);
    rec.kappa_hat = z.tail(nk);
    const KappaSet kap = KappaSet::unflatten(rec.kappa_hat, k1, n, l, m);
    if (result.has_truth) {
      std::vector<Vector> x_del(k1);
      std::vector<double> u_del(k1);
      for (int i = 0; i < k1; ++i) {
        const double tau = plant.delays[i];
        x_del[i] = (tau == 0.0) ? Vector(z.head(n)) : lookback(t - tau).head(n);
        u_del[i] = eval_input(input, t - tau);
      }
      rec.residual = identifiability_residual(plant, cfg.T0, result.kappa_true,
                                              kap, x_del, u_del);
      if (lyap) {
        double v1 = eps.dot(certificate->P * eps);
        for (int i = 0; i < k1; ++i) {
          const RowVector da = result.kappa_true.A[i] - kap.A[i];
          const RowVector dd = result.kappa_true.D[i] - kap.D[i];
          const RowVector dg = result.kappa_true.G[i] - kap.G[i];
          const double db = result.kappa_true.B[i] - kap.B[i];
          v1 += (da * inv_ga[i] * da.transpose()).value();
          v1 += (dd * inv_gd[i] * dd.transpose()).value();
          v1 += (dg * inv_gg[i] * dg.transpose()).value();
          v1 += inv_gb[i] * db * db;
        }
        rec.V = v1 + v2->value();
      }
    }
    result.diagnostics.push_back(std::move(rec));
    result.plant_x.t.push_back(t);
    result.plant_x.x.push_back(z.head(n));
    result.xhat.t.push_back(t);
    result.xhat.x.push_back(z.segment(n, n));
  };

  integrate(rhs, init, sim, plant.delays, observer, lyap ? StepObserver(per_step) : nullptr);

  result.kappa_final = KappaSet::unflatten(result.diagnostics.back().kappa_hat,
                                           k1, n, l, m);
  return result;
}

}  // namespace tdid

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "tdid/dde.hpp"
#include "tdid/lmi.hpp"
#include "tdid/model.hpp"
#include "tdid/signals.hpp"

namespace tdid {

/// Adaptation gains for one delay slot; all must be positive definite.
struct SlotGains {
  Matrix A;  // n x n
  Matrix D;  // l x l
  Matrix G;  // m x m
  double B = 0.0;

  static SlotGains scaled_identity(double gamma, int n, int l, int m);
};

enum class InjectionMode {
  Output,     // correction K_i * e(t - tau_i), computable from measurements
  FullState,  // correction Y_i * eps(t - tau_i), diagnostic mode
};

/// Number of delay slots carrying adjustable parameters per term type;
/// -1 means all slots. Slots past the count keep their initial estimates.
struct TermCounts {
  int A = -1, D = -1, G = -1, B = -1;
};

struct IdentifierConfig {
  std::vector<SlotGains> gains;  // one per delay slot
  TermCounts active;
  InjectionMode injection = InjectionMode::Output;
  std::vector<Vector> K;  // output mode column gains, n each
  std::vector<Matrix> Y;  // full-state mode matrices, n x n each
  KnownParts known;
  Vector T0;
  KappaSet kappa_init;                      // defaults to zero when empty
  std::function<Vector(double)> xhat_init;  // state-estimate history, default 0

  /// Injection matrices as they enter the error dynamics (K_i C in output
  /// mode, Y_i in full-state mode); used to build the LMI problem.
  std::vector<Matrix> effective_injection(const RowVector& C) const;
  void validate(const PlantModel& plant) const;
};

/// Measured quantities of one delay slot at the current evaluation time.
struct SlotMeasurements {
  Vector xhat_delayed;  // xhat(t - tau_i)
  double y_delayed = 0.0;
  double u_delayed = 0.0;
  double e_delayed = 0.0;  // y(t-tau_i) - C xhat(t-tau_i)
  Vector eps_delayed;      // full-state injection mode only
};

/// State-estimate propagation: known dynamics driven by measured signals,
/// the adjustable T0-direction terms, and the error-injection correction.
Vector identifier_rhs(const PlantModel& plant, const IdentifierConfig& cfg,
                      const KappaSet& kappa,
                      const std::vector<SlotMeasurements>& slots);

/// Gradient update laws, d/dt kappa_hat = +Gamma * regressor * e, flattened
/// in KappaSet order.
Vector adaptation_rhs(const PlantModel& plant, const IdentifierConfig& cfg,
                      double e, const std::vector<SlotMeasurements>& slots);

/// Left-hand expression of the identifiability relation:
/// C T0 * sum_i [dkA_i x(t-tau_i) + dkD_i phi(x(..)) + dkG_i psi(y(..)) + dkB_i u(..)].
double identifiability_residual(const PlantModel& plant, const Vector& T0,
                                const KappaSet& kappa_true,
                                const KappaSet& kappa_hat,
                                const std::vector<Vector>& x_delayed,
                                const std::vector<double>& u_delayed);

struct DiagnosticsRecord {
  double t = 0.0;
  double eps_norm = 0.0;
  double e = 0.0;
  double V = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  Vector kappa_hat;  // flattened estimates
};

struct RunResult {
  Trajectory plant_x;  // true state per recorded step
  Trajectory xhat;
  std::vector<DiagnosticsRecord> diagnostics;
  KappaSet kappa_final;
  KappaSet kappa_true;  // from decomposing the plant against cfg.known
  bool has_truth = false;
};

/// Co-integrate plant, state estimate and parameter estimates as one
/// augmented delayed ODE. When a certificate is supplied, the
/// Lyapunov-Krasovskii functional V is evaluated per recorded step.
RunResult run_identification(
    const PlantModel& plant, const InputSpec& input,
    const IdentifierConfig& cfg, const SimConfig& sim,
    const LmiCertificate* certificate = nullptr,
    const std::function<Vector(double)>& plant_history = nullptr);

/// Per-slot parameter error norms (|dkA_i|, |dkD_i|, |dkG_i|, |dkB_i|).
struct ParamErrors {
  std::vector<double> A, D, G, B;
  double max_abs() const;
};
ParamErrors param_errors(const KappaSet& truth, const KappaSet& estimate);

}  // namespace tdid

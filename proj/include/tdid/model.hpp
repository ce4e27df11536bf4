#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// State nonlinearity phi: R^n -> R^l.
using StateNonlinearity = std::function<Vector(const Vector&)>;
/// Output nonlinearity psi: R -> R^m.
using OutputNonlinearity = std::function<Vector(double)>;

/// Real signed cube root, applied componentwise by phi handles.
double signed_cbrt(double v);

/// Look up a built-in nonlinearity by name.
/// phi names: "cube_root", "zero", "tanh"; psi names: "square", "zero", "identity".
StateNonlinearity make_phi(const std::string& name, int n, int l);
OutputNonlinearity make_psi(const std::string& name, int m);

// Multi-delay plant
//   x'(t) = sum_i [ A_i x(t-tau_i) + D_i phi(x(t-tau_i))
//                 + G_i psi(y(t-tau_i)) + B_i u(t-tau_i) ],   y = C x,
// with tau_0 = 0 and one shared delay list across all term types.
struct PlantModel {
  int n = 0;  // state dimension
  int l = 0;  // phi output dimension
  int m = 0;  // psi output dimension
  std::vector<double> delays;  // [0 = tau_0 < tau_1 < ...], seconds
  std::vector<Matrix> A;       // slots() matrices, n x n
  std::vector<Matrix> D;       // n x l
  std::vector<Matrix> G;       // n x m
  std::vector<Vector> B;       // n
  RowVector C;                 // 1 x n
  StateNonlinearity phi;
  OutputNonlinearity psi;
  std::string phi_name = "cube_root";
  std::string psi_name = "square";
  double lipschitz = 1.0;  // Lipschitz constant for phi, used by the LMI module only

  int slots() const { return static_cast<int>(delays.size()); }
  double max_delay() const { return delays.empty() ? 0.0 : delays.back(); }

  /// Throws ModelError on inconsistent dimensions or a bad delay list.
  void validate() const;
};

Vector eval_phi(const PlantModel& plant, const Vector& x);
Vector eval_psi(const PlantModel& plant, double y);

/// The known parts of the matching decomposition, one entry per delay slot.
struct KnownParts {
  std::vector<Matrix> A0;
  std::vector<Matrix> D0;
  std::vector<Matrix> G0;
  std::vector<Vector> B0;
};

/// Unknown row parameters per slot.
struct KappaSet {
  std::vector<RowVector> A;  // 1 x n
  std::vector<RowVector> D;  // 1 x l
  std::vector<RowVector> G;  // 1 x m
  std::vector<double> B;

  int slots() const { return static_cast<int>(B.size()); }
  static KappaSet zero(int slots, int n, int l, int m);
  Vector flatten() const;
  static KappaSet unflatten(const Vector& v, int slots, int n, int l, int m);
  static int flat_size(int slots, int n, int l, int m) {
    return slots * (n + l + m + 1);
  }
};

struct MatchingDecomposition {
  KnownParts known;
  Vector T0;
  KappaSet kappa;
};

/// Split the plant matrices as A_i = A_i^0 + T0 * kappa_i^A (same for D, G, B).
/// Throws ModelError if C*T0 = 0 or some residual is not in span(T0).
MatchingDecomposition decompose_matching(const PlantModel& plant,
                                         const KnownParts& known,
                                         const Vector& T0);

/// Rebuild the full plant matrices from a decomposition (used by tests and
/// to instantiate identifier targets).
PlantModel recompose(const PlantModel& shape, const MatchingDecomposition& dec);

struct DelayGrid {
  std::vector<double> delays;  // [0 = tauhat_0 < tauhat_1 < ...]
  // Optional per-term slot counts (A, D, G, B) for the reduced model with
  // fewer adjustable parameters; -1 means all slots.
  std::array<int, 4> term_counts{-1, -1, -1, -1};
  void validate() const;
};

/// Rewrite the plant on an extended delay grid: slots matching a true plant
/// delay carry the original matrices, the remaining (fictitious) slots are zero.
PlantModel extend_to_grid(const PlantModel& plant, const DelayGrid& grid);

}  // namespace tdid

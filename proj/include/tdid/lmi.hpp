#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdid/model.hpp"

namespace tdid {

enum class PsiMode { Verbatim, Derived };

/// Data for the stability block matrix Psi of the identifier error dynamics.
/// Dimension of the assembled matrix is slots*(n + l) with slots = k+1.
struct PsiProblem {
  int n = 0;
  int l = 0;
  std::vector<Matrix> A;  // k+1 matrices n x n
  std::vector<Matrix> D;  // n x l
  std::vector<Matrix> Y;  // injection matrices, n x n
  double lipschitz = 0.0;
  Vector T0;
  RowVector C;
  PsiMode mode = PsiMode::Derived;

  int slots() const { return static_cast<int>(A.size()); }
  int dim() const { return slots() * (n + l); }
  void validate() const;
};

enum class Verdict { Feasible, Infeasible, Undetermined };

std::string to_string(Verdict v);
std::string to_string(PsiMode m);

struct LmiCertificate {
  Matrix P;
  std::vector<Matrix> S;
  double max_eig_psi = 0.0;
  double equality_residual = 0.0;  // ||P T0 - C^T||
  Verdict verdict = Verdict::Undetermined;
  PsiMode mode = PsiMode::Derived;
  double margin = 1e-6;
  std::string detail;  // which check failed / search summary
};

/// Assemble the symmetric stability matrix for candidate (P, {S_i}).
///
/// Verbatim mode reproduces the printed block layout: top-left
/// A0^T P + P A0 - Y0 + sum_i S_i + L^2 I, first-row blocks P(A_i - Y_i),
/// delayed diagonal blocks -S_i - Y_i, coupling first row P D_i, bottom-right
/// -I. Derived mode uses the blocks that the error dynamics actually produce:
/// (A0-Y0)^T P + P(A0-Y0) + sum_i S_i + L^2 I on the top-left, -S_i + L^2 I
/// on the delayed diagonal, the rest unchanged. The result is symmetrized.
Matrix assemble_psi(const PsiProblem& prob, const Matrix& P,
                    const std::vector<Matrix>& S);

/// Check P > 0, S_i > 0, lambda_max(Psi) < 0 and ||P T0 - C^T|| small;
/// failures produce an infeasible verdict, never an exception.
LmiCertificate verify_certificate(const PsiProblem& prob, const Matrix& P,
                                  const std::vector<Matrix>& S);

struct SearchOptions {
  int max_iters = 3000;
  int restarts = 10;
  std::uint64_t seed = 0;
  double margin = 1e-6;
  double step0 = 0.0;  // 0 = auto scale
};

/// Subgradient search for feasible (P, {S_i}) on the affine set P T0 = C^T.
/// Returns the best iterate's certificate; verdict Undetermined when no
/// strictly feasible point was found.
LmiCertificate find_feasible(const PsiProblem& prob,
                             const SearchOptions& options = {});

/// Certificate document round-trip (JSON text).
std::string certificate_to_json(const LmiCertificate& cert);
LmiCertificate certificate_from_json(const std::string& text);

}  // namespace tdid

#include "tdid/lmi.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

namespace tdid {

namespace {

void require_symmetric(const Matrix& M, const char* what) {
  const double scale = std::max(1.0, M.norm());
  if ((M - M.transpose()).norm() > 1e-12 * scale) {
    std::ostringstream os;
    os << what << " is not symmetric";
    throw ModelError(os.str());
  }
}

}  // namespace

void PsiProblem::validate() const {
  const int k1 = slots();
  if (n <= 0 || l < 0 || k1 < 1) throw ModelError("bad Psi problem dimensions");
  if (static_cast<int>(D.size()) != k1 || static_cast<int>(Y.size()) != k1)
    throw ModelError("A, D, Y must have one entry per delay slot");
  for (int i = 0; i < k1; ++i) {
    if (A[i].rows() != n || A[i].cols() != n)
      throw ModelError("A block has wrong dimensions");
    if (D[i].rows() != n || D[i].cols() != l)
      throw ModelError("D block has wrong dimensions");
    if (Y[i].rows() != n || Y[i].cols() != n)
      throw ModelError("Y block has wrong dimensions");
  }
  if (T0.size() != n || C.size() != n)
    throw ModelError("T0/C dimension does not match n");
  if (lipschitz < 0) throw ModelError("Lipschitz constant must be >= 0");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "feasible";
    case Verdict::Infeasible: return "infeasible";
    default: return "undetermined";
  }
}

std::string to_string(PsiMode m) {
  return m == PsiMode::Verbatim ? "verbatim" : "derived";
}

Matrix assemble_psi(const PsiProblem& prob, const Matrix& P,
                    const std::vector<Matrix>& S) {
  prob.validate();
  const int n = prob.n, l = prob.l, k1 = prob.slots();
  if (P.rows() != n || P.cols() != n) throw ModelError("P has wrong dimensions");
  require_symmetric(P, "P");
  if (static_cast<int>(S.size()) != k1)
    throw ModelError("need one S matrix per delay slot");
  for (const auto& Si : S) {
    if (Si.rows() != n || Si.cols() != n)
      throw ModelError("S block has wrong dimensions");
    require_symmetric(Si, "S");
  }

  const double L2 = prob.lipschitz * prob.lipschitz;
  const int dim = prob.dim();
  Matrix psi = Matrix::Zero(dim, dim);
  auto x1 = [n](int i) { return i * n; };            // chi1 block offsets
  auto x2 = [n, l, k1](int i) { return k1 * n + i * l; };  // chi2 block offsets

  Matrix sum_s = Matrix::Zero(n, n);
  for (const auto& Si : S) sum_s += Si;

  Matrix top;
  if (prob.mode == PsiMode::Verbatim) {
    top = prob.A[0].transpose() * P + P * prob.A[0] - prob.Y[0] + sum_s +
          L2 * Matrix::Identity(n, n);
  } else {
    const Matrix M0 = prob.A[0] - prob.Y[0];
    top = M0.transpose() * P + P * M0 + sum_s + L2 * Matrix::Identity(n, n);
  }
  psi.block(0, 0, n, n) = 0.5 * (top + top.transpose());

  for (int i = 1; i < k1; ++i) {
    Matrix diag;
    if (prob.mode == PsiMode::Verbatim) {
      diag = -S[i] - prob.Y[i];
    } else {
      diag = -S[i] + L2 * Matrix::Identity(n, n);
    }
    psi.block(x1(i), x1(i), n, n) = 0.5 * (diag + diag.transpose());

    const Matrix off = P * (prob.A[i] - prob.Y[i]);
    psi.block(0, x1(i), n, n) = off;
    psi.block(x1(i), 0, n, n) = off.transpose();
  }

  for (int i = 0; i < k1; ++i) {
    const Matrix pd = P * prob.D[i];
    psi.block(0, x2(i), n, l) = pd;
    psi.block(x2(i), 0, l, n) = pd.transpose();
    psi.block(x2(i), x2(i), l, l) = -Matrix::Identity(l, l);
  }
  return psi;
}

LmiCertificate verify_certificate(const PsiProblem& prob, const Matrix& P,
                                  const std::vector<Matrix>& S) {
  LmiCertificate cert;
  cert.P = P;
  cert.S = S;
  cert.mode = prob.mode;

  const Matrix psi = assemble_psi(prob, P, S);
  Eigen::SelfAdjointEigenSolver<Matrix> es_psi(psi, Eigen::EigenvaluesOnly);
  cert.max_eig_psi = es_psi.eigenvalues().maxCoeff();
  cert.equality_residual = (P * prob.T0 - prob.C.transpose()).norm();

  Eigen::SelfAdjointEigenSolver<Matrix> es_p(P, Eigen::EigenvaluesOnly);
  const double min_eig_p = es_p.eigenvalues().minCoeff();

  double min_eig_s = std::numeric_limits<double>::infinity();
  for (const auto& Si : S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es_s(Si, Eigen::EigenvaluesOnly);
    min_eig_s = std::min(min_eig_s, es_s.eigenvalues().minCoeff());
  }

  const double eq_tol = 1e-10 * std::max(1.0, prob.C.norm());
  cert.verdict = Verdict::Feasible;
  if (!(min_eig_p > 0)) {
    cert.verdict = Verdict::Infeasible;
    cert.detail = "P is not positive definite";
  } else if (!(min_eig_s > 0)) {
    cert.verdict = Verdict::Infeasible;
    cert.detail = "some S_i is not positive definite";
  } else if (!(cert.max_eig_psi < 0)) {
    cert.verdict = Verdict::Infeasible;
    cert.detail = "Psi is not negative definite";
  } else if (!(cert.equality_residual <= eq_tol)) {
    cert.verdict = Verdict::Infeasible;
    cert.detail = "P T0 != C^T";
  }
  return cert;
}

namespace {

// Orthonormal (Frobenius) basis of symmetric n x n matrices.
std::vector<Matrix> sym_basis(int n) {
  std::vector<Matrix> basis;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      Matrix E = Matrix::Zero(n, n);
      if (a == b) {
        E(a, a) = 1.0;
      } else {
        E(a, b) = inv_sqrt2;
        E(b, a) = inv_sqrt2;
      }
      basis.push_back(E);
    }
  }
  return basis;
}

double frob_dot(const Matrix& X, const Matrix& Y) {
  return (X.array() * Y.array()).sum();
}

struct AffineP {
  Matrix particular;           // symmetric, particular solution of P T0 = C^T
  std::vector<Matrix> kernel;  // orthonormal symmetric directions with N T0 = 0

  Matrix eval(const Vector& theta) const {
    Matrix P = particular;
    for (size_t j = 0; j < kernel.size(); ++j) P += theta[static_cast<Eigen::Index>(j)] * kernel[j];
    return P;
  }
};

AffineP build_affine_p(const PsiProblem& prob) {
  const int n = prob.n;
  if (prob.T0.norm() == 0.0)
    throw ModelError("T0 = 0: the constraint P T0 = C^T has no solution");
  const auto basis = sym_basis(n);
  const int q = static_cast<int>(basis.size());
  Matrix Mc(n, q);
  for (int j = 0; j < q; ++j) Mc.col(j) = basis[j] * prob.T0;

  const Vector rhs = prob.C.transpose();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Mc);
  const Vector part_coords = cod.solve(rhs);
  if ((Mc * part_coords - rhs).norm() > 1e-10 * std::max(1.0, rhs.norm()))
    throw ModelError("constraint P T0 = C^T is inconsistent");

  AffineP aff;
  aff.particular = Matrix::Zero(n, n);
  for (int j = 0; j < q; ++j) aff.particular += part_coords[j] * basis[j];

  Eigen::FullPivLU<Matrix> lu(Mc);
  lu.setThreshold(1e-12);
  const Matrix ker = lu.kernel();  // q x kd (kd may be 0)
  if (ker.cols() > 0 && !(ker.cols() == 1 && ker.norm() == 0.0)) {
    Eigen::HouseholderQR<Matrix> qr(ker);
    Matrix Q = qr.householderQ() * Matrix::Identity(q, ker.cols());
    for (int c = 0; c < Q.cols(); ++c) {
      Matrix N = Matrix::Zero(n, n);
      for (int j = 0; j < q; ++j) N += Q(j, c) * basis[j];
      if ((N * prob.T0).norm() > 1e-9) continue;
      aff.kernel.push_back(N);
    }
  }
  return aff;
}

Matrix psd_projection(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

LmiCertificate find_feasible(const PsiProblem& prob,
                             const SearchOptions& options) {
  prob.validate();
  const int n = prob.n, k1 = prob.slots();
  const auto basis = sym_basis(n);
  const int q = static_cast<int>(basis.size());
  const AffineP aff = build_affine_p(prob);
  const int pd = static_cast<int>(aff.kernel.size());
  const int dim = pd + k1 * q;

  // Precompute Psi as an affine map of the decision vector.
  std::vector<Matrix> zero_s(k1, Matrix::Zero(n, n));
  const Matrix psi_const = assemble_psi(prob, Matrix::Zero(n, n), zero_s);
  std::vector<Matrix> dpsi(dim);
  for (int j = 0; j < pd; ++j)
    dpsi[j] = assemble_psi(prob, aff.kernel[j], zero_s) - psi_const;
  for (int i = 0; i < k1; ++i) {
    for (int b = 0; b < q; ++b) {
      auto s = zero_s;
      s[i] = basis[b];
      dpsi[pd + i * q + b] =
          assemble_psi(prob, Matrix::Zero(n, n), s) - psi_const;
    }
  }
  const Matrix psi_part = assemble_psi(prob, aff.particular, zero_s) - psi_const;

  auto eval_point = [&](const Vector& theta, Matrix& P, std::vector<Matrix>& S) {
    P = aff.eval(theta.head(pd));
    S.assign(k1, Matrix::Zero(n, n));
    for (int i = 0; i < k1; ++i)
      for (int b = 0; b < q; ++b) S[i] += theta[pd + i * q + b] * basis[b];
  };

  struct Objective {
    double f;
    int which;  // 0 = psi, 1 = P, 2+i = S_i
    Vector eigvec;
  };
  auto evaluate = [&](const Vector& theta) {
    Matrix psi = psi_const + psi_part;
    for (int j = 0; j < dim; ++j) psi += theta[j] * dpsi[j];
    Matrix P;
    std::vector<Matrix> S;
    eval_point(theta, P, S);

    Objective best{-std::numeric_limits<double>::infinity(), 0, {}};
    Eigen::SelfAdjointEigenSolver<Matrix> es_psi(psi);
    const int last = static_cast<int>(psi.rows()) - 1;
    double v = es_psi.eigenvalues()[last] + options.margin;
    best = {v, 0, es_psi.eigenvectors().col(last)};

    Eigen::SelfAdjointEigenSolver<Matrix> es_p(P);
    v = -es_p.eigenvalues()[0] + options.margin;
    if (v > best.f) best = {v, 1, es_p.eigenvectors().col(0)};

    for (int i = 0; i < k1; ++i) {
      Eigen::SelfAdjointEigenSolver<Matrix> es_s(S[i]);
      v = -es_s.eigenvalues()[0] + options.margin;
      if (v > best.f) best = {v, 2 + i, es_s.eigenvectors().col(0)};
    }
    return best;
  };

  auto subgradient = [&](const Vector& theta, const Objective& obj) {
    Vector g = Vector::Zero(dim);
    if (obj.which == 0) {
      for (int j = 0; j < dim; ++j)
        g[j] = obj.eigvec.dot(dpsi[j] * obj.eigvec);
    } else if (obj.which == 1) {
      for (int j = 0; j < pd; ++j)
        g[j] = -obj.eigvec.dot(aff.kernel[j] * obj.eigvec);
    } else {
      const int i = obj.which - 2;
      for (int b = 0; b < q; ++b)
        g[pd + i * q + b] = -obj.eigvec.dot(basis[b] * obj.eigvec);
    }
    (void)theta;
    return g;
  };

  // Initial point: PSD-projected particular solution plus 0.1 I, mapped back
  // onto the affine set; S_i = 0.1 I.
  Vector theta0 = Vector::Zero(dim);
  {
    const Matrix target =
        psd_projection(aff.particular) + 0.1 * Matrix::Identity(n, n);
    const Matrix delta = target - aff.particular;
    for (int j = 0; j < pd; ++j) theta0[j] = frob_dot(aff.kernel[j], delta);
    for (int i = 0; i < k1; ++i)
      for (int b = 0; b < q; ++b)
        theta0[pd + i * q + b] = frob_dot(basis[b], 0.1 * Matrix::Identity(n, n));
  }

  const double scale =
      std::max(1.0, aff.particular.norm());
  const double step0 = options.step0 > 0 ? options.step0 : scale;

  double best_f = std::numeric_limits<double>::infinity();
  Vector best_theta = theta0;
  for (int r = 0; r < options.restarts; ++r) {
    std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(r) * 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector theta = theta0;
    if (r > 0)
      for (int j = 0; j < dim; ++j)
        theta[j] += 0.3 * scale * static_cast<double>(r) / options.restarts * gauss(rng);

    for (int it = 0; it < options.max_iters; ++it) {
      const Objective obj = evaluate(theta);
      if (!std::isfinite(obj.f)) throw ModelError("non-finite LMI objective");
      if (obj.f < best_f) {
        best_f = obj.f;
        best_theta = theta;
      }
      if (best_f < 0) break;
      Vector g = subgradient(theta, obj);
      const double gn = g.norm();
      if (gn < 1e-14) break;
      const double step = step0 / std::sqrt(1.0 + static_cast<double>(it));
      theta -= (step / gn) * g;
    }
    if (best_f < 0) break;
  }

  Matrix P;
  std::vector<Matrix> S;
  eval_point(best_theta, P, S);
  LmiCertificate cert = verify_certificate(prob, P, S);
  cert.margin = options.margin;
  if (cert.verdict != Verdict::Feasible) {
    cert.verdict = Verdict::Undetermined;
    std::ostringstream os;
    os << "search exhausted, best objective " << best_f;
    cert.detail = os.str();
  }
  return cert;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) return {};
  const auto cols = j.at(0).size();
  Matrix M(rows, cols);
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j.at(r).at(c).get<double>();
  return M;
}

}  // namespace

std::string certificate_to_json(const LmiCertificate& cert) {
  nlohmann::json j;
  j["P"] = matrix_to_json(cert.P);
  j["S"] = nlohmann::json::array();
  for (const auto& Si : cert.S) j["S"].push_back(matrix_to_json(Si));
  j["max_eig_psi"] = cert.max_eig_psi;
  j["equality_residual"] = cert.equality_residual;
  j["verdict"] = to_string(cert.verdict);
  j["mode"] = to_string(cert.mode);
  j["margin"] = cert.margin;
  j["detail"] = cert.detail;
  return j.dump(2);
}

LmiCertificate certificate_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  LmiCertificate cert;
  cert.P = matrix_from_json(j.at("P"));
  for (const auto& s : j.at("S")) cert.S.push_back(matrix_from_json(s));
  cert.max_eig_psi = j.at("max_eig_psi").get<double>();
  cert.equality_residual = j.at("equality_residual").get<double>();
  const std::string v = j.at("verdict").get<std::string>();
  cert.verdict = v == "feasible"     ? Verdict::Feasible
                 : v == "infeasible" ? Verdict::Infeasible
                                     : Verdict::Undetermined;
  cert.mode = j.at("mode").get<std::string>() == "verbatim" ? PsiMode::Verbatim
                                                            : PsiMode::Derived;
  cert.margin = j.at("margin").get<double>();
  if (j.contains("detail")) cert.detail = j.at("detail").get<std::string>();
  return cert;
}

}  // namespace tdid

#include "tdid/model.hpp"

#include "tdid/dde.hpp"

#include <cmath>
#include <sstream>

namespace tdid {

double signed_cbrt(double v) { return std::cbrt(v); }

StateNonlinearity make_phi(const std::string& name, int n, int l) {
  if (name == "cube_root") {
    if (l != n) throw ModelError("phi cube_root requires l == n");
    return [](const Vector& x) {
      Vector out(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = signed_cbrt(x[i]);
      return out;
    };
  }
  if (name == "tanh") {
    if (l != n) throw ModelError("phi tanh requires l == n");
    return [](const Vector& x) {
      Vector out(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      return out;
    };
  }
  if (name == "zero") {
    return [l](const Vector&) { return Vector::Zero(l); };
  }
  throw ModelError("unknown phi nonlinearity: " + name);
}

OutputNonlinearity make_psi(const std::string& name, int m) {
  if (name == "square") {
    if (m != 1) throw ModelError("psi square requires m == 1");
    return [](double y) {
      Vector out(1);
      out[0] = y * y;
      return out;
    };
  }
  if (name == "identity") {
    if (m != 1) throw ModelError("psi identity requires m == 1");
    return [](double y) {
      Vector out(1);
      out[0] = y;
      return out;
    };
  }
  if (name == "zero") {
    return [m](double) { return Vector::Zero(m); };
  }
  throw ModelError("unknown psi nonlinearity: " + name);
}

namespace {

void check_dims(const PlantModel& p) {
  const int k1 = p.slots();
  auto bad = [&](const std::string& what, int slot) {
    std::ostringstream os;
    os << "dimension mismatch in " << what << " at delay slot " << slot;
    throw ModelError(os.str());
  };
  if (static_cast<int>(p.A.size()) != k1 || static_cast<int>(p.D.size()) != k1 ||
      static_cast<int>(p.G.size()) != k1 || static_cast<int>(p.B.size()) != k1)
    throw ModelError("matrix sequences must have one entry per delay slot");
  for (int i = 0; i < k1; ++i) {
    if (p.A[i].rows() != p.n || p.A[i].cols() != p.n) bad("A", i);
    if (p.D[i].rows() != p.n || p.D[i].cols() != p.l) bad("D", i);
    if (p.G[i].rows() != p.n || p.G[i].cols() != p.m) bad("G", i);
    if (p.B[i].size() != p.n) bad("B", i);
  }
  if (p.C.size() != p.n) throw ModelError("C row dimension does not match n");
}

}  // namespace

void PlantModel::validate() const {
  if (n <= 0 || l < 0 || m < 0) throw ModelError("invalid dimensions");
  if (delays.empty() || delays[0] != 0.0)
    throw ModelError("delay list must start with tau_0 = 0");
  for (size_t i = 1; i < delays.size(); ++i)
    if (delays[i] <= delays[i - 1])
      throw ModelError("delays must be strictly increasing");
  if (lipschitz < 0) throw ModelError("Lipschitz constant must be >= 0");
  check_dims(*this);
  if (!phi || !psi) throw ModelError("nonlinearity handles not set");
}

Vector eval_phi(const PlantModel& plant, const Vector& x) {
  if (!x.allFinite()) throw SimError("non-finite argument to phi");
  return plant.phi(x);
}

Vector eval_psi(const PlantModel& plant, double y) {
  if (!std::isfinite(y)) throw SimError("non-finite argument to psi");
  return plant.psi(y);
}

KappaSet KappaSet::zero(int slots, int n, int l, int m) {
  KappaSet k;
  k.A.assign(slots, RowVector::Zero(n));
  k.D.assign(slots, RowVector::Zero(l));
  k.G.assign(slots, RowVector::Zero(m));
  k.B.assign(slots, 0.0);
  return k;
}

Vector KappaSet::flatten() const {
  const int s = slots();
  const int n = s ? static_cast<int>(A[0].size()) : 0;
  const int l = s ? static_cast<int>(D[0].size()) : 0;
  const int m = s ? static_cast<int>(G[0].size()) : 0;
  Vector v(flat_size(s, n, l, m));
  int at = 0;
  for (int i = 0; i < s; ++i) {
    v.segment(at, n) = A[i].transpose();
    at += n;
    v.segment(at, l) = D[i].transpose();
    at += l;
    v.segment(at, m) = G[i].transpose();
    at += m;
    v[at++] = B[i];
  }
  return v;
}

KappaSet KappaSet::unflatten(const Vector& v, int slots, int n, int l, int m) {
  if (v.size() != flat_size(slots, n, l, m))
    throw ModelError("kappa vector has wrong length");
  KappaSet k = KappaSet::zero(slots, n, l, m);
  int at = 0;
  for (int i = 0; i < slots; ++i) {
    k.A[i] = v.segment(at, n).transpose();
    at += n;
    k.D[i] = v.segment(at, l).transpose();
    at += l;
    k.G[i] = v.segment(at, m).transpose();
    at += m;
    k.B[i] = v[at++];
  }
  return k;
}

namespace {

// Least-squares projection of each residual column block onto span(T0).
// rel_tol rejects residuals that are not expressible as T0 * row.
RowVector project_rows(const Matrix& residual, const Vector& T0, double rel_tol,
                       const std::string& what, int slot) {
  const double t2 = T0.squaredNorm();
  RowVector row = (T0.transpose() * residual) / t2;
  Matrix recon = T0 * row;
  const double err = (residual - recon).norm();
  const double scale = std::max(1.0, residual.norm());
  if (err > rel_tol * scale) {
    std::ostringstream os;
    os << what << " residual at slot " << slot
       << " is not in span(T0); off-span norm " << err;
    throw ModelError(os.str());
  }
  return row;
}

constexpr double kSpanTol = 1e-9;

}  // namespace

MatchingDecomposition decompose_matching(const PlantModel& plant,
                                         const KnownParts& known,
                                         const Vector& T0) {
  plant.validate();
  const int k1 = plant.slots();
  if (T0.size() != plant.n) throw ModelError("T0 dimension does not match n");
  if (static_cast<int>(known.A0.size()) != k1 ||
      static_cast<int>(known.D0.size()) != k1 ||
      static_cast<int>(known.G0.size()) != k1 ||
      static_cast<int>(known.B0.size()) != k1)
    throw ModelError("known parts must have one entry per delay slot");
  if (std::abs(plant.C.dot(T0)) == 0.0) throw ModelError("C*T0 must be nonzero");

  MatchingDecomposition dec;
  dec.known = known;
  dec.T0 = T0;
  dec.kappa = KappaSet::zero(k1, plant.n, plant.l, plant.m);
  for (int i = 0; i < k1; ++i) {
    dec.kappa.A[i] = project_rows(plant.A[i] - known.A0[i], T0, kSpanTol, "A", i);
    dec.kappa.D[i] = project_rows(plant.D[i] - known.D0[i], T0, kSpanTol, "D", i);
    dec.kappa.G[i] = project_rows(plant.G[i] - known.G0[i], T0, kSpanTol, "G", i);
    RowVector b = project_rows(plant.B[i] - known.B0[i], T0, kSpanTol, "B", i);
    dec.kappa.B[i] = b[0];
  }
  return dec;
}

PlantModel recompose(const PlantModel& shape, const MatchingDecomposition& dec) {
  PlantModel p = shape;
  const int k1 = p.slots();
  for (int i = 0; i < k1; ++i) {
    p.A[i] = dec.known.A0[i] + dec.T0 * dec.kappa.A[i];
    p.D[i] = dec.known.D0[i] + dec.T0 * dec.kappa.D[i];
    p.G[i] = dec.known.G0[i] + dec.T0 * dec.kappa.G[i];
    p.B[i] = dec.known.B0[i] + dec.T0 * dec.kappa.B[i];
  }
  return p;
}

void DelayGrid::validate() const {
  if (delays.empty() || delays[0] != 0.0)
    throw ModelError("delay grid must start at 0");
  for (size_t i = 1; i < delays.size(); ++i)
    if (delays[i] <= delays[i - 1])
      throw ModelError("delay grid must be strictly increasing");
}

PlantModel extend_to_grid(const PlantModel& plant, const DelayGrid& grid) {
  plant.validate();
  grid.validate();
  constexpr double kDelayTol = 1e-12;

  PlantModel ext = plant;
  const int kb1 = static_cast<int>(grid.delays.size());
  ext.delays = grid.delays;
  ext.A.assign(kb1, Matrix::Zero(plant.n, plant.n));
  ext.D.assign(kb1, Matrix::Zero(plant.n, plant.l));
  ext.G.assign(kb1, Matrix::Zero(plant.n, plant.m));
  ext.B.assign(kb1, Vector::Zero(plant.n));

  for (int j = 0; j < plant.slots(); ++j) {
    int match = -1;
    for (int i = 0; i < kb1; ++i) {
      if (std::abs(grid.delays[i] - plant.delays[j]) <= kDelayTol) {
        match = i;
        break;
      }
    }
    if (match < 0) {
      std::ostringstream os;
      os << "plant delay " << plant.delays[j] << " is missing from the grid";
      throw ModelError(os.str());
    }
    ext.A[match] = plant.A[j];
    ext.D[match] = plant.D[j];
    ext.G[match] = plant.G[j];
    ext.B[match] = plant.B[j];
  }
  return ext;
}

}  // namespace tdid

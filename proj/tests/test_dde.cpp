#include <doctest.h>

#include <chrono>
#include <cmath>

#include "tdid/dde.hpp"

using namespace tdid;

namespace {

// Exact method-of-steps solution of x' = -x(t-1), x = 1 for t <= 0.
// On [j, j+1] the solution is a polynomial in s = t - j obtained by
// integrating the previous interval's polynomial shifted by one.
struct MosOracle {
  std::vector<std::vector<double>> polys;

  explicit MosOracle(int intervals) {
    std::vector<double> prev{1.0};  // constant history on [-1, 0]
    for (int j = 0; j < intervals; ++j) {
      std::vector<double> cur(prev.size() + 1, 0.0);
      double end_value = 0.0;
      for (double a : prev) end_value += a;  // previous poly at s = 1
      cur[0] = j == 0 ? 1.0 : end_value;
      for (size_t i = 0; i < prev.size(); ++i)
        cur[i + 1] = -prev[i] / static_cast<double>(i + 1);
      polys.push_back(cur);
      prev = cur;
    }
  }

  double operator()(double t) const {
    if (t <= 0.0) return 1.0;
    const int j = std::min(static_cast<int>(polys.size()) - 1,
                           static_cast<int>(std::floor(t)));
    const double s = t - j;
    double v = 0.0;
    for (size_t i = polys[j].size(); i-- > 0;) v = v * s + polys[j][i];
    return v;
  }
};

double max_mos_error(double h, Interp interp) {
  MosOracle exact(3);
  SimConfig cfg;
  cfg.h = h;
  cfg.t_end = 3.0;
  cfg.record_stride = 1;
  cfg.interpolation = interp;
  auto rhs = [](double t, const Vector&,
                const std::function<Vector(double)>& lookback) {
    return Vector(-lookback(t - 1.0));
  };
  auto init = [](double) { return Vector(Vector::Ones(1)); };
  const Trajectory traj = integrate(rhs, init, cfg, {0.0, 1.0});
  double err = 0.0;
  for (size_t r = 0; r < traj.rows(); ++r)
    err = std::max(err, std::abs(traj.x[r][0] - exact(traj.t[r])));
  return err;
}

}  // namespace

TEST_CASE("method-of-steps oracle sanity") {
  MosOracle exact(3);
  CHECK(exact(0.5) == doctest::Approx(0.5));        // 1 - t on [0,1]
  CHECK(exact(1.0) == doctest::Approx(0.0));
  CHECK(exact(1.5) == doctest::Approx(-0.375));     // -s + s^2/2 at s=0.5
  CHECK(exact(2.0) == doctest::Approx(-0.5));
}

TEST_CASE("delayed RK4 matches the exact solution") {
  const auto start = std::chrono::steady_clock::now();
  CHECK(max_mos_error(1e-3, Interp::Linear) <= 1e-6);
  CHECK(max_mos_error(1e-3, Interp::CubicHermite) <= 1e-8);
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  CHECK(elapsed < 1.0);
}

TEST_CASE("halving the step improves the error at the expected rate") {
  const double lin_c = max_mos_error(4e-3, Interp::Linear);
  const double lin_f = max_mos_error(2e-3, Interp::Linear);
  CHECK(lin_c / lin_f >= 3.5);  // history interpolation limits order to 2

  // The method-of-steps solution on [0,3] is piecewise polynomial of degree
  // <= 3, which cubic-Hermite history readback reproduces to rounding, so the
  // cubic error sits at the noise floor at every step size.
  CHECK(max_mos_error(4e-3, Interp::CubicHermite) <= 1e-11);
  CHECK(max_mos_error(2e-3, Interp::CubicHermite) <= 1e-11);
}

TEST_CASE("no-delay integration reproduces the exponential") {
  SimConfig cfg;
  cfg.h = 1e-3;
  cfg.t_end = 1.0;
  auto rhs = [](double, const Vector& x,
                const std::function<Vector(double)>&) { return Vector(-x); };
  auto init = [](double) { return Vector(Vector::Ones(1)); };
  const Trajectory traj = integrate(rhs, init, cfg, {0.0});
  CHECK(traj.x.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("integration is deterministic") {
  auto run = [] {
    SimConfig cfg;
    cfg.h = 1e-3;
    cfg.t_end = 2.0;
    auto rhs = [](double t, const Vector& x,
                  const std::function<Vector(double)>& lookback) {
      return Vector(std::sin(t) * Vector::Ones(1) - 0.5 * lookback(t - 0.3) -
                    0.1 * x);
    };
    auto init = [](double) { return Vector(Vector::Zero(1)); };
    return integrate(rhs, init, cfg, {0.0, 0.3});
  };
  const Trajectory a = run(), b = run();
  REQUIRE(a.rows() == b.rows());
  for (size_t r = 0; r < a.rows(); ++r) CHECK(a.x[r][0] == b.x[r][0]);
}

TEST_CASE("causality: lookbacks never exceed the current stage time") {
  SimConfig cfg;
  cfg.h = 1e-2;
  cfg.t_end = 1.0;
  double worst = -1.0;
  auto rhs = [&worst](double t, const Vector&,
                      const std::function<Vector(double)>& lookback) {
    const Vector past = lookback(t - 0.1);
    worst = std::max(worst, (t - 0.1) - t);
    return Vector(-past);
  };
  auto init = [](double) { return Vector(Vector::Ones(1)); };
  CHECK_NOTHROW(integrate(rhs, init, cfg, {0.0, 0.1}));
  CHECK(worst < 0.0);
}

TEST_CASE("blow-up raises SimError with the failure time") {
  SimConfig cfg;
  cfg.h = 1e-3;
  cfg.t_end = 3.0;
  auto rhs = [](double, const Vector& x, const std::function<Vector(double)>&) {
    return Vector(Vector::Ones(1) + x.cwiseProduct(x));  // finite-time escape
  };
  auto init = [](double) { return Vector(Vector::Zero(1)); };
  CHECK_THROWS_AS(integrate(rhs, init, cfg, {0.0}), SimError);
}

TEST_CASE("delays smaller than the step are rejected") {
  SimConfig cfg;
  cfg.h = 1e-2;
  cfg.t_end = 1.0;
  auto rhs = [](double t, const Vector&,
                const std::function<Vector(double)>& lookback) {
    return Vector(-lookback(t - 1e-3));
  };
  auto init = [](double) { return Vector(Vector::Ones(1)); };
  CHECK_THROWS_AS(integrate(rhs, init, cfg, {0.0, 1e-3}), SimError);
}

TEST_CASE("history buffer lookup modes") {
  auto init = [](double t) { return Vector(t * Vector::Ones(1)); };
  HistoryBuffer buf(0.0, 0.5, init, Interp::Linear);
  // samples of x(t) = t^2 with derivative 2t
  for (int j = 0; j <= 4; ++j) {
    const double t = 0.5 * j;
    buf.append(Vector(t * t * Vector::Ones(1)),
               Vector(2 * t * Vector::Ones(1)));
  }
  CHECK(buf.lookup(-0.25)[0] == doctest::Approx(-0.25));  // init function
  CHECK(buf.lookup(1.0)[0] == doctest::Approx(1.0));      // exact node
  CHECK(buf.lookup(0.75)[0] == doctest::Approx(0.625));   // chord of t^2
  CHECK_THROWS_AS(buf.lookup(2.5), SimError);

  HistoryBuffer cub(0.0, 0.5, init, Interp::CubicHermite);
  for (int j = 0; j <= 4; ++j) {
    const double t = 0.5 * j;
    cub.append(Vector(t * t * Vector::Ones(1)),
               Vector(2 * t * Vector::Ones(1)));
  }
  // cubic Hermite reproduces quadratics exactly
  CHECK(cub.lookup(0.75)[0] == doctest::Approx(0.5625).epsilon(1e-12));

  buf.drop_before(1.0);
  CHECK(buf.lookup(1.25)[0] == doctest::Approx(1.625));
  CHECK_THROWS_AS(buf.lookup(0.25), SimError);
}

#include "tdid/example.hpp"

namespace tdid {

ExperimentConfig example_config() {
  ExperimentConfig cfg;
  const int n = 2, l = 2, m = 1;

  PlantModel& p = cfg.plant;
  p.n = n;
  p.l = l;
  p.m = m;
  p.delays = {0.0, 1.0, 1.7, 2.3};
  p.A.assign(4, Matrix::Zero(n, n));
  p.D.assign(4, Matrix::Zero(n, l));
  p.G.assign(4, Matrix::Zero(n, m));
  p.B.assign(4, Vector::Zero(n));
  p.A[0] << 0, 1, -2, -4;
  p.A[1] << 0, 0, -0.1, 0.2;
  p.D[2] << 0, 0, -0.5, -0.8;
  p.G[0] << 0, -2;
  p.B[0] << 0, 1;
  p.B[3] << 0, -1;
  p.C = RowVector(n);
  p.C << 1, 3;
  p.phi_name = "cube_root";
  p.psi_name = "square";
  p.lipschitz = 1.0;
  p.phi = make_phi(p.phi_name, n, l);
  p.psi = make_psi(p.psi_name, m);

  DelayGrid grid;
  grid.delays = {0.0, 1.0, 1.7, 2.3};
  cfg.grid = grid;

  IdentifierConfig& id = cfg.identifier;
  id.T0 = Vector(n);
  id.T0 << 0, 1;
  id.known.A0.assign(4, Matrix::Zero(n, n));
  id.known.A0[0] << 0, 1, 0, 0;
  id.known.D0.assign(4, Matrix::Zero(n, l));
  id.known.G0.assign(4, Matrix::Zero(n, m));
  id.known.B0.assign(4, Vector::Zero(n));
  id.gains.assign(4, SlotGains::scaled_identity(400.0, n, l, m));
  id.injection = InjectionMode::Output;
  id.K.assign(4, Vector::Zero(n));
  id.K[0] = 2.0 * id.T0;
  id.kappa_init = KappaSet::zero(4, n, l, m);

  InputSpec& in = cfg.input;
  for (double w : {2.3, 10.0, 20.2, 35.7, 51.9}) in.sines.push_back({1.0, w, 0.0});
  in.pulse = PulseTerm{1.0, 1.0, 0.5};

  cfg.sim.h = 1e-3;
  cfg.sim.t_end = 3000.0;
  cfg.sim.record_stride = 30;
  cfg.sim.interpolation = Interp::Linear;

  cfg.lmi.mode = PsiMode::Derived;
  cfg.lmi.search = SearchOptions{};

  cfg.pe.window = 1000.0;
  cfg.pe.quad_step = 0.03;
  cfg.pe.stride = 100.0;

  cfg.output.dir = "out";
  cfg.output.plots = true;
  return cfg;
}

ExperimentConfig bounded_variant_config() {
  ExperimentConfig cfg = example_config();
  PlantModel& p = cfg.plant;
  p.phi_name = "tanh";
  p.psi_name = "zero";
  p.phi = make_phi(p.phi_name, p.n, p.l);
  p.psi = make_psi(p.psi_name, p.m);
  return cfg;
}

std::vector<std::pair<std::string, double>> example_true_parameters() {
  return {
      {"A0_1_hat", -2.0}, {"A0_2_hat", -4.0}, {"A1_1_hat", -0.1},
      {"A1_2_hat", 0.2},  {"D2_1_hat", -0.5}, {"D2_2_hat", -0.8},
      {"G0_1_hat", -2.0}, {"B0_1_hat", 1.0},  {"B3_1_hat", -1.0},
  };
}

}  // namespace tdid

#include "tdid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tdid {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& section) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key))
      fail("unknown key \"" + key + "\" in section " + section);
  }
}

const json& require(const json& j, const std::string& key,
                    const std::string& section) {
  if (!j.contains(key)) fail("missing key \"" + key + "\" in section " + section);
  return j.at(key);
}

double get_num(const json& j, const std::string& what) {
  if (!j.is_number()) fail(what + " must be a number");
  return j.get<double>();
}

Vector get_vector(const json& j, const std::string& what) {
  if (!j.is_array()) fail(what + " must be an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = get_num(j.at(i), what);
  return v;
}

Matrix get_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(what + " must be a nonempty 2-d array");
  const size_t rows = j.size();
  const size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  Matrix M(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    const json& row = j.at(r);
    if (!row.is_array() || row.size() != cols)
      fail(what + " rows must all have the same length");
    for (size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          get_num(row.at(c), what);
  }
  return M;
}

std::vector<Matrix> get_matrix_list(const json& j, size_t count,
                                    const std::string& what) {
  if (!j.is_array() || j.size() != count)
    fail(what + " must list one matrix per delay slot");
  std::vector<Matrix> out;
  for (size_t i = 0; i < count; ++i) out.push_back(get_matrix(j.at(i), what));
  return out;
}

std::vector<Vector> get_vector_list(const json& j, size_t count,
                                    const std::string& what) {
  if (!j.is_array() || j.size() != count)
    fail(what + " must list one vector per delay slot");
  std::vector<Vector> out;
  for (size_t i = 0; i < count; ++i) out.push_back(get_vector(j.at(i), what));
  return out;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

PlantModel parse_plant(const json& j) {
  check_keys(j, {"n", "l", "m", "delays", "A", "D", "G", "B", "C", "phi",
                 "psi", "lipschitz"},
             "plant");
  PlantModel p;
  p.n = static_cast<int>(get_num(require(j, "n", "plant"), "plant.n"));
  p.l = static_cast<int>(get_num(require(j, "l", "plant"), "plant.l"));
  p.m = static_cast<int>(get_num(require(j, "m", "plant"), "plant.m"));
  const Vector delays = get_vector(require(j, "delays", "plant"), "plant.delays");
  p.delays.assign(delays.data(), delays.data() + delays.size());
  const size_t k1 = p.delays.size();
  p.A = get_matrix_list(require(j, "A", "plant"), k1, "plant.A");
  p.D = get_matrix_list(require(j, "D", "plant"), k1, "plant.D");
  p.G = get_matrix_list(require(j, "G", "plant"), k1, "plant.G");
  p.B = get_vector_list(require(j, "B", "plant"), k1, "plant.B");
  p.C = get_vector(require(j, "C", "plant"), "plant.C").transpose();
  p.phi_name = require(j, "phi", "plant").get<std::string>();
  p.psi_name = require(j, "psi", "plant").get<std::string>();
  if (j.contains("lipschitz"))
    p.lipschitz = get_num(j.at("lipschitz"), "plant.lipschitz");
  try {
    p.phi = make_phi(p.phi_name, p.n, p.l);
    p.psi = make_psi(p.psi_name, p.m);
    p.validate();
  } catch (const ModelError& e) {
    fail(std::string("plant: ") + e.what());
  }
  return p;
}

DelayGrid parse_grid(const json& j) {
  check_keys(j, {"delays", "term_counts"}, "grid");
  DelayGrid g;
  const Vector delays = get_vector(require(j, "delays", "grid"), "grid.delays");
  g.delays.assign(delays.data(), delays.data() + delays.size());
  if (j.contains("term_counts")) {
    const json& tc = j.at("term_counts");
    check_keys(tc, {"A", "D", "G", "B"}, "grid.term_counts");
    const char* names[4] = {"A", "D", "G", "B"};
    for (int i = 0; i < 4; ++i)
      if (tc.contains(names[i]))
        g.term_counts[static_cast<size_t>(i)] =
            static_cast<int>(get_num(tc.at(names[i]), "grid.term_counts"));
  }
  try {
    g.validate();
  } catch (const ModelError& e) {
    fail(std::string("grid: ") + e.what());
  }
  return g;
}

InputSpec parse_input(const json& j) {
  check_keys(j, {"sines", "pulse", "offset"}, "input");
  InputSpec spec;
  if (j.contains("sines")) {
    for (const auto& s : j.at("sines")) {
      if (!s.is_array() || s.size() != 3)
        fail("input.sines entries must be [amplitude, omega, phase]");
      spec.sines.push_back({get_num(s.at(0), "sine"), get_num(s.at(1), "sine"),
                            get_num(s.at(2), "sine")});
    }
  }
  if (j.contains("pulse")) {
    const json& p = j.at("pulse");
    check_keys(p, {"amplitude", "period", "duty"}, "input.pulse");
    PulseTerm pulse;
    pulse.amplitude = get_num(require(p, "amplitude", "input.pulse"), "pulse");
    pulse.period = get_num(require(p, "period", "input.pulse"), "pulse");
    pulse.duty = get_num(require(p, "duty", "input.pulse"), "pulse");
    spec.pulse = pulse;
  }
  if (j.contains("offset")) spec.offset = get_num(j.at("offset"), "input.offset");
  try {
    spec.validate();
  } catch (const ModelError& e) {
    fail(std::string("input: ") + e.what());
  }
  return spec;
}

SimConfig parse_sim(const json& j) {
  check_keys(j, {"h", "t_end", "record_stride", "interpolation"}, "sim");
  SimConfig sim;
  sim.h = get_num(require(j, "h", "sim"), "sim.h");
  sim.t_end = get_num(require(j, "t_end", "sim"), "sim.t_end");
  if (j.contains("record_stride"))
    sim.record_stride =
        static_cast<int>(get_num(j.at("record_stride"), "sim.record_stride"));
  if (j.contains("interpolation")) {
    const std::string mode = j.at("interpolation").get<std::string>();
    if (mode == "linear") {
      sim.interpolation = Interp::Linear;
    } else if (mode == "cubic-hermite") {
      sim.interpolation = Interp::CubicHermite;
    } else {
      fail("sim.interpolation must be \"linear\" or \"cubic-hermite\"");
    }
  }
  try {
    sim.validate();
  } catch (const SimError& e) {
    fail(std::string("sim: ") + e.what());
  }
  return sim;
}

IdentifierConfig parse_identifier(const json& j, const json& dec,
                                  const PlantModel& effective) {
  check_keys(j, {"gamma", "gains", "injection", "K", "Y", "initial_estimates"},
             "identifier");
  check_keys(dec, {"T0", "A0", "D0", "G0", "B0"}, "decomposition");
  IdentifierConfig cfg;
  const size_t k1 = static_cast<size_t>(effective.slots());
  const int n = effective.n, l = effective.l, m = effective.m;

  cfg.T0 = get_vector(require(dec, "T0", "decomposition"), "decomposition.T0");
  cfg.known.A0 = get_matrix_list(require(dec, "A0", "decomposition"), k1,
                                 "decomposition.A0");
  cfg.known.D0 = get_matrix_list(require(dec, "D0", "decomposition"), k1,
                                 "decomposition.D0");
  cfg.known.G0 = get_matrix_list(require(dec, "G0", "decomposition"), k1,
                                 "decomposition.G0");
  cfg.known.B0 = get_vector_list(require(dec, "B0", "decomposition"), k1,
                                 "decomposition.B0");

  if (j.contains("gamma")) {
    const double gamma = get_num(j.at("gamma"), "identifier.gamma");
    cfg.gains.assign(k1, SlotGains::scaled_identity(gamma, n, l, m));
  } else if (j.contains("gains")) {
    const json& g = j.at("gains");
    if (!g.is_array() || g.size() != k1)
      fail("identifier.gains must list one entry per delay slot");
    for (const auto& gi : g) {
      check_keys(gi, {"A", "D", "G", "B"}, "identifier.gains[]");
      SlotGains sg;
      sg.A = get_matrix(require(gi, "A", "gains"), "gains.A");
      sg.D = get_matrix(require(gi, "D", "gains"), "gains.D");
      sg.G = get_matrix(require(gi, "G", "gains"), "gains.G");
      sg.B = get_num(require(gi, "B", "gains"), "gains.B");
      cfg.gains.push_back(sg);
    }
  } else {
    fail("identifier needs either \"gamma\" or \"gains\"");
  }

  std::string mode = "output";
  if (j.contains("injection")) mode = j.at("injection").get<std::string>();
  if (mode == "output") {
    cfg.injection = InjectionMode::Output;
    cfg.K = get_vector_list(require(j, "K", "identifier"), k1, "identifier.K");
  } else if (mode == "full_state") {
    cfg.injection = InjectionMode::FullState;
    cfg.Y = get_matrix_list(require(j, "Y", "identifier"), k1, "identifier.Y");
  } else {
    fail("identifier.injection must be \"output\" or \"full_state\"");
  }

  cfg.kappa_init = KappaSet::zero(static_cast<int>(k1), n, l, m);
  if (j.contains("initial_estimates")) {
    const json& ie = j.at("initial_estimates");
    check_keys(ie, {"A", "D", "G", "B"}, "identifier.initial_estimates");
    if (ie.contains("A")) {
      auto rows = get_vector_list(ie.at("A"), k1, "initial_estimates.A");
      for (size_t i = 0; i < k1; ++i) cfg.kappa_init.A[i] = rows[i].transpose();
    }
    if (ie.contains("D")) {
      auto rows = get_vector_list(ie.at("D"), k1, "initial_estimates.D");
      for (size_t i = 0; i < k1; ++i) cfg.kappa_init.D[i] = rows[i].transpose();
    }
    if (ie.contains("G")) {
      auto rows = get_vector_list(ie.at("G"), k1, "initial_estimates.G");
      for (size_t i = 0; i < k1; ++i) cfg.kappa_init.G[i] = rows[i].transpose();
    }
    if (ie.contains("B")) {
      const Vector b = get_vector(ie.at("B"), "initial_estimates.B");
      if (static_cast<size_t>(b.size()) != k1)
        fail("initial_estimates.B must have one entry per slot");
      for (size_t i = 0; i < k1; ++i)
        cfg.kappa_init.B[i] = b[static_cast<Eigen::Index>(i)];
    }
  }
  try {
    cfg.validate(effective);
  } catch (const ModelError& e) {
    fail(std::string("identifier: ") + e.what());
  }
  return cfg;
}

}  // namespace

PlantModel ExperimentConfig::effective_plant() const {
  if (grid) return extend_to_grid(plant, *grid);
  return plant;
}

PsiProblem ExperimentConfig::psi_problem() const {
  const PlantModel eff = effective_plant();
  PsiProblem prob;
  prob.n = eff.n;
  prob.l = eff.l;
  prob.A = eff.A;
  prob.D = eff.D;
  prob.Y = identifier.effective_injection(eff.C);
  prob.lipschitz = eff.lipschitz;
  prob.T0 = identifier.T0;
  prob.C = eff.C;
  prob.mode = lmi.mode;
  return prob;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // report the byte offset as line/column
    size_t line = 1, col = 1;
    for (size_t i = 0; i < e.byte && i < json_text.size(); ++i) {
      if (json_text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "JSON parse error at line " << line << ", column " << col << ": "
       << e.what();
    throw ConfigError(os.str());
  }

  check_keys(j, {"version", "plant", "grid", "decomposition", "identifier",
                 "input", "sim", "lmi", "pe", "output"},
             "top level");
  ExperimentConfig cfg;
  cfg.version =
      static_cast<int>(get_num(require(j, "version", "top level"), "version"));
  if (cfg.version != 1) fail("unsupported config version");
  cfg.plant = parse_plant(require(j, "plant", "top level"));
  if (j.contains("grid")) cfg.grid = parse_grid(j.at("grid"));

  const PlantModel effective = cfg.effective_plant();
  cfg.identifier = parse_identifier(require(j, "identifier", "top level"),
                                    require(j, "decomposition", "top level"),
                                    effective);
  if (cfg.grid) {
    cfg.identifier.active.A = cfg.grid->term_counts[0];
    cfg.identifier.active.D = cfg.grid->term_counts[1];
    cfg.identifier.active.G = cfg.grid->term_counts[2];
    cfg.identifier.active.B = cfg.grid->term_counts[3];
  }
  cfg.input = parse_input(require(j, "input", "top level"));
  cfg.sim = parse_sim(require(j, "sim", "top level"));

  if (j.contains("lmi")) {
    const json& lj = j.at("lmi");
    check_keys(lj, {"mode", "margin", "max_iters", "restarts", "seed", "step0"},
               "lmi");
    if (lj.contains("mode")) {
      const std::string mode = lj.at("mode").get<std::string>();
      if (mode == "verbatim") {
        cfg.lmi.mode = PsiMode::Verbatim;
      } else if (mode == "derived") {
        cfg.lmi.mode = PsiMode::Derived;
      } else {
        fail("lmi.mode must be \"verbatim\" or \"derived\"");
      }
    }
    if (lj.contains("margin"))
      cfg.lmi.search.margin = get_num(lj.at("margin"), "lmi.margin");
    if (lj.contains("max_iters"))
      cfg.lmi.search.max_iters =
          static_cast<int>(get_num(lj.at("max_iters"), "lmi.max_iters"));
    if (lj.contains("restarts"))
      cfg.lmi.search.restarts =
          static_cast<int>(get_num(lj.at("restarts"), "lmi.restarts"));
    if (lj.contains("seed"))
      cfg.lmi.search.seed =
          static_cast<std::uint64_t>(get_num(lj.at("seed"), "lmi.seed"));
    if (lj.contains("step0"))
      cfg.lmi.search.step0 = get_num(lj.at("step0"), "lmi.step0");
  }
  if (j.contains("pe")) {
    const json& pj = j.at("pe");
    check_keys(pj, {"window", "quad_step", "stride"}, "pe");
    if (pj.contains("window"))
      cfg.pe.window = get_num(pj.at("window"), "pe.window");
    if (pj.contains("quad_step"))
      cfg.pe.quad_step = get_num(pj.at("quad_step"), "pe.quad_step");
    if (pj.contains("stride"))
      cfg.pe.stride = get_num(pj.at("stride"), "pe.stride");
  }
  if (j.contains("output")) {
    const json& oj = j.at("output");
    check_keys(oj, {"dir", "plots"}, "output");
    if (oj.contains("dir")) cfg.output.dir = oj.at("dir").get<std::string>();
    if (oj.contains("plots")) cfg.output.plots = oj.at("plots").get<bool>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["version"] = cfg.version;

  json pj;
  pj["n"] = cfg.plant.n;
  pj["l"] = cfg.plant.l;
  pj["m"] = cfg.plant.m;
  pj["delays"] = cfg.plant.delays;
  pj["A"] = json::array();
  pj["D"] = json::array();
  pj["G"] = json::array();
  pj["B"] = json::array();
  for (int i = 0; i < cfg.plant.slots(); ++i) {
    pj["A"].push_back(matrix_to_json(cfg.plant.A[i]));
    pj["D"].push_back(matrix_to_json(cfg.plant.D[i]));
    pj["G"].push_back(matrix_to_json(cfg.plant.G[i]));
    pj["B"].push_back(vector_to_json(cfg.plant.B[i]));
  }
  pj["C"] = vector_to_json(cfg.plant.C.transpose());
  pj["phi"] = cfg.plant.phi_name;
  pj["psi"] = cfg.plant.psi_name;
  pj["lipschitz"] = cfg.plant.lipschitz;
  j["plant"] = pj;

  if (cfg.grid) {
    json gj;
    gj["delays"] = cfg.grid->delays;
    if (cfg.grid->term_counts != std::array<int, 4>{-1, -1, -1, -1}) {
      json tc;
      tc["A"] = cfg.grid->term_counts[0];
      tc["D"] = cfg.grid->term_counts[1];
      tc["G"] = cfg.grid->term_counts[2];
      tc["B"] = cfg.grid->term_counts[3];
      gj["term_counts"] = tc;
    }
    j["grid"] = gj;
  }

  json dj;
  dj["T0"] = vector_to_json(cfg.identifier.T0);
  dj["A0"] = json::array();
  dj["D0"] = json::array();
  dj["G0"] = json::array();
  dj["B0"] = json::array();
  for (size_t i = 0; i < cfg.identifier.known.A0.size(); ++i) {
    dj["A0"].push_back(matrix_to_json(cfg.identifier.known.A0[i]));
    dj["D0"].push_back(matrix_to_json(cfg.identifier.known.D0[i]));
    dj["G0"].push_back(matrix_to_json(cfg.identifier.known.G0[i]));
    dj["B0"].push_back(vector_to_json(cfg.identifier.known.B0[i]));
  }
  j["decomposition"] = dj;

  json ij;
  ij["gains"] = json::array();
  for (const auto& g : cfg.identifier.gains) {
    json gi;
    gi["A"] = matrix_to_json(g.A);
    gi["D"] = matrix_to_json(g.D);
    gi["G"] = matrix_to_json(g.G);
    gi["B"] = g.B;
    ij["gains"].push_back(gi);
  }
  if (cfg.identifier.injection == InjectionMode::Output) {
    ij["injection"] = "output";
    ij["K"] = json::array();
    for (const auto& k : cfg.identifier.K) ij["K"].push_back(vector_to_json(k));
  } else {
    ij["injection"] = "full_state";
    ij["Y"] = json::array();
    for (const auto& y : cfg.identifier.Y) ij["Y"].push_back(matrix_to_json(y));
  }
  {
    json ie;
    ie["A"] = json::array();
    ie["D"] = json::array();
    ie["G"] = json::array();
    ie["B"] = json::array();
    for (int i = 0; i < cfg.identifier.kappa_init.slots(); ++i) {
      ie["A"].push_back(vector_to_json(cfg.identifier.kappa_init.A[i].transpose()));
      ie["D"].push_back(vector_to_json(cfg.identifier.kappa_init.D[i].transpose()));
      ie["G"].push_back(vector_to_json(cfg.identifier.kappa_init.G[i].transpose()));
      ie["B"].push_back(cfg.identifier.kappa_init.B[i]);
    }
    ij["initial_estimates"] = ie;
  }
  j["identifier"] = ij;

  json inj;
  inj["sines"] = json::array();
  for (const auto& s : cfg.input.sines)
    inj["sines"].push_back(json::array({s.amplitude, s.omega, s.phase}));
  if (cfg.input.pulse) {
    json pu;
    pu["amplitude"] = cfg.input.pulse->amplitude;
    pu["period"] = cfg.input.pulse->period;
    pu["duty"] = cfg.input.pulse->duty;
    inj["pulse"] = pu;
  }
  inj["offset"] = cfg.input.offset;
  j["input"] = inj;

  json sj;
  sj["h"] = cfg.sim.h;
  sj["t_end"] = cfg.sim.t_end;
  sj["record_stride"] = cfg.sim.record_stride;
  sj["interpolation"] =
      cfg.sim.interpolation == Interp::Linear ? "linear" : "cubic-hermite";
  j["sim"] = sj;

  json lj;
  lj["mode"] = to_string(cfg.lmi.mode);
  lj["margin"] = cfg.lmi.search.margin;
  lj["max_iters"] = cfg.lmi.search.max_iters;
  lj["restarts"] = cfg.lmi.search.restarts;
  lj["seed"] = cfg.lmi.search.seed;
  if (cfg.lmi.search.step0 > 0) lj["step0"] = cfg.lmi.search.step0;
  j["lmi"] = lj;

  json pej;
  pej["window"] = cfg.pe.window;
  pej["quad_step"] = cfg.pe.quad_step;
  if (cfg.pe.stride > 0) pej["stride"] = cfg.pe.stride;
  j["pe"] = pej;

  json oj;
  oj["dir"] = cfg.output.dir;
  oj["plots"] = cfg.output.plots;
  j["output"] = oj;

  return j.dump(2);
}

}  // namespace tdid

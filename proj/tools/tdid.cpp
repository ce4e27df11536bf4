#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <iostream>
#include <sstream>

#include "tdid/config.hpp"
#include "tdid/csv.hpp"
#include "tdid/example.hpp"
#include "tdid/identifier.hpp"
#include "tdid/lmi.hpp"
#include "tdid/svg.hpp"

namespace fs = std::filesystem;
using namespace tdid;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitBlowup = 3;
constexpr int kExitWindow = 4;

// Piecewise-linear read-back of a recorded trajectory; earlier times fall
// through to the initial history.
std::function<Vector(double)> trajectory_state_fn(
    const Trajectory& traj, int n,
    const std::function<Vector(double)>& history = nullptr) {
  return [&traj, n, history](double t) -> Vector {
    if (traj.t.empty() || t < traj.t.front()) {
      return history ? history(t) : Vector(Vector::Zero(n));
    }
    if (t >= traj.t.back()) return traj.x.back();
    auto it = std::upper_bound(traj.t.begin(), traj.t.end(), t);
    const size_t j = static_cast<size_t>(it - traj.t.begin());
    const double t0 = traj.t[j - 1], t1 = traj.t[j];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * traj.x[j - 1] + w * traj.x[j];
  };
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// One SVG per estimate family (and one for the state error components).
void write_plots(const ExperimentConfig& cfg, const RunResult& run,
                 const std::string& dir) {
  const PlantModel plant = cfg.effective_plant();
  const int n = plant.n, l = plant.l, m = plant.m, slots = plant.slots();

  std::vector<PlotSeries> eps(static_cast<size_t>(n));
  for (int c = 0; c < n; ++c) eps[c].label = "eps_" + std::to_string(c + 1);
  const size_t rows = std::min(run.plant_x.rows(), run.xhat.rows());
  for (size_t r = 0; r < rows; ++r) {
    for (int c = 0; c < n; ++c) {
      eps[c].x.push_back(run.plant_x.t[r]);
      eps[c].y.push_back(run.plant_x.x[r](c) - run.xhat.x[r](c));
    }
  }
  write_file_atomic(join(dir, "eps.svg"),
                    render_line_plot("state error", "t [s]", "eps", eps));

  const auto names = kappa_column_names(slots, n, l, m);
  struct Family {
    char tag;
    const char* file;
    const char* title;
  };
  const Family families[] = {{'A', "a_hat.svg", "A-term estimates"},
                             {'D', "d_hat.svg", "D-term estimates"},
                             {'G', "g_hat.svg", "G-term estimates"},
                             {'B', "b_hat.svg", "B-term estimates"}};
  for (const Family& fam : families) {
    std::vector<PlotSeries> series;
    std::vector<int> cols;
    for (size_t c = 0; c < names.size(); ++c) {
      if (names[c][0] == fam.tag) {
        cols.push_back(static_cast<int>(c));
        series.push_back({names[c], {}, {}});
      }
    }
    for (const DiagnosticsRecord& rec : run.diagnostics) {
      for (size_t k = 0; k < cols.size(); ++k) {
        series[k].x.push_back(rec.t);
        series[k].y.push_back(rec.kappa_hat(cols[k]));
      }
    }
    write_file_atomic(join(dir, fam.file),
                      render_line_plot(fam.title, "t [s]", "estimate", series));
  }
}

int cmd_simulate(const ExperimentConfig& cfg) {
  const PlantModel plant = cfg.effective_plant();
  Trajectory traj;
  try {
    traj = simulate_plant(plant, cfg.input, cfg.sim);
  } catch (const SimError& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kExitBlowup;
  }
  ensure_dir(cfg.output.dir);
  write_file_atomic(join(cfg.output.dir, "trajectory.csv"), trajectory_csv(traj));
  std::cout << "wrote " << join(cfg.output.dir, "trajectory.csv") << " ("
            << traj.rows() << " rows)\n";
  return 0;
}

int cmd_identify(const ExperimentConfig& cfg) {
  const PlantModel plant = cfg.effective_plant();
  RunResult run;
  try {
    run = run_identification(plant, cfg.input, cfg.identifier, cfg.sim);
  } catch (const SimError& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kExitBlowup;
  }
  ensure_dir(cfg.output.dir);
  write_file_atomic(
      join(cfg.output.dir, "diagnostics.csv"),
      diagnostics_csv(run.diagnostics, plant.slots(), plant.n, plant.l, plant.m));
  std::cout << "wrote " << join(cfg.output.dir, "diagnostics.csv") << " ("
            << run.diagnostics.size() << " rows)\n";
  if (cfg.output.plots) write_plots(cfg, run, cfg.output.dir);
  return 0;
}

int cmd_lmi_check(const ExperimentConfig& cfg) {
  const PsiProblem prob = cfg.psi_problem();
  LmiCertificate cert = find_feasible(prob, cfg.lmi.search);
  if (cert.verdict == Verdict::Feasible) {
    cert = verify_certificate(prob, cert.P, cert.S);
  }
  ensure_dir(cfg.output.dir);
  write_file_atomic(join(cfg.output.dir, "certificate.json"),
                    certificate_to_json(cert));
  std::cout << "verdict=" << to_string(cert.verdict)
            << " max_eig_psi=" << cert.max_eig_psi
            << " equality_residual=" << cert.equality_residual << "\n";
  if (!cert.detail.empty()) std::cout << cert.detail << "\n";
  return cert.verdict == Verdict::Feasible ? 0 : 1;
}

int cmd_pe_check(const ExperimentConfig& cfg) {
  if (cfg.pe.window > cfg.sim.t_end) {
    std::cerr << "PE window (" << cfg.pe.window << " s) exceeds horizon ("
              << cfg.sim.t_end << " s)\n";
    return kExitWindow;
  }
  const PlantModel plant = cfg.effective_plant();
  Trajectory traj;
  try {
    traj = simulate_plant(plant, cfg.input, cfg.sim);
  } catch (const SimError& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kExitBlowup;
  }
  auto state = trajectory_state_fn(traj, plant.n);
  auto input = [&cfg](double t) { return eval_input(cfg.input, t); };
  PhiSeries phi = build_regressor(plant, state, input, 0.0, cfg.sim.t_end,
                                  cfg.pe.quad_step);
  PEReport report = pe_check(phi, cfg.pe.window, cfg.pe.stride);
  ensure_dir(cfg.output.dir);
  write_file_atomic(join(cfg.output.dir, "pe_report.csv"), pe_report_csv(report));
  std::cout << "alpha=" << report.alpha << " dim=" << report.gramian_dim
            << " windows=" << report.per_window.size() << "\n";
  return 0;
}

int cmd_reproduce_example(const ExperimentConfig& cfg) {
  const PlantModel plant = cfg.effective_plant();
  const std::string dir = cfg.output.dir;
  ensure_dir(dir);

  std::cout << "[1/4] stability certificate search\n";
  const PsiProblem prob = cfg.psi_problem();
  LmiCertificate cert = find_feasible(prob, cfg.lmi.search);
  write_file_atomic(join(dir, "certificate.json"), certificate_to_json(cert));
  std::cout << "  verdict=" << to_string(cert.verdict)
            << " max_eig_psi=" << cert.max_eig_psi << "\n";

  std::cout << "[2/4] identification run (t_end=" << cfg.sim.t_end << " s)\n";
  RunResult run;
  try {
    run = run_identification(plant, cfg.input, cfg.identifier, cfg.sim,
                             cert.verdict == Verdict::Feasible ? &cert : nullptr);
  } catch (const SimError& e) {
    std::cerr << "identification stage failed: " << e.what() << "\n";
    return kExitBlowup;
  }
  write_file_atomic(join(dir, "trajectory.csv"), trajectory_csv(run.plant_x));
  write_file_atomic(
      join(dir, "diagnostics.csv"),
      diagnostics_csv(run.diagnostics, plant.slots(), plant.n, plant.l, plant.m));

  std::cout << "[3/4] persistent-excitation check (window=" << cfg.pe.window
            << " s)\n";
  auto state = trajectory_state_fn(run.plant_x, plant.n);
  auto input = [&cfg](double t) { return eval_input(cfg.input, t); };
  PhiSeries phi = build_regressor(plant, state, input, 0.0, cfg.sim.t_end,
                                  cfg.pe.quad_step);
  PEReport report = pe_check(phi, cfg.pe.window, cfg.pe.stride);
  write_file_atomic(join(dir, "pe_report.csv"), pe_report_csv(report));
  std::cout << "  alpha=" << report.alpha << "\n";

  std::cout << "[4/4] summary\n";
  const auto names = kappa_column_names(plant.slots(), plant.n, plant.l, plant.m);
  std::map<std::string, double> truth;
  for (const auto& [k, v] : example_true_parameters()) truth[k] = v;

  // Tail average over the final 5 % of the horizon.
  const double t_tail = cfg.sim.t_end * 0.95;
  Vector tail = Vector::Zero(static_cast<int>(names.size()));
  int count = 0;
  for (const DiagnosticsRecord& rec : run.diagnostics) {
    if (rec.t >= t_tail) {
      tail += rec.kappa_hat;
      ++count;
    }
  }
  if (count > 0) tail /= static_cast<double>(count);

  std::ostringstream table;
  table << "parameter,target,final,tail_mean\n";
  std::cout << "  parameter      target     final       tail-mean\n";
  const Vector final_flat = run.kappa_final.flatten();
  for (size_t c = 0; c < names.size(); ++c) {
    const double target = truth.count(names[c]) ? truth[names[c]] : 0.0;
    table << names[c] << ',' << csv_double(target) << ','
          << csv_double(final_flat(static_cast<int>(c))) << ','
          << csv_double(tail(static_cast<int>(c))) << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "  %-12s %9.4g  %10.5g  %10.5g\n",
                  names[c].c_str(), target, final_flat(static_cast<int>(c)),
                  tail(static_cast<int>(c)));
    std::cout << line;
  }
  write_file_atomic(join(dir, "summary.csv"), table.str());

  if (cfg.output.plots) write_plots(cfg, run, dir);
  std::cout << "artifacts in " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("TDID_THREADS")) {
    const int t = std::atoi(threads);
    if (t > 0) Eigen::setNbThreads(t);
  }

  CLI::App app{"adaptive identification of nonlinear time-delay systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  bool plots = false;
  long long seed = -1;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config (JSON)");
    if (need_config) opt->required();
    sub->add_option("--out", out_override, "output directory override");
    sub->add_flag("--plots", plots, "emit SVG figures");
    sub->add_option("--seed", seed, "certificate-search seed override");
  };

  CLI::App* sim = app.add_subcommand("simulate", "integrate the plant, write trajectory.csv");
  CLI::App* ident = app.add_subcommand("identify", "run the adaptive identifier, write diagnostics.csv");
  CLI::App* lmi = app.add_subcommand("lmi-check", "search and verify a stability certificate");
  CLI::App* pe = app.add_subcommand("pe-check", "windowed excitation Gramian report");
  CLI::App* repro = app.add_subcommand("reproduce-example", "run the built-in benchmark end to end");
  for (CLI::App* sub : {sim, ident, lmi, pe}) add_common(sub, true);
  add_common(repro, false);

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    if (repro->parsed() && config_path.empty()) {
      cfg = example_config();
    } else {
      cfg = load_config(config_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitParse;
  }
  if (!out_override.empty()) cfg.output.dir = out_override;
  if (plots) cfg.output.plots = true;
  if (seed >= 0) cfg.lmi.search.seed = static_cast<std::uint64_t>(seed);

  try {
    if (sim->parsed()) return cmd_simulate(cfg);
    if (ident->parsed()) return cmd_identify(cfg);
    if (lmi->parsed()) return cmd_lmi_check(cfg);
    if (pe->parsed()) return cmd_pe_check(cfg);
    return cmd_reproduce_example(cfg);
  } catch (const ModelError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// pmmctl: synthesis, simulation, robustness, PWM, and identification for
// multi-phase permanent-magnet motors with non-sinusoidal torque functions.
//
// Exit codes: 0 success, 2 infeasible problem, 3 validation-gate failure,
// 4 I/O or schema error.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmmctl/config.hpp"
#include "pmmctl/controller.hpp"
#include "pmmctl/gram.hpp"
#include "pmmctl/json_io.hpp"
#include "pmmctl/model.hpp"
#include "pmmctl/pwm.hpp"
#include "pmmctl/robust.hpp"
#include "pmmctl/sim.hpp"
#include "pmmctl/svgplot.hpp"
#include "pmmctl/synth.hpp"
#include "pmmctl/trigpoly.hpp"

namespace fs = std::filesystem;
using namespace pmmctl;

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;

SynthOptions synth_options(const ProjectConfig& cfg,
                           const std::string& solver_override) {
  SynthOptions opt;
  opt.mode = cfg.solver_mode;
  if (solver_override == "sdp") opt.mode = SolverMode::Sdp;
  if (solver_override == "sampled") opt.mode = SolverMode::Sampled;
  opt.voltage_constraints = cfg.voltage_constraints;
  opt.V_min = cfg.V_min;
  opt.V_max = cfg.V_max;
  opt.K = cfg.K;
  opt.omega_ref = cfg.omega_ref;
  return opt;
}

int cmd_synth(const std::string& config_path, const std::string& out_path,
              const std::string& solver_override) {
  const ProjectConfig cfg = load_project_config(config_path);
  const CancellationSystem sys =
      build_cancellation_system(cfg.motor, cfg.effective_M_ctrl());
  const ConsistencyReport cons = check_consistency(sys);
  std::cerr << "cancellation system: " << sys.rows() << " equations, "
            << sys.cols() << " unknowns, rank " << cons.rank << ", nullity "
            << cons.nullity << "\n";
  if (!cons.consistent) {
    std::cout << json{{"error", "infeasible"},
                      {"reason", "cancellation system inconsistent"},
                      {"residual", cons.residual}}
                     .dump()
              << "\n";
    return kExitInfeasible;
  }
  const ControlSolution sol = synthesize(
      cfg.motor, cfg.effective_M_ctrl(), cfg.s_max,
      synth_options(cfg, solver_override));
  save_json_file(out_path, to_json(sol));
  std::cerr << "t_opt = " << sol.t_opt << ", harmonic residual = "
            << sol.residuals.max_harmonic_residual << ", wrote " << out_path
            << "\n";
  const double gate = 1e-6 * std::max(1.0, sol.t_opt);
  if (sol.residuals.max_harmonic_residual > gate ||
      sol.residuals.max_bound_violation > 1e-6) {
    std::cerr << "validation gate failed (residual or bound violation)\n";
    return kExitValidation;
  }
  return 0;
}

MotorParams apply_scenario(MotorParams mp, const std::string& scenario) {
  if (scenario == "normal" || scenario == "unbalanced" || scenario == "custom" ||
      scenario.empty())
    return mp;
  if (scenario.rfind("faulty:", 0) == 0) {
    const int j = std::stoi(scenario.substr(7));
    if (j < 1 || j > mp.n_coils)
      throw SchemaError("scenario: coil index out of range");
    mp.faulty[static_cast<std::size_t>(j - 1)] = true;
    return mp;
  }
  throw SchemaError("unknown scenario \"" + scenario + "\"");
}

void plot_trace(const fs::path& path, const MotorParams& mp,
                const SimTrace& trace, double omega_ref) {
  std::vector<SvgPanel> panels;
  {
    SvgPanel p("torque functions", "rotor angle (rad)", "f (1/(s^2 A))");
    for (int j = 0; j < mp.n_coils; ++j) {
      PlotSeries s;
      s.color = series_color(j);
      for (int i = 0; i <= 400; ++i) {
        const double th = kTwoPi * i / 400;
        s.x.push_back(th);
        s.y.push_back(mp.torque_fns[static_cast<std::size_t>(j)].eval(th));
      }
      p.add(std::move(s));
    }
    panels.push_back(std::move(p));
  }
  {
    SvgPanel p("coil currents", "t (s)", "i (A)");
    for (int j = 0; j < mp.n_coils; ++j)
      p.add({trace.t, trace.currents[static_cast<std::size_t>(j)],
             series_color(j)});
    panels.push_back(std::move(p));
  }
  {
    SvgPanel p("coil currents (tail)", "t (s)", "i (A)");
    const std::size_t n = trace.size();
    const std::size_t start = n > n / 20 ? n - n / 20 : 0;
    for (int j = 0; j < mp.n_coils; ++j) {
      PlotSeries s;
      s.color = series_color(j);
      s.x.assign(trace.t.begin() + static_cast<std::ptrdiff_t>(start), trace.t.end());
      const auto& cur = trace.currents[static_cast<std::size_t>(j)];
      s.y.assign(cur.begin() + static_cast<std::ptrdiff_t>(start), cur.end());
      p.add(std::move(s));
    }
    panels.push_back(std::move(p));
  }
  {
    SvgPanel p("angular velocity", "t (s)", "x2 (rad/s)");
    p.add({trace.t, trace.x2, series_color(0)});
    std::vector<double> ref(trace.size(), omega_ref);
    p.add({trace.t, ref, "#999999"});
    panels.push_back(std::move(p));
  }
  write_svg_grid(path.string(), panels);
}

int run_one_scenario(const ProjectConfig& cfg, const ControlSolution& sol,
                     const std::string& scenario, std::uint64_t seed,
                     const fs::path& out_dir, bool plots) {
  const MotorParams mp = apply_scenario(cfg.motor, scenario);
  FeedbackLaw law(sol, mp, cfg.omega_ref, cfg.K);
  SimConfig sc = cfg.sim;
  sc.seed = seed;
  if (cfg.noise.any()) sc.noise = cfg.noise;
  const SimTrace trace = run_closed_loop(mp, law, sc);
  const std::string tag = scenario.empty() ? "normal" : scenario;
  std::string safe_tag = tag;
  for (auto& c : safe_tag)
    if (c == ':') c = '_';
  const fs::path csv = out_dir / ("trace_" + safe_tag + ".csv");
  write_trace_csv(csv.string(), trace);
  const double rt = response_time(trace, cfg.omega_ref);
  std::cerr << "scenario " << tag << ": response time (2% band) = " << rt
            << " s, wrote " << csv << "\n";
  if (plots) plot_trace(out_dir / ("trace_" + safe_tag + ".svg"), mp, trace,
                        cfg.omega_ref);
  return 0;
}

int cmd_simulate(const std::string& config_path,
                 const std::string& controller_path,
                 const std::string& scenario, bool all_scenarios,
                 std::int64_t seed_override, const std::string& out_dir,
                 bool plots) {
  const ProjectConfig cfg = load_project_config(config_path);
  const ControlSolution sol =
      solution_from_json(load_json_file(controller_path));
  if (static_cast<int>(sol.waveforms.size()) != cfg.motor.n_coils)
    throw SchemaError("controller waveform count does not match motor");
  fs::create_directories(out_dir);
  const std::uint64_t seed =
      seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                         : cfg.sim.seed;
  if (!all_scenarios)
    return run_one_scenario(cfg, sol, scenario, seed, out_dir, plots);
  std::vector<std::string> scenarios{"normal"};
  for (int j = 1; j <= cfg.motor.n_coils; ++j)
    scenarios.push_back("faulty:" + std::to_string(j));
  std::vector<std::future<int>> futs;
  for (const auto& s : scenarios)
    futs.push_back(std::async(std::launch::async, [&, s] {
      return run_one_scenario(cfg, sol, s, seed, out_dir, plots);
    }));
  int rc = 0;
  for (auto& f : futs) rc = std::max(rc, f.get());
  return rc;
}

int cmd_robust(const std::string& config_path,
               const std::string& controller_path, const std::string& out_path,
               int monte_carlo_runs) {
  const ProjectConfig cfg = load_project_config(config_path);
  const ControlSolution sol =
      solution_from_json(load_json_file(controller_path));
  const DisturbanceBounds bounds =
      disturbance_bound(sol, cfg.noise, cfg.f_residual_bound,
                        cfg.effective_envelope(), cfg.motor, cfg.K);
  json rep{{"eta", bounds.eta},
           {"offset_bound", bounds.offset_bound},
           {"envelope", bounds.envelope},
           {"f_residual_bound", bounds.f_residual_bound},
           {"terms",
            {{"angle_times_residual", bounds.term_angle_residual},
             {"residual_times_waveform", bounds.term_residual_waveform},
             {"angle_times_torque", bounds.term_angle_torque},
             {"speed_noise", bounds.term_speed_noise},
             {"torque_noise", bounds.term_torque_noise}}}};
  int rc = 0;
  if (monte_carlo_runs > 0) {
    FeedbackLaw law(sol, cfg.motor, cfg.omega_ref, cfg.K);
    const OffsetValidation val =
        validate_offset(cfg.motor, law, bounds, monte_carlo_runs, cfg.sim);
    rep["monte_carlo"] = {{"runs", val.n_runs},
                          {"max_steady_error", val.max_steady_error},
                          {"within_bound", val.within_bound},
                          {"min_envelope_slack", val.min_envelope_slack}};
    if (!val.within_bound || val.min_envelope_slack < 0.0) rc = kExitValidation;
  }
  save_json_file(out_path, rep);
  std::cerr << "eta = " << bounds.eta << ", offset bound = "
            << bounds.offset_bound << ", wrote " << out_path << "\n";
  return rc;
}

int cmd_pwm(const std::string& config_path, const std::string& controller_path,
            const std::string& out_path) {
  const ProjectConfig cfg = load_project_config(config_path);
  const ControlSolution sol =
      solution_from_json(load_json_file(controller_path));
  FeedbackLaw law(sol, cfg.motor, cfg.omega_ref, cfg.K);
  // Steady-state coil-1 voltage reference at the speed setpoint.
  auto u_ref = [&](double t) {
    return law.voltage_refs(cfg.omega_ref * t, cfg.omega_ref)[0];
  };
  auto i_ref = [&](double t) {
    return law.current_refs(cfg.omega_ref * t, cfg.omega_ref)[0];
  };
  const PwmWaveform wf = generate_pwm(u_ref, cfg.pwm);
  const RlTrace tr =
      filter_through_rl(wf, cfg.motor.L, cfg.motor.R, i_ref(0.0), cfg.pwm.dt);
  write_pwm_csv(out_path, tr, i_ref);
  std::cerr << "pwm: " << wf.segments.size() << " segments, RMS tracking error "
            << rms_tracking_error(tr, i_ref) << " A, wrote " << out_path
            << "\n";
  return 0;
}

int cmd_ident(const std::string& samples_path, int degree,
              const std::string& out_path) {
  std::ifstream in(samples_path);
  if (!in) throw SchemaError("cannot open " + samples_path);
  std::vector<std::pair<double, double>> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) continue;
    try {
      samples.emplace_back(std::stod(a), std::stod(b));
    } catch (const std::exception&) {
      continue;  // header or comment line
    }
  }
  const TrigPoly fit = fit_fourier(samples, degree);
  save_json_file(out_path, to_json(fit));
  std::cerr << "fitted degree-" << degree << " polynomial from "
            << samples.size() << " samples, wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedback-linearizing waveform synthesis and simulation for "
               "multi-phase permanent-magnet motors"};
  app.require_subcommand(1);

  std::string config_path, controller_path = "controller.json";
  std::string out_path, out_dir = ".", scenario = "normal", solver;
  std::int64_t seed = -1;
  bool plots = false, all_scenarios = false;
  int degree = 3, mc_runs = 0;
  std::string samples_path;

  auto* synth = app.add_subcommand("synth", "synthesize control waveforms");
  synth->add_option("--config", config_path, "project config JSON")->required();
  synth->add_option("--out", out_path, "output controller JSON");
  synth->add_option("--solver", solver, "sdp|sampled (overrides config)")
      ->check(CLI::IsMember({"sdp", "sampled"}));

  auto* sim = app.add_subcommand("simulate", "run the closed loop");
  sim->add_option("--config", config_path, "project config JSON")->required();
  sim->add_option("--controller", controller_path, "controller JSON");
  sim->add_option("--scenario", scenario, "normal|faulty:J|unbalanced|custom");
  sim->add_flag("--all-scenarios", all_scenarios, "normal plus every faulty:J");
  sim->add_option("--seed", seed, "RNG seed override");
  sim->add_option("--out-dir", out_dir, "output directory");
  sim->add_flag("--plots", plots, "write SVG plots next to the CSV");

  auto* rob = app.add_subcommand("robust", "disturbance bound report");
  rob->add_option("--config", config_path, "project config JSON")->required();
  rob->add_option("--controller", controller_path, "controller JSON");
  rob->add_option("--out", out_path, "output report JSON");
  rob->add_option("--monte-carlo", mc_runs, "validate with N noisy runs");

  auto* pwm = app.add_subcommand("pwm", "triangle-PWM realization of coil 1");
  pwm->add_option("--config", config_path, "project config JSON")->required();
  pwm->add_option("--controller", controller_path, "controller JSON");
  pwm->add_option("--out", out_path, "output CSV");

  auto* ident = app.add_subcommand("ident", "fit a torque/back-emf function");
  ident->add_option("--samples", samples_path, "CSV of theta,value")->required();
  ident->add_option("--degree", degree, "Fourier degree M")->required();
  ident->add_option("--out", out_path, "output TrigPoly JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(config_path,
                       out_path.empty() ? "controller.json" : out_path, solver);
    if (sim->parsed())
      return cmd_simulate(config_path, controller_path, scenario,
                          all_scenarios, seed, out_dir, plots);
    if (rob->parsed())
      return cmd_robust(config_path, controller_path,
                        out_path.empty() ? "robust_report.json" : out_path,
                        mc_runs);
    if (pwm->parsed())
      return cmd_pwm(config_path, controller_path,
                     out_path.empty() ? "pwm.csv" : out_path);
    if (ident->parsed())
      return cmd_ident(samples_path, degree,
                       out_path.empty() ? "fitted.json" : out_path);
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const SynthesisError& e) {
    std::cerr << "infeasible (" << e.constraint_class << "): " << e.what()
              << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}

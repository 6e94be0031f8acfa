#pragma once

// Project configuration file: one JSON document covering the motor, the
// synthesis options, the control loop, the simulation window, and the
// disturbance bounds.

#include <string>

#include "pmmctl/json_io.hpp"
#include "pmmctl/pwm.hpp"
#include "pmmctl/robust.hpp"

namespace pmmctl {

struct ProjectConfig {
  MotorParams motor;
  // synthesis
  int M_ctrl = 0;  // 0: default to max torque-function degree
  double s_max = 1.0;
  bool voltage_constraints = false;
  double V_min = 0.0;
  double V_max = 0.0;
  SolverMode solver_mode = SolverMode::Sdp;
  // control
  double omega_ref = 0.0;
  double K = 1.0;
  // sim
  SimConfig sim;
  // robust
  DisturbanceSpec noise;
  double f_residual_bound = 0.0;
  double envelope = -1.0;  // <0: derive from K, omega_ref, T_in
  // pwm
  PwmConfig pwm;

  int effective_M_ctrl() const {
    if (M_ctrl > 0) return M_ctrl;
    int m = 1;
    for (const auto& f : motor.torque_fns) m = std::max(m, f.degree());
    return m;
  }
  // Worst |K (w_ref - x2) + T_in| when starting from rest.
  double effective_envelope() const {
    return envelope >= 0.0 ? envelope : K * std::abs(omega_ref) + std::abs(motor.T_in);
  }
};

inline ProjectConfig project_from_json(const json& j) {
  check_keys(j, "config", {"motor", "synthesis", "control", "sim", "robust", "pwm"});
  require_keys(j, "config", {"motor"});
  ProjectConfig cfg;
  cfg.motor = motor_from_json(j.at("motor"));
  const auto n = static_cast<std::size_t>(cfg.motor.n_coils);

  if (j.contains("synthesis")) {
    const auto& s = j.at("synthesis");
    check_keys(s, "synthesis",
               {"M_ctrl", "s_max", "voltage_constraints", "V_min", "V_max",
                "solver"});
    cfg.M_ctrl = s.value("M_ctrl", 0);
    cfg.s_max = s.value("s_max", 1.0);
    cfg.voltage_constraints = s.value("voltage_constraints", false);
    cfg.V_min = s.value("V_min", 0.0);
    cfg.V_max = s.value("V_max", 0.0);
    const std::string mode = s.value("solver", "sdp");
    if (mode == "sdp")
      cfg.solver_mode = SolverMode::Sdp;
    else if (mode == "sampled")
      cfg.solver_mode = SolverMode::Sampled;
    else
      throw SchemaError("synthesis.solver: expected \"sdp\" or \"sampled\"");
    if (!(cfg.s_max > 0.0)) throw SchemaError("synthesis.s_max: must be > 0");
  }
  if (j.contains("control")) {
    const auto& c = j.at("control");
    check_keys(c, "control", {"omega_ref", "K"});
    cfg.omega_ref = c.value("omega_ref", 0.0);
    cfg.K = c.value("K", 1.0);
    if (!(cfg.K > 0.0)) throw SchemaError("control.K: must be > 0");
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    check_keys(s, "sim", {"dt", "t_end", "x1_0", "x2_0", "mode", "seed"});
    cfg.sim.dt = s.value("dt", 1e-4);
    cfg.sim.t_end = s.value("t_end", 20.0);
    cfg.sim.x1_0 = s.value("x1_0", 0.0);
    cfg.sim.x2_0 = s.value("x2_0", 0.0);
    const std::string mode = s.value("mode", "reduced");
    if (mode == "reduced")
      cfg.sim.mode = SimMode::Reduced;
    else if (mode == "full")
      cfg.sim.mode = SimMode::Full;
    else
      throw SchemaError("sim.mode: expected \"reduced\" or \"full\"");
    cfg.sim.seed = s.value("seed", 0ULL);
    cfg.sim.validate();
  }
  if (j.contains("robust")) {
    const auto& r = j.at("robust");
    check_keys(r, "robust",
               {"eta_theta", "eta_x2", "eta_Tin", "f_residual_bound",
                "envelope"});
    if (r.contains("eta_theta")) {
      if (r.at("eta_theta").is_number()) {
        cfg.noise.eta_theta.assign(n, r.at("eta_theta").get<double>());
      } else {
        cfg.noise.eta_theta = r.at("eta_theta").get<std::vector<double>>();
        if (cfg.noise.eta_theta.size() != n)
          throw SchemaError("robust.eta_theta: need one bound per coil");
      }
    }
    cfg.noise.eta_x2 = r.value("eta_x2", 0.0);
    cfg.noise.eta_Tin = r.value("eta_Tin", 0.0);
    cfg.f_residual_bound = r.value("f_residual_bound", 0.0);
    cfg.envelope = r.value("envelope", -1.0);
    for (double e : cfg.noise.eta_theta)
      if (e < 0.0) throw SchemaError("robust.eta_theta: bounds must be >= 0");
    if (cfg.noise.eta_x2 < 0.0 || cfg.noise.eta_Tin < 0.0 ||
        cfg.f_residual_bound < 0.0)
      throw SchemaError("robust: noise bounds must be >= 0");
  }
  cfg.noise.eta_theta.resize(n, 0.0);
  cfg.pwm.V_level = cfg.motor.V_limit;
  if (j.contains("pwm")) {
    const auto& p = j.at("pwm");
    check_keys(p, "pwm", {"V_level", "carrier_freq", "dt", "duration"});
    cfg.pwm.V_level = p.value("V_level", cfg.motor.V_limit);
    cfg.pwm.carrier_freq = p.value("carrier_freq", 1e3);
    cfg.pwm.dt = p.value("dt", 1e-6);
    cfg.pwm.duration = p.value("duration", 0.1);
    cfg.pwm.validate();
  }
  return cfg;
}

inline ProjectConfig load_project_config(const std::string& path) {
  return project_from_json(load_json_file(path));
}

}  // namespace pmmctl

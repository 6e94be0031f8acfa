#pragma once

// JSON artifact and CSV trace serialization. The TrigPoly layout
// {"degree": M, "cos": [p_0..p_M], "sin": [q_1..q_M]} is shared by every
// config and artifact file. Unknown keys are rejected so typos fail loudly.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmmctl/model.hpp"
#include "pmmctl/pwm.hpp"
#include "pmmctl/sim.hpp"
#include "pmmctl/synth.hpp"
#include "pmmctl/trigpoly.hpp"

namespace pmmctl {

using nlohmann::json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_keys(const json& j, const std::string& where,
                       const std::vector<std::string>& allowed) {
  if (!j.is_object()) throw SchemaError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || key == a;
    if (!ok) throw SchemaError(where + ": unknown key \"" + key + "\"");
  }
}

inline void require_keys(const json& j, const std::string& where,
                         const std::vector<std::string>& required) {
  for (const auto& k : required)
    if (!j.contains(k)) throw SchemaError(where + ": missing key \"" + k + "\"");
}

inline json to_json(const TrigPoly& p) {
  return json{{"degree", p.degree()},
              {"cos", p.cos_coeffs()},
              {"sin", p.sin_coeffs()}};
}

inline TrigPoly trigpoly_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"degree", "cos", "sin"});
  require_keys(j, where, {"degree", "cos", "sin"});
  const int M = j.at("degree").get<int>();
  auto cos = j.at("cos").get<std::vector<double>>();
  auto sin = j.at("sin").get<std::vector<double>>();
  if (static_cast<int>(cos.size()) != M + 1 ||
      static_cast<int>(sin.size()) != M)
    throw SchemaError(where + ": coefficient array lengths do not match degree");
  return TrigPoly(std::move(cos), std::move(sin));
}

inline json to_json(const MotorParams& mp) {
  json j{{"n_coils", mp.n_coils}, {"offsets", mp.offsets},
         {"L", mp.L},             {"R", mp.R},
         {"T_in", mp.T_in},       {"I_limit", mp.I_limit},
         {"V_limit", mp.V_limit}};
  json fs = json::array(), gs = json::array();
  for (const auto& f : mp.torque_fns) fs.push_back(to_json(f));
  for (const auto& g : mp.backemf_fns) gs.push_back(to_json(g));
  j["torque_fns"] = fs;
  j["backemf_fns"] = gs;
  std::vector<bool> faulty(mp.faulty.begin(), mp.faulty.end());
  j["faulty"] = faulty;
  return j;
}

// Accepts either a single prototype ("torque_fn"/"backemf_fn", shifted per
// coil by its offset) or explicit per-coil arrays ("torque_fns"/
// "backemf_fns") for unbalanced motors.
inline MotorParams motor_from_json(const json& j) {
  const std::string where = "motor";
  check_keys(j, where,
             {"n_coils", "offsets", "torque_fn", "torque_fns", "backemf_fn",
              "backemf_fns", "L", "R", "T_in", "I_limit", "V_limit", "faulty"});
  require_keys(j, where, {"n_coils", "L", "R", "I_limit", "V_limit"});
  MotorParams mp;
  mp.n_coils = j.at("n_coils").get<int>();
  if (mp.n_coils < 2) throw SchemaError("motor: n_coils must be >= 2");
  const auto n = static_cast<std::size_t>(mp.n_coils);
  if (j.contains("offsets")) {
    mp.offsets = j.at("offsets").get<std::vector<double>>();
  } else {
    mp.offsets.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      mp.offsets[k] = kTwoPi * static_cast<double>(k) / mp.n_coils;
  }
  auto read_fns = [&](const char* proto_key, const char* array_key) {
    std::vector<TrigPoly> out;
    if (j.contains(array_key)) {
      for (const auto& e : j.at(array_key))
        out.push_back(trigpoly_from_json(e, std::string("motor.") + array_key));
      if (out.size() != n)
        throw SchemaError(std::string("motor.") + array_key +
                          ": need one entry per coil");
    } else if (j.contains(proto_key)) {
      const TrigPoly proto =
          trigpoly_from_json(j.at(proto_key), std::string("motor.") + proto_key);
      for (std::size_t k = 0; k < n; ++k)
        out.push_back(shift(proto, mp.offsets[k]));
    } else {
      throw SchemaError(std::string("motor: need \"") + proto_key +
                        "\" or \"" + array_key + "\"");
    }
    return out;
  };
  mp.torque_fns = read_fns("torque_fn", "torque_fns");
  mp.backemf_fns = read_fns("backemf_fn", "backemf_fns");
  mp.L = j.at("L").get<double>();
  mp.R = j.at("R").get<double>();
  mp.T_in = j.value("T_in", 0.0);
  mp.I_limit = j.at("I_limit").get<double>();
  mp.V_limit = j.at("V_limit").get<double>();
  if (j.contains("faulty")) {
    const auto f = j.at("faulty").get<std::vector<bool>>();
    if (f.size() != n) throw SchemaError("motor.faulty: need one flag per coil");
    mp.faulty.assign(f.begin(), f.end());
  } else {
    mp.faulty.assign(n, false);
  }
  mp.validate();
  return mp;
}

inline json to_json(const ControlSolution& sol) {
  json ws = json::array();
  for (const auto& w : sol.waveforms) ws.push_back(to_json(w));
  return json{
      {"waveforms", ws},
      {"t_opt", sol.t_opt},
      {"s_max", sol.s_max},
      {"current_budget", sol.current_budget},
      {"residuals",
       {{"torque_constant", sol.residuals.torque_constant},
        {"max_harmonic_residual", sol.residuals.max_harmonic_residual},
        {"max_bound_violation", sol.residuals.max_bound_violation},
        {"coil_current_max", sol.residuals.coil_current_max},
        {"grid_points", sol.residuals.grid_points}}},
      {"solver",
       {{"status", sol.status},
        {"mode", sol.solver_mode},
        {"iterations", sol.lp_iterations},
        {"cut_rounds", sol.cut_rounds}}}};
}

inline ControlSolution solution_from_json(const json& j) {
  const std::string where = "controller";
  check_keys(j, where,
             {"waveforms", "t_opt", "s_max", "current_budget", "residuals",
              "solver"});
  require_keys(j, where, {"waveforms", "t_opt", "s_max"});
  ControlSolution sol;
  for (const auto& e : j.at("waveforms"))
    sol.waveforms.push_back(trigpoly_from_json(e, "controller.waveforms"));
  sol.t_opt = j.at("t_opt").get<double>();
  sol.s_max = j.at("s_max").get<double>();
  sol.current_budget = j.value("current_budget", 0.0);
  if (j.contains("residuals")) {
    const auto& r = j.at("residuals");
    sol.residuals.torque_constant = r.value("torque_constant", 0.0);
    sol.residuals.max_harmonic_residual = r.value("max_harmonic_residual", 0.0);
    sol.residuals.max_bound_violation = r.value("max_bound_violation", 0.0);
    if (r.contains("coil_current_max"))
      sol.residuals.coil_current_max =
          r.at("coil_current_max").get<std::vector<double>>();
    sol.residuals.grid_points = r.value("grid_points", 0);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    sol.status = s.value("status", "");
    sol.solver_mode = s.value("mode", "");
    sol.lp_iterations = s.value("iterations", 0);
    sol.cut_rounds = s.value("cut_rounds", 0);
  }
  return sol;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << j.dump(2) << "\n";
}

// Fixed %.12g formatting keeps reruns byte-identical.
inline std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << "t,x1,x2";
  for (int j = 1; j <= trace.n_coils; ++j) out << ",i_" << j;
  for (int j = 1; j <= trace.n_coils; ++j) out << ",u_" << j;
  for (int j = 1; j <= trace.n_coils; ++j) out << ",noise_theta_" << j;
  out << ",noise_x2,noise_Tin\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << csv_num(trace.t[k]) << ',' << csv_num(trace.x1[k]) << ','
        << csv_num(trace.x2[k]);
    for (int j = 0; j < trace.n_coils; ++j)
      out << ',' << csv_num(trace.currents[static_cast<std::size_t>(j)][k]);
    for (int j = 0; j < trace.n_coils; ++j)
      out << ',' << csv_num(trace.voltages[static_cast<std::size_t>(j)][k]);
    for (int j = 0; j < trace.n_coils; ++j)
      out << ',' << csv_num(trace.noise_theta[static_cast<std::size_t>(j)][k]);
    out << ',' << csv_num(trace.noise_x2[k]) << ','
        << csv_num(trace.noise_Tin[k]) << '\n';
  }
}

inline void write_pwm_csv(const std::string& path, const RlTrace& tr,
                          const std::function<double(double)>& i_ref) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << "t,u_switched,i_filtered,i_reference\n";
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    out << csv_num(tr.t[k]) << ',' << csv_num(tr.u[k]) << ','
        << csv_num(tr.i[k]) << ',' << csv_num(i_ref(tr.t[k])) << '\n';
}

}  // namespace pmmctl

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmmctl/config.hpp"
#include "pmmctl/json_io.hpp"
#include "test_helpers.hpp"

using namespace pmmctl;

namespace {
json sample_motor_json() {
  return json{{"n_coils", 3},
              {"torque_fn", {{"degree", 1}, {"cos", {0.0, 0.0}}, {"sin", {1.0}}}},
              {"backemf_fn", {{"degree", 0}, {"cos", {0.0}}, {"sin", json::array()}}},
              {"L", 0.001},
              {"R", 1.0},
              {"T_in", 3.0},
              {"I_limit", 10.0},
              {"V_limit", 100.0}};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("trigpoly json round trip") {
  std::mt19937_64 rng(1);
  const TrigPoly p = testing::random_poly(rng, 4);
  const TrigPoly q = trigpoly_from_json(to_json(p), "t");
  REQUIRE(q.degree() == 4);
  for (int k = 0; k <= 4; ++k) {
    REQUIRE(q.p(k) == p.p(k));
    if (k >= 1) REQUIRE(q.q(k) == p.q(k));
  }
}

TEST_CASE("trigpoly json rejects malformed input") {
  json j = to_json(TrigPoly::harmonic_sin(1));
  j["typo"] = 1;
  REQUIRE_THROWS_MATCHES(trigpoly_from_json(j, "t"), SchemaError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("typo")));
  json bad = to_json(TrigPoly::harmonic_sin(1));
  bad["cos"] = {0.0, 0.0, 0.0};  // wrong length for degree 1
  REQUIRE_THROWS_AS(trigpoly_from_json(bad, "t"), SchemaError);
  json missing = {{"degree", 1}, {"cos", {0.0, 0.0}}};
  REQUIRE_THROWS_AS(trigpoly_from_json(missing, "t"), SchemaError);
}

TEST_CASE("motor json: prototype form shifts per coil") {
  const MotorParams mp = motor_from_json(sample_motor_json());
  REQUIRE(mp.n_coils == 3);
  REQUIRE_THAT(mp.offsets[1], Catch::Matchers::WithinAbs(kTwoPi / 3.0, 1e-12));
  for (int j = 0; j < 3; ++j) {
    const double phi = kTwoPi * j / 3.0;
    REQUIRE_THAT(mp.torque_fns[static_cast<std::size_t>(j)].eval(0.4),
                 Catch::Matchers::WithinAbs(std::sin(0.4 + phi), 1e-12));
  }
  REQUIRE(mp.faulty == std::vector<bool>(3, false));
  REQUIRE(mp.T_in == 3.0);
}

TEST_CASE("motor json: explicit per-coil arrays and faulty flags") {
  json j = sample_motor_json();
  j.erase("torque_fn");
  json fns = json::array();
  for (int k = 0; k < 3; ++k) {
    TrigPoly f = shift(TrigPoly::harmonic_sin(1), kTwoPi * k / 3.0);
    f.p(0) = 0.01 * k;  // per-coil imbalance
    fns.push_back(to_json(f));
  }
  j["torque_fns"] = fns;
  j["faulty"] = {false, true, false};
  const MotorParams mp = motor_from_json(j);
  REQUIRE(mp.faulty[1]);
  REQUIRE_THAT(mp.torque_fns[2].p(0), Catch::Matchers::WithinAbs(0.02, 1e-15));
  REQUIRE(mp.active_coils() == 2);
}

TEST_CASE("motor json: schema violations") {
  json j = sample_motor_json();
  j["unknown_key"] = true;
  REQUIRE_THROWS_AS(motor_from_json(j), SchemaError);

  json j2 = sample_motor_json();
  j2.erase("L");
  REQUIRE_THROWS_AS(motor_from_json(j2), SchemaError);

  json j3 = sample_motor_json();
  j3.erase("torque_fn");
  REQUIRE_THROWS_AS(motor_from_json(j3), SchemaError);

  json j4 = sample_motor_json();
  j4["faulty"] = {true, false};  // wrong length
  REQUIRE_THROWS_AS(motor_from_json(j4), SchemaError);
}

TEST_CASE("motor json round trip through to_json") {
  json j = sample_motor_json();
  j["faulty"] = {false, false, true};
  const MotorParams a = motor_from_json(j);
  const MotorParams b = motor_from_json(to_json(a));
  REQUIRE(b.n_coils == a.n_coils);
  REQUIRE(b.faulty == a.faulty);
  for (int c = 0; c < 3; ++c)
    REQUIRE(b.torque_fns[static_cast<std::size_t>(c)].eval(1.1) ==
            a.torque_fns[static_cast<std::size_t>(c)].eval(1.1));
}

TEST_CASE("control solution round trip") {
  ControlSolution sol;
  sol.t_opt = 1.5;
  sol.s_max = 10.0;
  sol.current_budget = 1.0;
  sol.status = "optimal";
  sol.solver_mode = "sdp";
  sol.lp_iterations = 17;
  sol.cut_rounds = 2;
  sol.residuals.torque_constant = 1.5;
  sol.residuals.max_harmonic_residual = 1e-12;
  sol.residuals.coil_current_max = {10.0, 10.0, 10.0};
  for (int j = 0; j < 3; ++j)
    sol.waveforms.push_back(shift(TrigPoly::harmonic_sin(1), kTwoPi * j / 3.0));
  const ControlSolution back = solution_from_json(to_json(sol));
  REQUIRE(back.t_opt == sol.t_opt);
  REQUIRE(back.s_max == sol.s_max);
  REQUIRE(back.status == "optimal");
  REQUIRE(back.solver_mode == "sdp");
  REQUIRE(back.lp_iterations == 17);
  REQUIRE(back.waveforms.size() == 3);
  REQUIRE(back.waveforms[1].eval(0.9) == sol.waveforms[1].eval(0.9));
  REQUIRE(back.residuals.coil_current_max == sol.residuals.coil_current_max);
}

TEST_CASE("json file io and parse errors") {
  const auto path = temp_file("pmmctl_test_io.json");
  save_json_file(path.string(), json{{"a", 1}});
  REQUIRE(load_json_file(path.string()).at("a") == 1);
  std::ofstream(path) << "{not json";
  REQUIRE_THROWS_AS(load_json_file(path.string()), SchemaError);
  REQUIRE_THROWS_AS(load_json_file("/nonexistent/nope.json"), SchemaError);
  std::filesystem::remove(path);
}

TEST_CASE("csv_num formats deterministically") {
  REQUIRE(csv_num(0.0) == "0");
  REQUIRE(csv_num(1.5) == "1.5");
  REQUIRE(csv_num(1.0 / 3.0) == "0.333333333333");
  REQUIRE(csv_num(-2e-7) == "-2e-07");
}

TEST_CASE("trace csv layout") {
  SimTrace tr;
  tr.n_coils = 2;
  tr.currents.assign(2, {});
  tr.voltages.assign(2, {});
  tr.noise_theta.assign(2, {});
  for (int k = 0; k < 3; ++k) {
    tr.t.push_back(k * 0.5);
    tr.x1.push_back(k * 1.0);
    tr.x2.push_back(10.0);
    for (int j = 0; j < 2; ++j) {
      tr.currents[static_cast<std::size_t>(j)].push_back(j + 0.25);
      tr.voltages[static_cast<std::size_t>(j)].push_back(j - 0.5);
      tr.noise_theta[static_cast<std::size_t>(j)].push_back(0.0);
    }
    tr.noise_x2.push_back(0.0);
    tr.noise_Tin.push_back(0.0);
  }
  const auto path = temp_file("pmmctl_test_trace.csv");
  write_trace_csv(path.string(), tr);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  REQUIRE(header ==
          "t,x1,x2,i_1,i_2,u_1,u_2,noise_theta_1,noise_theta_2,noise_x2,noise_Tin");
  std::getline(in, row);
  REQUIRE(row == "0,0,10,0.25,1.25,-0.5,0.5,0,0,0,0");
  int rows = 1;
  while (std::getline(in, row)) ++rows;
  REQUIRE(rows == 3);
  std::filesystem::remove(path);
}

TEST_CASE("project config: full document") {
  json j = {{"motor", sample_motor_json()},
            {"synthesis", {{"M_ctrl", 1}, {"s_max", 10.0}, {"solver", "sampled"}}},
            {"control", {{"omega_ref", 10.0}, {"K", 2.0}}},
            {"sim", {{"dt", 1e-4}, {"t_end", 5.0}, {"mode", "full"}, {"seed", 9}}},
            {"robust", {{"eta_theta", 0.01}, {"eta_x2", 0.1}}},
            {"pwm", {{"carrier_freq", 2000.0}, {"dt", 1e-6}, {"duration", 0.05}}}};
  const ProjectConfig cfg = project_from_json(j);
  REQUIRE(cfg.M_ctrl == 1);
  REQUIRE(cfg.s_max == 10.0);
  REQUIRE(cfg.solver_mode == SolverMode::Sampled);
  REQUIRE(cfg.K == 2.0);
  REQUIRE(cfg.sim.mode == SimMode::Full);
  REQUIRE(cfg.sim.seed == 9);
  REQUIRE(cfg.noise.eta_theta == std::vector<double>(3, 0.01));
  REQUIRE(cfg.noise.eta_x2 == 0.1);
  REQUIRE(cfg.pwm.V_level == 100.0);  // defaults to the motor voltage limit
  REQUIRE(cfg.pwm.carrier_freq == 2000.0);
  // Derived fields.
  REQUIRE(cfg.effective_M_ctrl() == 1);
  REQUIRE_THAT(cfg.effective_envelope(),
               Catch::Matchers::WithinAbs(2.0 * 10.0 + 3.0, 1e-12));
}

TEST_CASE("project config: defaults and errors") {
  const ProjectConfig cfg = project_from_json(json{{"motor", sample_motor_json()}});
  REQUIRE(cfg.effective_M_ctrl() == 1);  // max torque degree
  REQUIRE(cfg.sim.dt == 1e-4);
  REQUIRE(cfg.noise.eta_theta == std::vector<double>(3, 0.0));

  json bad_solver = {{"motor", sample_motor_json()},
                     {"synthesis", {{"solver", "magic"}}}};
  REQUIRE_THROWS_AS(project_from_json(bad_solver), SchemaError);

  json bad_mode = {{"motor", sample_motor_json()},
                   {"sim", {{"mode", "hybrid"}}}};
  REQUIRE_THROWS_AS(project_from_json(bad_mode), SchemaError);

  json neg_noise = {{"motor", sample_motor_json()},
                    {"robust", {{"eta_x2", -0.1}}}};
  REQUIRE_THROWS_AS(project_from_json(neg_noise), SchemaError);

  json bad_dt = {{"motor", sample_motor_json()}, {"sim", {{"dt", 0.01}}}};
  REQUIRE_THROWS_AS(project_from_json(bad_dt), std::invalid_argument);
}

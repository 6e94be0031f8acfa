#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pmmctl/sim.hpp"
#include "test_helpers.hpp"

using namespace pmmctl;

namespace {
struct Loop {
  MotorParams mp;
  ControlSolution sol;
  Loop() {
    mp = MotorParams::balanced_even(3, TrigPoly::harmonic_sin(1),
                                    TrigPoly::constant(0.0));
    mp.L = 0.001;
    mp.R = 1.0;
    mp.T_in = 3.0;
    mp.I_limit = 10.0;
    sol.t_opt = 1.5;
    sol.s_max = 10.0;
    sol.current_budget = 1.0;
    for (int j = 0; j < 3; ++j)
      sol.waveforms.push_back(
          shift(TrigPoly::harmonic_sin(1), kTwoPi * j / 3.0));
  }
  FeedbackLaw law(double omega_ref = 10.0, double K = 1.0) const {
    return FeedbackLaw(sol, mp, omega_ref, K);
  }
};
}  // namespace

TEST_CASE("integrate: exponential decay to RK4 accuracy") {
  auto rhs = [](double, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-x);
  };
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  const auto out = integrate(rhs, x0, 0.01, 1.0);
  REQUIRE(out.size() == 101);
  REQUIRE_THAT(out.back()(0),
               Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-9));
}

TEST_CASE("integrate: fourth-order convergence on a harmonic oscillator") {
  auto rhs = [](double, const Eigen::VectorXd& x) {
    Eigen::VectorXd d(2);
    d << x(1), -x(0);
    return d;
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.0;
  auto err = [&](double dt) {
    const auto out = integrate(rhs, x0, dt, 2.0);
    return std::abs(out.back()(0) - std::cos(2.0));
  };
  const double e1 = err(0.01), e2 = err(0.005);
  const double ratio = e1 / e2;
  REQUIRE(ratio > 12.0);
  REQUIRE(ratio < 20.0);
}

TEST_CASE("integrate: throws on finite-time blowup") {
  auto rhs = [](double, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(x.array().square().matrix());
  };
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  REQUIRE_THROWS_WITH(integrate(rhs, x0, 0.01, 2.0),
                      Catch::Matchers::ContainsSubstring("t = "));
}

TEST_CASE("closed loop matches the designed first-order response") {
  const Loop fx;
  const double omega_ref = 10.0, K = 1.0;
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 5.0;
  cfg.x2_0 = 8.0;  // stays in the linear region
  const SimTrace tr = run_closed_loop(fx.mp, fx.law(omega_ref, K), cfg);
  for (std::size_t k = 0; k < tr.size(); k += 100) {
    const double expect =
        omega_ref + (cfg.x2_0 - omega_ref) * std::exp(-K * tr.t[k]);
    REQUIRE_THAT(tr.x2[k], Catch::Matchers::WithinAbs(expect, 1e-6));
  }
}

TEST_CASE("saturated start ramps at the torque limit") {
  const Loop fx;
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.5;
  cfg.x2_0 = 0.0;
  // omega_ref far away: s = s_max, dx2 = s_max * t_opt - T_in = 12.
  const SimTrace tr = run_closed_loop(fx.mp, fx.law(100.0, 1.0), cfg);
  const double slope = 10.0 * 1.5 - fx.mp.T_in;
  for (std::size_t k = 0; k < tr.size(); k += 50)
    REQUIRE_THAT(tr.x2[k],
                 Catch::Matchers::WithinAbs(slope * tr.t[k], 1e-8));
}

TEST_CASE("trace layout: sizes and recorded currents") {
  const Loop fx;
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  const SimTrace tr = run_closed_loop(fx.mp, fx.law(), cfg);
  REQUIRE(tr.size() == 101);
  REQUIRE(tr.n_coils == 3);
  REQUIRE(tr.currents.size() == 3);
  REQUIRE(tr.currents[0].size() == tr.size());
  REQUIRE(tr.voltages[1].size() == tr.size());
  REQUIRE(tr.t.front() == 0.0);
  REQUIRE_THAT(tr.t.back(), Catch::Matchers::WithinAbs(0.1, 1e-12));
  // Recorded currents match the law applied to the recorded state.
  const FeedbackLaw law = fx.law();
  for (std::size_t k = 0; k < tr.size(); k += 10) {
    const auto i = law.current_refs(tr.x1[k], tr.x2[k]);
    for (int j = 0; j < 3; ++j)
      REQUIRE_THAT(tr.currents[static_cast<std::size_t>(j)][k],
                   Catch::Matchers::WithinAbs(i[static_cast<std::size_t>(j)], 1e-12));
  }
}

TEST_CASE("noise: bounded, seeded, and reproducible") {
  const Loop fx;
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.2;
  DisturbanceSpec spec;
  spec.eta_theta = {0.01, 0.01, 0.01};
  spec.eta_x2 = 0.1;
  spec.eta_Tin = 0.05;
  cfg.noise = spec;
  cfg.seed = 42;
  const SimTrace a = run_closed_loop(fx.mp, fx.law(), cfg);
  const SimTrace b = run_closed_loop(fx.mp, fx.law(), cfg);
  cfg.seed = 43;
  const SimTrace c = run_closed_loop(fx.mp, fx.law(), cfg);
  bool identical = true, differs = false;
  double max_th = 0.0, max_x2 = 0.0, max_T = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    identical = identical && a.x2[k] == b.x2[k] &&
                a.noise_x2[k] == b.noise_x2[k];
    differs = differs || a.noise_x2[k] != c.noise_x2[k];
    max_th = std::max(max_th, std::abs(a.noise_theta[0][k]));
    max_x2 = std::max(max_x2, std::abs(a.noise_x2[k]));
    max_T = std::max(max_T, std::abs(a.noise_Tin[k]));
  }
  REQUIRE(identical);
  REQUIRE(differs);
  REQUIRE(max_th <= 0.01);
  REQUIRE(max_x2 <= 0.1);
  REQUIRE(max_T <= 0.05);
  REQUIRE(max_x2 > 0.0);
}

TEST_CASE("full electrical model tracks the reduced model for small L") {
  const Loop fx;
  SimConfig red;
  red.dt = 1e-4;
  red.t_end = 3.0;
  red.x2_0 = 8.0;
  SimConfig full = red;
  full.mode = SimMode::Full;
  const SimTrace tr_r = run_closed_loop(fx.mp, fx.law(), red);
  const SimTrace tr_f = run_closed_loop(fx.mp, fx.law(), full);
  REQUIRE(tr_r.size() == tr_f.size());
  double max_dev = 0.0;
  for (std::size_t k = 0; k < tr_r.size(); ++k)
    max_dev = std::max(max_dev, std::abs(tr_r.x2[k] - tr_f.x2[k]));
  REQUIRE(max_dev < 0.05);  // tau = R/L = 1000 >> loop bandwidth
}

TEST_CASE("full model holds faulty coils at zero current") {
  Loop fx;
  fx.mp.faulty[2] = true;
  fx.sol.waveforms[2] = TrigPoly(1);
  SimConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = 0.2;
  cfg.mode = SimMode::Full;
  const SimTrace tr = run_closed_loop(fx.mp, fx.law(), cfg);
  for (double i : tr.currents[2]) REQUIRE(i == 0.0);
}

TEST_CASE("response_time: analytic first-order settle") {
  SimTrace tr;
  const double K = 1.0, omega_ref = 10.0, x20 = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    const double t = k * 1e-3;
    tr.t.push_back(t);
    tr.x1.push_back(0.0);
    tr.x2.push_back(omega_ref + (x20 - omega_ref) * std::exp(-K * t));
  }
  // |x2 - ref| = 10 e^{-t} <= 0.02*10  at t = ln(50).
  const double rt = response_time(tr, omega_ref);
  REQUIRE_THAT(rt, Catch::Matchers::WithinAbs(std::log(50.0), 2e-3));
}

TEST_CASE("response_time edge cases") {
  SimTrace inside;
  for (int k = 0; k <= 10; ++k) {
    inside.t.push_back(k * 0.1);
    inside.x1.push_back(0.0);
    inside.x2.push_back(10.0);
  }
  REQUIRE(response_time(inside, 10.0) == 0.0);

  SimTrace never;
  for (int k = 0; k <= 10; ++k) {
    never.t.push_back(k * 0.1);
    never.x1.push_back(0.0);
    never.x2.push_back(k % 2 ? 0.0 : 20.0);
  }
  REQUIRE(std::isinf(response_time(never, 10.0)));

  SimTrace empty;
  REQUIRE_THROWS_AS(response_time(empty, 10.0), std::invalid_argument);
}

TEST_CASE("sim config validation") {
  SimConfig cfg;
  cfg.dt = 2e-3;  // above the cap
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.dt = 1e-4;
  cfg.t_end = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

#pragma once

// Fixed-step RK4 integration of the closed loop, noise injection, and
// response metrics.
//
// Noise is sampled once per step (uniform within the declared bounds) and
// held constant across the RK4 stages, so the noise-free loop keeps the
// integrator's full order.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmmctl/controller.hpp"
#include "pmmctl/model.hpp"

namespace pmmctl {

struct DisturbanceSpec {
  std::vector<double> eta_theta;  // per-coil angle noise bound, rad
  double eta_x2 = 0.0;            // speed noise bound, rad/s
  double eta_Tin = 0.0;           // load-torque feedback noise bound

  bool any() const {
    if (eta_x2 > 0.0 || eta_Tin > 0.0) return true;
    for (double e : eta_theta)
      if (e > 0.0) return true;
    return false;
  }
};

enum class SimMode { Reduced, Full };

struct SimConfig {
  double dt = 1e-4;
  double t_end = 20.0;
  double x1_0 = 0.0;
  double x2_0 = 0.0;
  SimMode mode = SimMode::Reduced;
  std::optional<DisturbanceSpec> noise;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(dt > 0.0) || dt > 1e-3)
      throw std::invalid_argument("SimConfig: need 0 < dt <= 1e-3");
    if (!(t_end > 0.0)) throw std::invalid_argument("SimConfig: t_end <= 0");
  }
};

struct SimTrace {
  std::vector<double> t;
  std::vector<double> x1;
  std::vector<double> x2;
  std::vector<std::vector<double>> currents;  // [coil][step]
  std::vector<std::vector<double>> voltages;  // [coil][step]
  std::vector<std::vector<double>> noise_theta;
  std::vector<double> noise_x2;
  std::vector<double> noise_Tin;
  int n_coils = 0;

  std::size_t size() const { return t.size(); }
};

// Classical RK4 with a fixed step; records every step including t = 0.
inline std::vector<Eigen::VectorXd> integrate(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& rhs,
    const Eigen::VectorXd& x0, double dt, double t_end,
    std::vector<double>* times = nullptr) {
  const int n_steps = static_cast<int>(std::llround(t_end / dt));
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n_steps) + 1);
  Eigen::VectorXd x = x0;
  out.push_back(x);
  if (times) times->push_back(0.0);
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    const Eigen::VectorXd k1 = rhs(t, x);
    const Eigen::VectorXd k2 = rhs(t + dt / 2, x + (dt / 2) * k1);
    const Eigen::VectorXd k3 = rhs(t + dt / 2, x + (dt / 2) * k2);
    const Eigen::VectorXd k4 = rhs(t + dt, x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw std::runtime_error("integrate: non-finite state at t = " +
                               std::to_string(t + dt));
    out.push_back(x);
    if (times) times->push_back((k + 1) * dt);
  }
  return out;
}

inline SimTrace run_closed_loop(const MotorParams& mp, const FeedbackLaw& law,
                                const SimConfig& cfg) {
  cfg.validate();
  const int n = mp.n_coils;
  const int n_steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));

  SimTrace trace;
  trace.n_coils = n;
  trace.currents.assign(static_cast<std::size_t>(n), {});
  trace.voltages.assign(static_cast<std::size_t>(n), {});
  trace.noise_theta.assign(static_cast<std::size_t>(n), {});

  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&rng](double bound) {
    if (bound <= 0.0) return 0.0;
    std::uniform_real_distribution<double> d(-bound, bound);
    return d(rng);
  };
  DisturbanceSpec spec;
  if (cfg.noise) spec = *cfg.noise;
  spec.eta_theta.resize(static_cast<std::size_t>(n), 0.0);

  // Per-step noise draws, constant within a step.
  std::vector<double> eth(static_cast<std::size_t>(n), 0.0);
  double ex2 = 0.0, eT = 0.0;
  auto draw_noise = [&]() {
    for (int j = 0; j < n; ++j)
      eth[static_cast<std::size_t>(j)] = uniform(spec.eta_theta[static_cast<std::size_t>(j)]);
    ex2 = uniform(spec.eta_x2);
    eT = uniform(spec.eta_Tin);
  };

  auto noisy_currents = [&](double x1, double x2) {
    const double s = law.scale(x2 + ex2, mp.T_in + eT);
    std::vector<double> i(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      i[static_cast<std::size_t>(j)] =
          law.coil_current(j, s, x1 + eth[static_cast<std::size_t>(j)]);
    return i;
  };

  auto record = [&](double t, double x1, double x2,
                    const std::vector<double>& i,
                    const std::vector<double>& u) {
    trace.t.push_back(t);
    trace.x1.push_back(x1);
    trace.x2.push_back(x2);
    for (int j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      trace.currents[ju].push_back(i[ju]);
      trace.voltages[ju].push_back(u[ju]);
      trace.noise_theta[ju].push_back(eth[ju]);
    }
    trace.noise_x2.push_back(ex2);
    trace.noise_Tin.push_back(eT);
  };

  if (cfg.mode == SimMode::Reduced) {
    Eigen::VectorXd x(2);
    x << cfg.x1_0, cfg.x2_0;
    auto rhs = [&](double, const Eigen::VectorXd& s) {
      const auto i = noisy_currents(s(0), s(1));
      const auto d = reduced_rhs({s(0), s(1)}, i, mp);
      Eigen::VectorXd out(2);
      out << d.dx1, d.dx2;
      return out;
    };
    for (int k = 0; k <= n_steps; ++k) {
      const double t = k * cfg.dt;
      draw_noise();
      record(t, x(0), x(1), noisy_currents(x(0), x(1)),
             law.voltage_refs(x(0) , x(1)));
      if (k == n_steps) break;
      const Eigen::VectorXd k1 = rhs(t, x);
      const Eigen::VectorXd k2 = rhs(t, x + (cfg.dt / 2) * k1);
      const Eigen::VectorXd k3 = rhs(t, x + (cfg.dt / 2) * k2);
      const Eigen::VectorXd k4 = rhs(t, x + cfg.dt * k3);
      x += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite())
        throw std::runtime_error("run_closed_loop: non-finite state at t = " +
                                 std::to_string(t));
    }
  } else {
    Eigen::VectorXd x(2 + n);
    x.setZero();
    x(0) = cfg.x1_0;
    x(1) = cfg.x2_0;
    auto to_full = [&](const Eigen::VectorXd& s) {
      FullState fs;
      fs.x1 = s(0);
      fs.x2 = s(1);
      fs.i.resize(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        fs.i[static_cast<std::size_t>(j)] =
            mp.faulty[static_cast<std::size_t>(j)] ? 0.0 : s(2 + j);
      }
      return fs;
    };
    auto rhs = [&](double, const Eigen::VectorXd& s) {
      const FullState fs = to_full(s);
      const auto u = law.voltage_refs(fs.x1 + eth[0], fs.x2 + ex2,
                                      mp.T_in + eT);
      const FullDerivative d = full_rhs(fs, u, mp);
      Eigen::VectorXd out(2 + n);
      out(0) = d.dx1;
      out(1) = d.dx2;
      for (int j = 0; j < n; ++j) out(2 + j) = d.di[static_cast<std::size_t>(j)];
      return out;
    };
    for (int k = 0; k <= n_steps; ++k) {
      const double t = k * cfg.dt;
      draw_noise();
      const FullState fs = to_full(x);
      record(t, fs.x1, fs.x2, fs.i,
             law.voltage_refs(fs.x1 + eth[0], fs.x2 + ex2, mp.T_in + eT));
      if (k == n_steps) break;
      const Eigen::VectorXd k1 = rhs(t, x);
      const Eigen::VectorXd k2 = rhs(t, x + (cfg.dt / 2) * k1);
      const Eigen::VectorXd k3 = rhs(t, x + (cfg.dt / 2) * k2);
      const Eigen::VectorXd k4 = rhs(t, x + cfg.dt * k3);
      x += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      for (int j = 0; j < n; ++j)
        if (mp.faulty[static_cast<std::size_t>(j)]) x(2 + j) = 0.0;
      if (!x.allFinite())
        throw std::runtime_error("run_closed_loop: non-finite state at t = " +
                                 std::to_string(t));
    }
  }
  return trace;
}

// First time after which |x2 - w_ref| stays within
// band_fraction * |w_ref - x2(0)|. Returns +inf if it never settles.
inline double response_time(const SimTrace& trace, double omega_ref,
                            double band_fraction = 0.02) {
  if (trace.t.empty())
    throw std::invalid_argument("response_time: empty trace");
  const double band = band_fraction * std::abs(omega_ref - trace.x2.front());
  std::ptrdiff_t last_outside = -1;
  for (std::size_t k = 0; k < trace.size(); ++k)
    if (std::abs(trace.x2[k] - omega_ref) > band)
      last_outside = static_cast<std::ptrdiff_t>(k);
  if (last_outside < 0) return 0.0;
  if (last_outside + 1 >= static_cast<std::ptrdiff_t>(trace.size()))
    return std::numeric_limits<double>::infinity();
  return trace.t[static_cast<std::size_t>(last_outside + 1)];
}

}  // namespace pmmctl

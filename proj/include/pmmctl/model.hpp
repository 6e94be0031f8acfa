#pragma once

// Motor description and the right-hand sides of the full (2 + n_coils
// states) and reduced (2 states) dynamical systems.
//
// Torque functions are inertia-normalized: f already carries the 1/J
// factor, so angular acceleration is sum_j i_j f_j(x1) - T_in directly.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmmctl/trigpoly.hpp"

namespace pmmctl {

struct MotorParams {
  int n_coils = 3;
  std::vector<double> offsets;       // phi_1..phi_n, phi_1 = 0 by convention
  std::vector<TrigPoly> torque_fns;  // f_j, inertia-normalized (resolved per coil)
  std::vector<TrigPoly> backemf_fns; // g_j (resolved per coil)
  double L = 1.0;                    // henry
  double R = 1.0;                    // ohm
  double T_in = 0.0;                 // load torque, inertia-normalized
  double I_limit = 10.0;             // amperes
  double V_limit = 100.0;            // volts
  std::vector<bool> faulty;          // true = non-conducting

  // Balanced motor: coil j's torque/back-emf are the prototype shifted by
  // offset j.
  static MotorParams balanced(int n, const std::vector<double>& offsets,
                              const TrigPoly& f, const TrigPoly& g) {
    MotorParams p;
    p.n_coils = n;
    p.offsets = offsets;
    for (int j = 0; j < n; ++j) {
      p.torque_fns.push_back(shift(f, offsets[static_cast<std::size_t>(j)]));
      p.backemf_fns.push_back(shift(g, offsets[static_cast<std::size_t>(j)]));
    }
    p.faulty.assign(static_cast<std::size_t>(n), false);
    return p;
  }

  // Evenly spaced n-phase layout, offsets k*2pi/n.
  static MotorParams balanced_even(int n, const TrigPoly& f, const TrigPoly& g) {
    std::vector<double> off(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) off[static_cast<std::size_t>(j)] = kTwoPi * j / n;
    return balanced(n, off, f, g);
  }

  int active_coils() const {
    int a = 0;
    for (bool b : faulty) a += b ? 0 : 1;
    return a;
  }

  void validate() const {
    if (n_coils < 2) throw std::invalid_argument("MotorParams: n_coils < 2");
    if (!(L > 0.0) || !(R > 0.0))
      throw std::invalid_argument("MotorParams: L and R must be positive");
    if (!(I_limit > 0.0) || !(V_limit > 0.0))
      throw std::invalid_argument("MotorParams: limits must be positive");
    const auto n = static_cast<std::size_t>(n_coils);
    if (offsets.size() != n || torque_fns.size() != n ||
        backemf_fns.size() != n || faulty.size() != n)
      throw std::invalid_argument("MotorParams: per-coil array length mismatch");
    for (std::size_t j = 0; j < n; ++j) {
      if (offsets[j] < 0.0 || offsets[j] >= kTwoPi ||
          (j > 0 && offsets[j] <= offsets[j - 1]))
        throw std::invalid_argument(
            "MotorParams: offsets must be strictly increasing in [0, 2pi)");
    }
    if (active_coils() == 0)
      throw std::invalid_argument("MotorParams: all coils faulty");
  }

  double tau() const { return R / L; }
};

struct ReducedState {
  double x1 = 0.0;  // rotor angle, rad
  double x2 = 0.0;  // angular speed, rad/s
};

struct FullState {
  double x1 = 0.0;
  double x2 = 0.0;
  std::vector<double> i;  // coil currents, A
};

struct ReducedDerivative {
  double dx1;
  double dx2;
};

inline ReducedDerivative reduced_rhs(const ReducedState& s,
                                     const std::vector<double>& currents,
                                     const MotorParams& mp) {
  if (static_cast<int>(currents.size()) != mp.n_coils)
    throw std::invalid_argument("reduced_rhs: currents length mismatch");
  double torque = -mp.T_in;
  for (int j = 0; j < mp.n_coils; ++j) {
    if (mp.faulty[static_cast<std::size_t>(j)]) continue;
    torque += currents[static_cast<std::size_t>(j)] *
              mp.torque_fns[static_cast<std::size_t>(j)].eval(s.x1);
  }
  return {s.x2, torque};
}

struct FullDerivative {
  double dx1;
  double dx2;
  std::vector<double> di;
};

inline FullDerivative full_rhs(const FullState& s,
                               const std::vector<double>& voltages,
                               const MotorParams& mp) {
  if (static_cast<int>(voltages.size()) != mp.n_coils ||
      static_cast<int>(s.i.size()) != mp.n_coils)
    throw std::invalid_argument("full_rhs: voltages/currents length mismatch");
  FullDerivative d;
  d.di.assign(static_cast<std::size_t>(mp.n_coils), 0.0);
  double torque = -mp.T_in;
  for (int j = 0; j < mp.n_coils; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (mp.faulty[ju]) continue;  // current held at 0
    torque += s.i[ju] * mp.torque_fns[ju].eval(s.x1);
    d.di[ju] = (voltages[ju] - mp.R * s.i[ju] -
                s.x2 * mp.backemf_fns[ju].eval(s.x1)) /
               mp.L;
  }
  d.dx1 = s.x2;
  d.dx2 = torque;
  return d;
}

// u~_j = u_j + x2 * g_j(x1): folds the back-emf into the control signal.
inline std::vector<double> subsume_backemf(const std::vector<double>& u,
                                           double x1, double x2,
                                           const MotorParams& mp) {
  std::vector<double> out(u);
  for (int j = 0; j < mp.n_coils; ++j)
    out[static_cast<std::size_t>(j)] +=
        x2 * mp.backemf_fns[static_cast<std::size_t>(j)].eval(x1);
  return out;
}

inline std::vector<double> revert_backemf(const std::vector<double>& u,
                                          double x1, double x2,
                                          const MotorParams& mp) {
  std::vector<double> out(u);
  for (int j = 0; j < mp.n_coils; ++j)
    out[static_cast<std::size_t>(j)] -=
        x2 * mp.backemf_fns[static_cast<std::size_t>(j)].eval(x1);
  return out;
}

}  // namespace pmmctl

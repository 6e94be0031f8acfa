#pragma once

// Runtime feedback laws built from a ControlSolution: scaled current
// references from (angle, speed) and analytically reconstructed coil
// voltages.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmmctl/model.hpp"
#include "pmmctl/synth.hpp"
#include "pmmctl/trigpoly.hpp"

namespace pmmctl {

class FeedbackLaw {
 public:
  FeedbackLaw(ControlSolution sol, MotorParams params, double omega_ref,
              double gain_K)
      : sol_(std::move(sol)), params_(std::move(params)),
        omega_ref_(omega_ref), K_(gain_K) {
    if (!(K_ > 0.0)) throw std::invalid_argument("FeedbackLaw: K must be > 0");
    if (!(sol_.s_max > 0.0) || !(sol_.t_opt > 0.0))
      throw std::invalid_argument("FeedbackLaw: need s_max > 0 and t_opt > 0");
    for (const auto& w : sol_.waveforms) dwaveforms_.push_back(derivative(w));
  }

  double omega_ref() const { return omega_ref_; }
  double gain() const { return K_; }
  const ControlSolution& solution() const { return sol_; }
  const MotorParams& params() const { return params_; }

  // Scale factor s = clamp((K (w_ref - x2) + T_in)/t_opt, +-s_max).
  // T_in may be overridden (noisy load-torque feedback).
  double scale(double x2, double T_in_meas) const {
    const double raw = (K_ * (omega_ref_ - x2) + T_in_meas) / sol_.t_opt;
    return std::clamp(raw, -sol_.s_max, sol_.s_max);
  }
  double scale(double x2) const { return scale(x2, params_.T_in); }

  bool saturated(double x2, double T_in_meas) const {
    const double raw = (K_ * (omega_ref_ - x2) + T_in_meas) / sol_.t_opt;
    return std::abs(raw) >= sol_.s_max;
  }

  // Current of one coil for a given scale and (possibly per-coil noisy)
  // angle measurement.
  double coil_current(int j, double s, double theta_meas) const {
    if (params_.faulty[static_cast<std::size_t>(j)]) return 0.0;
    return s * sol_.waveforms[static_cast<std::size_t>(j)].eval(theta_meas);
  }

  std::vector<double> current_refs(double x1, double x2) const {
    const double s = scale(x2);
    std::vector<double> i(static_cast<std::size_t>(params_.n_coils));
    for (int j = 0; j < params_.n_coils; ++j)
      i[static_cast<std::size_t>(j)] = coil_current(j, s, x1);
    return i;
  }

  // u_j = L di_j/dt + R i_j + x2 g_j(x1) with the chain-rule expansion
  // di_j/dt = ds/dt ghat_j + s ghat_j' x2 and the linearized
  // dx2 = K (w_ref - x2); ds/dt = 0 while saturated.
  std::vector<double> voltage_refs(double x1, double x2) const {
    return voltage_refs(x1, x2, params_.T_in);
  }
  std::vector<double> voltage_refs(double x1, double x2,
                                   double T_in_meas) const {
    const double s = scale(x2, T_in_meas);
    const double ds =
        saturated(x2, T_in_meas) ? 0.0 : -K_ * K_ * (omega_ref_ - x2) / sol_.t_opt;
    std::vector<double> u(static_cast<std::size_t>(params_.n_coils), 0.0);
    for (int j = 0; j < params_.n_coils; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (params_.faulty[ju]) continue;
      const double g = sol_.waveforms[ju].eval(x1);
      const double dg = dwaveforms_[ju].eval(x1);
      const double didt = ds * g + s * dg * x2;
      u[ju] = params_.L * didt + params_.R * s * g +
              x2 * params_.backemf_fns[ju].eval(x1);
    }
    return u;
  }

 private:
  ControlSolution sol_;
  MotorParams params_;
  double omega_ref_;
  double K_;
  std::vector<TrigPoly> dwaveforms_;
};

}  // namespace pmmctl

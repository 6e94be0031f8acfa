#pragma once

// Two-level triangle-carrier PWM and the exact RL response to the switched
// waveform.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace pmmctl {

struct PwmConfig {
  double V_level = 1.0;       // volts
  double carrier_freq = 1e3;  // Hz
  double dt = 1e-6;           // output sample step, << carrier period
  double duration = 0.1;      // seconds

  void validate() const {
    if (!(V_level > 0.0)) throw std::invalid_argument("PwmConfig: V_level <= 0");
    if (!(carrier_freq > 0.0) || !(dt > 0.0) || !(duration > 0.0))
      throw std::invalid_argument("PwmConfig: nonpositive timing field");
    if (carrier_freq * dt > 0.02)
      throw std::invalid_argument("PwmConfig: need carrier_freq * dt <= 0.02");
  }
};

// Symmetric triangle in [-1, 1], phase 0 at t = 0: starts at -1, peaks at
// half the period.
inline double triangle_carrier(double t, double freq) {
  const double x = t * freq - std::floor(t * freq);
  return x <= 0.5 ? -1.0 + 4.0 * x : 3.0 - 4.0 * x;
}

// One constant-level segment [t, t_next) of the switched output.
struct PwmSegment {
  double t;
  double level;  // +V or -V
};

struct PwmWaveform {
  std::vector<PwmSegment> segments;  // ordered, last one ends at duration
  double duration = 0.0;
  double V_level = 0.0;

  double level_at(double t) const {
    // Segments are dense; binary search.
    std::size_t lo = 0, hi = segments.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (segments[mid].t <= t)
        lo = mid;
      else
        hi = mid;
    }
    return segments[lo].level;
  }
};

// Comparator output: +V when the normalized reference is >= the carrier.
// Switching instants are refined by linear interpolation inside each dt
// sample, so segment boundaries track the true crossings closely.
inline PwmWaveform generate_pwm(const std::function<double(double)>& reference,
                                const PwmConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(std::llround(cfg.duration / cfg.dt));
  PwmWaveform out;
  out.duration = cfg.duration;
  out.V_level = cfg.V_level;
  auto margin = [&](double t) {
    const double r = reference(t);
    if (std::abs(r) > cfg.V_level * (1.0 + 1e-12))
      throw std::runtime_error(
          "generate_pwm: reference exceeds V_level at t = " + std::to_string(t));
    return r / cfg.V_level - triangle_carrier(t, cfg.carrier_freq);
  };
  double m_prev = margin(0.0);
  out.segments.push_back({0.0, m_prev >= 0.0 ? cfg.V_level : -cfg.V_level});
  for (int k = 1; k <= n; ++k) {
    const double t = k * cfg.dt;
    const double m = margin(t);
    if ((m >= 0.0) != (m_prev >= 0.0)) {
      const double frac = m_prev / (m_prev - m);
      const double tc = (k - 1 + frac) * cfg.dt;
      out.segments.push_back({tc, m >= 0.0 ? cfg.V_level : -cfg.V_level});
    }
    m_prev = m;
  }
  return out;
}

struct RlTrace {
  std::vector<double> t;
  std::vector<double> u;  // switched voltage
  std::vector<double> i;  // filtered current
};

// Exact piecewise-exponential solution of L di/dt + R i = u(t) for a
// two-level u; sampled on a dt grid, with switching instants handled in
// closed form inside each sample.
inline RlTrace filter_through_rl(const PwmWaveform& wf, double L, double R,
                                 double i0, double dt) {
  if (!(L > 0.0) || !(R > 0.0))
    throw std::invalid_argument("filter_through_rl: need L, R > 0");
  RlTrace tr;
  const int n = static_cast<int>(std::llround(wf.duration / dt));
  double i = i0;
  double t = 0.0;
  std::size_t seg = 0;
  auto advance = [&](double t_to) {
    // Step through any segment boundaries inside (t, t_to].
    while (seg + 1 < wf.segments.size() && wf.segments[seg + 1].t <= t_to) {
      const double tb = wf.segments[seg + 1].t;
      const double e = std::exp(-R * (tb - t) / L);
      i = i * e + (wf.segments[seg].level / R) * (1.0 - e);
      t = tb;
      ++seg;
    }
    const double e = std::exp(-R * (t_to - t) / L);
    i = i * e + (wf.segments[seg].level / R) * (1.0 - e);
    t = t_to;
  };
  tr.t.push_back(0.0);
  tr.u.push_back(wf.segments.front().level);
  tr.i.push_back(i);
  for (int k = 1; k <= n; ++k) {
    advance(k * dt);
    tr.t.push_back(t);
    tr.u.push_back(wf.segments[seg].level);
    tr.i.push_back(i);
  }
  return tr;
}

// RMS difference between the filtered current and a reference current
// evaluated on the trace grid.
inline double rms_tracking_error(const RlTrace& tr,
                                 const std::function<double(double)>& i_ref) {
  double acc = 0.0;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    const double e = tr.i[k] - i_ref(tr.t[k]);
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(tr.t.size()));
}

}  // namespace pmmctl

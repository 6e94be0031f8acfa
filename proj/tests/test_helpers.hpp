#pragma once

// Shared generators and independent oracles for the test suites. The
// oracles deliberately use naive direct summation so they share no code
// path with the library implementations they check.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "pmmctl/trigpoly.hpp"

namespace pmmctl::testing {

inline TrigPoly random_poly(std::mt19937_64& rng, int degree,
                            double amplitude = 1.0) {
  std::uniform_real_distribution<double> d(-amplitude, amplitude);
  TrigPoly p(degree);
  p.p(0) = d(rng);
  for (int k = 1; k <= degree; ++k) {
    p.p(k) = d(rng);
    p.q(k) = d(rng);
  }
  return p;
}

// Naive term-by-term series evaluation (independent of TrigPoly::eval's
// recurrence).
inline double naive_eval(const TrigPoly& p, double theta) {
  double acc = p.p(0);
  for (int k = 1; k <= p.degree(); ++k)
    acc += p.p(k) * std::cos(k * theta) + p.q(k) * std::sin(k * theta);
  return acc;
}

inline double grid_oracle_max_abs(const TrigPoly& p, int n) {
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    m = std::max(m, std::abs(naive_eval(p, kTwoPi * i / n)));
  return m;
}

inline double grid_oracle_min(const TrigPoly& p, int n) {
  double m = naive_eval(p, 0.0);
  for (int i = 1; i < n; ++i)
    m = std::min(m, naive_eval(p, kTwoPi * i / n));
  return m;
}

}  // namespace pmmctl::testing

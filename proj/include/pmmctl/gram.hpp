#pragma once

// Global nonnegativity of trigonometric polynomials.
//
// A trig polynomial r is nonnegative on the circle exactly when it admits a
// PSD Gram matrix G with sum_{a-b=k} G_ab = r_k (complex coefficients).
// Feasibility is decided through the exact global minimum (critical points
// from a companion-matrix eigenproblem), and the certificate itself is built
// by spectral factorization r = |h|^2, which yields the rank-one Gram matrix
// G = h h^H.

#include <algorithm>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "pmmctl/trigpoly.hpp"

namespace pmmctl {

// Roots of a complex polynomial c_0 + c_1 z + ... + c_n z^n via the
// companion matrix. Near-zero leading coefficients are dropped.
inline std::vector<std::complex<double>> polynomial_roots(
    std::vector<std::complex<double>> c) {
  double scale = 0.0;
  for (const auto& v : c) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return {};
  while (c.size() > 1 && std::abs(c.back()) < 1e-13 * scale) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  std::vector<std::complex<double>> roots(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return roots;
}

// Exact global extrema of p on the circle: critical angles are the on-circle
// roots of z^M P'(z) where P is the two-sided coefficient polynomial of p'.
struct TrigExtrema {
  double min_value;
  double min_theta;
  double max_value;
  double max_theta;
};

inline TrigExtrema trig_extrema(const TrigPoly& p) {
  TrigExtrema ex{p.eval(0.0), 0.0, p.eval(0.0), 0.0};
  const TrigPoly dp = derivative(p).trimmed(0.0);
  const int m = dp.degree();
  std::vector<double> candidates{0.0};
  if (m >= 1) {
    const auto r = dp.complex_coeffs();
    // q(z) = z^m * dp(z) as a one-sided polynomial of degree 2m.
    std::vector<std::complex<double>> q(static_cast<std::size_t>(2 * m) + 1);
    for (int k = -m; k <= m; ++k)
      q[static_cast<std::size_t>(k + m)] =
          k >= 0 ? r[static_cast<std::size_t>(k)]
                 : std::conj(r[static_cast<std::size_t>(-k)]);
    for (const auto& z : polynomial_roots(q)) {
      if (std::abs(std::abs(z) - 1.0) < 1e-6) candidates.push_back(std::arg(z));
    }
  }
  for (double th : candidates) {
    const double v = p.eval(th);
    if (v < ex.min_value) ex = {v, th, ex.max_value, ex.max_theta};
    if (v > ex.max_value) {
      ex.max_value = v;
      ex.max_theta = th;
    }
  }
  return ex;
}

inline double trig_min(const TrigPoly& p) { return trig_extrema(p).min_value; }
inline double trig_max(const TrigPoly& p) { return trig_extrema(p).max_value; }

struct GramCertificate {
  bool feasible = false;
  // Hermitian PSD, size deg+1; present only when feasible.
  Eigen::MatrixXcd G;
  // Max |coefficient mismatch| between the Gram reconstruction and the
  // certified polynomial.
  double reconstruction_error = 0.0;
  // Exact global minimum of the certified polynomial.
  double min_value = 0.0;
};

// Spectral factor h of a strictly positive p (Fejer-Riesz): the degree-M
// one-sided polynomial built from the roots of z^M P(z) inside (or on) the
// unit circle, scaled so the autocorrelation constant term matches p_0.
inline std::optional<Eigen::VectorXcd> spectral_factor(const TrigPoly& p) {
  const TrigPoly pt = p.trimmed(0.0);
  const int m = pt.degree();
  if (m == 0) {
    if (pt.p(0) < 0.0) return std::nullopt;
    Eigen::VectorXcd h(1);
    h(0) = std::sqrt(pt.p(0));
    return h;
  }
  const auto r = pt.complex_coeffs();
  std::vector<std::complex<double>> q(static_cast<std::size_t>(2 * m) + 1);
  for (int k = -m; k <= m; ++k)
    q[static_cast<std::size_t>(k + m)] =
        k >= 0 ? r[static_cast<std::size_t>(k)]
               : std::conj(r[static_cast<std::size_t>(-k)]);
  auto roots = polynomial_roots(q);
  if (static_cast<int>(roots.size()) != 2 * m) return std::nullopt;
  // Roots pair as (z, 1/conj(z)); keep the m of smallest modulus.
  std::sort(roots.begin(), roots.end(),
            [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });
  Eigen::VectorXcd h = Eigen::VectorXcd::Zero(m + 1);
  h(0) = 1.0;
  for (int i = 0; i < m; ++i) {
    for (int k = i + 1; k >= 1; --k)
      h(k) = h(k - 1) - roots[static_cast<std::size_t>(i)] * h(k);
    h(0) = -roots[static_cast<std::size_t>(i)] * h(0);
  }
  const double c0 = h.squaredNorm();
  if (c0 <= 0.0) return std::nullopt;
  const double lambda = pt.p(0) / c0;
  if (lambda < 0.0) return std::nullopt;
  return h * std::sqrt(lambda);
}

// PSD Gram certificate of p >= 0 on the circle (or infeasibility).
inline GramCertificate gram_certificate(const TrigPoly& p, double tol = 1e-7) {
  GramCertificate cert;
  cert.min_value = trig_min(p);
  const double scale = std::max(1.0, sup_bound(p));
  if (cert.min_value < -tol * scale) return cert;  // infeasible
  // Lift zero-touching polynomials slightly so the factorization is clean;
  // the reconstruction check absorbs the lift into the reported error.
  TrigPoly lifted = p;
  const double lift = std::max(0.0, -cert.min_value) + 1e-12 * scale;
  lifted.p(0) += lift;
  const auto h = spectral_factor(lifted);
  if (!h) return cert;
  cert.G = (*h) * h->adjoint();
  // Reconstruct complex coefficients from the Gram anti-diagonals.
  const auto r = p.complex_coeffs();
  const int m = static_cast<int>(h->size()) - 1;
  double err = 0.0;
  for (int k = 0; k <= std::max(m, p.degree()); ++k) {
    std::complex<double> g = 0.0;
    for (int a = k; a <= m; ++a) g += cert.G(a, a - k);
    const std::complex<double> want =
        k <= p.degree() ? r[static_cast<std::size_t>(k)] : 0.0;
    err = std::max(err, std::abs(g - want));
  }
  cert.reconstruction_error = err;
  cert.feasible = err <= std::max(tol, 1e-6) * scale + lift;
  return cert;
}

inline bool gram_feasible(const TrigPoly& p, double tol = 1e-7) {
  return gram_certificate(p, tol).feasible;
}

// Speed-dependent bound V_min <= w^2 F1 + w F2 + F3 <= V_max for all
// theta and all normalized speeds w in [0,1], reduced to plain trig
// nonnegativity via Bernstein-basis positivity in w. Sufficient conditions.
inline std::vector<TrigPoly> bernstein_voltage_constraints(
    const TrigPoly& F1, const TrigPoly& F2, const TrigPoly& F3, double V_min,
    double V_max) {
  std::vector<TrigPoly> out;
  const TrigPoly lo = F3 - TrigPoly::constant(V_min);
  out.push_back(lo);
  out.push_back(F2 + 2.0 * lo);
  out.push_back(F1 + F2 + lo);
  // Upper bound: same expansion applied to V_max - (w^2 F1 + w F2 + F3).
  const TrigPoly hi = TrigPoly::constant(V_max) - F3;
  out.push_back(hi);
  out.push_back((-1.0 * F2) + 2.0 * hi);
  out.push_back((-1.0 * F1) + (-1.0 * F2) + hi);
  return out;
}

}  // namespace pmmctl

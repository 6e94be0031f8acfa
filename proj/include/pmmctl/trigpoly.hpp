#pragma once

// Real trigonometric polynomials p_0 + sum_k p_k cos(k t) + q_k sin(k t).
// Immutable after construction; every operation returns a fresh value.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pmmctl {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

class TrigPoly {
 public:
  // Zero polynomial of the given degree.
  explicit TrigPoly(int degree = 0)
      : cos_(static_cast<std::size_t>(degree) + 1, 0.0),
        sin_(static_cast<std::size_t>(degree) + 1, 0.0) {
    if (degree < 0) throw std::invalid_argument("TrigPoly: negative degree");
  }

  // cos holds p_0..p_M; sin holds q_1..q_M (no q_0 entry).
  TrigPoly(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
    if (cos_coeffs.empty())
      throw std::invalid_argument("TrigPoly: cos coefficients empty");
    if (sin_coeffs.size() + 1 != cos_coeffs.size())
      throw std::invalid_argument("TrigPoly: sin/cos length mismatch");
    cos_ = std::move(cos_coeffs);
    sin_.resize(cos_.size(), 0.0);
    for (std::size_t k = 1; k < cos_.size(); ++k) sin_[k] = sin_coeffs[k - 1];
  }

  static TrigPoly constant(double c) {
    TrigPoly p(0);
    p.cos_[0] = c;
    return p;
  }
  // a*cos(k t)
  static TrigPoly harmonic_cos(int k, double a = 1.0) {
    TrigPoly p(k);
    p.cos_[static_cast<std::size_t>(k)] = a;
    return p;
  }
  // a*sin(k t), k >= 1
  static TrigPoly harmonic_sin(int k, double a = 1.0) {
    if (k < 1) throw std::invalid_argument("harmonic_sin: k must be >= 1");
    TrigPoly p(k);
    p.sin_[static_cast<std::size_t>(k)] = a;
    return p;
  }

  int degree() const { return static_cast<int>(cos_.size()) - 1; }
  double p(int k) const { return cos_[static_cast<std::size_t>(k)]; }
  double q(int k) const {
    return k == 0 ? 0.0 : sin_[static_cast<std::size_t>(k)];
  }
  double& p(int k) { return cos_[static_cast<std::size_t>(k)]; }
  double& q(int k) { return sin_[static_cast<std::size_t>(k)]; }

  const std::vector<double>& cos_coeffs() const { return cos_; }
  // q_1..q_M, matching the serialized layout.
  std::vector<double> sin_coeffs() const {
    return std::vector<double>(sin_.begin() + 1, sin_.end());
  }

  // Series value via the angle-addition recurrence for cos(k t), sin(k t).
  double eval(double theta) const {
    if (!std::isfinite(theta))
      throw std::invalid_argument("TrigPoly::eval: non-finite angle");
    double acc = cos_[0];
    const double c1 = std::cos(theta), s1 = std::sin(theta);
    double ck = 1.0, sk = 0.0;
    for (std::size_t k = 1; k < cos_.size(); ++k) {
      const double cn = ck * c1 - sk * s1;
      const double sn = sk * c1 + ck * s1;
      ck = cn;
      sk = sn;
      acc += cos_[k] * ck + sin_[k] * sk;
    }
    return acc;
  }

  double operator()(double theta) const { return eval(theta); }

  // Complex view: r_0 = p_0, r_k = (p_k - i q_k)/2 for k >= 1.
  std::vector<std::complex<double>> complex_coeffs() const {
    std::vector<std::complex<double>> r(cos_.size());
    r[0] = cos_[0];
    for (std::size_t k = 1; k < cos_.size(); ++k)
      r[k] = std::complex<double>(cos_[k] / 2.0, -sin_[k] / 2.0);
    return r;
  }

  static TrigPoly from_complex(const std::vector<std::complex<double>>& r) {
    if (r.empty()) throw std::invalid_argument("from_complex: empty");
    TrigPoly p(static_cast<int>(r.size()) - 1);
    p.cos_[0] = r[0].real();
    for (std::size_t k = 1; k < r.size(); ++k) {
      p.cos_[k] = 2.0 * r[k].real();
      p.sin_[k] = -2.0 * r[k].imag();
    }
    return p;
  }

  TrigPoly operator+(const TrigPoly& o) const {
    TrigPoly r(std::max(degree(), o.degree()));
    for (int k = 0; k <= degree(); ++k) {
      r.p(k) += p(k);
      if (k) r.q(k) += q(k);
    }
    for (int k = 0; k <= o.degree(); ++k) {
      r.p(k) += o.p(k);
      if (k) r.q(k) += o.q(k);
    }
    return r;
  }
  TrigPoly operator-(const TrigPoly& o) const { return *this + (o * -1.0); }
  TrigPoly operator*(double s) const {
    TrigPoly r = *this;
    for (auto& v : r.cos_) v *= s;
    for (auto& v : r.sin_) v *= s;
    return r;
  }

  // Drops numerically-zero leading harmonics.
  TrigPoly trimmed(double tol = 0.0) const {
    int m = degree();
    while (m > 0 && std::abs(p(m)) <= tol && std::abs(q(m)) <= tol) --m;
    TrigPoly r(m);
    for (int k = 0; k <= m; ++k) {
      r.p(k) = p(k);
      if (k) r.q(k) = q(k);
    }
    return r;
  }

 private:
  std::vector<double> cos_;  // p_0..p_M
  std::vector<double> sin_;  // sin_[0] is always 0
};

inline TrigPoly operator*(double s, const TrigPoly& p) { return p * s; }

// Exact product via convolution of the two-sided complex coefficient
// sequences (equivalent to product-to-sum identities, coefficient by
// coefficient). Result degree is deg(a)+deg(b).
inline TrigPoly mul(const TrigPoly& a, const TrigPoly& b) {
  const int ma = a.degree(), mb = b.degree(), mc = ma + mb;
  const auto ra = a.complex_coeffs();
  const auto rb = b.complex_coeffs();
  auto side = [](const std::vector<std::complex<double>>& r, int k) {
    return k >= 0 ? r[static_cast<std::size_t>(k)]
                  : std::conj(r[static_cast<std::size_t>(-k)]);
  };
  std::vector<std::complex<double>> rc(static_cast<std::size_t>(mc) + 1);
  for (int k = 0; k <= mc; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = -ma; i <= ma; ++i) {
      const int j = k - i;
      if (j < -mb || j > mb) continue;
      acc += side(ra, i) * side(rb, j);
    }
    rc[static_cast<std::size_t>(k)] = acc;
  }
  return TrigPoly::from_complex(rc);
}

// p(theta + phi); degree preserved.
inline TrigPoly shift(const TrigPoly& p, double phi) {
  auto r = p.complex_coeffs();
  for (std::size_t k = 1; k < r.size(); ++k)
    r[k] *= std::exp(std::complex<double>(0.0, static_cast<double>(k) * phi));
  return TrigPoly::from_complex(r);
}

// d/dtheta of the series.
inline TrigPoly derivative(const TrigPoly& p) {
  TrigPoly d(p.degree());
  for (int k = 1; k <= p.degree(); ++k) {
    d.p(k) = k * p.q(k);
    d.q(k) = -k * p.p(k);
  }
  return d;
}

// Least-squares Fourier fit of degree M. Requires >= 2M+1 samples with
// enough angular spread for a full-rank design matrix.
inline TrigPoly fit_fourier(const std::vector<std::pair<double, double>>& samples,
                            int M) {
  if (M < 0) throw std::invalid_argument("fit_fourier: negative degree");
  const int n = static_cast<int>(samples.size());
  const int cols = 2 * M + 1;
  if (n < cols)
    throw std::invalid_argument("fit_fourier: need at least 2M+1 samples");
  Eigen::MatrixXd A(n, cols);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double th = samples[static_cast<std::size_t>(i)].first;
    y(i) = samples[static_cast<std::size_t>(i)].second;
    A(i, 0) = 1.0;
    for (int k = 1; k <= M; ++k) {
      A(i, k) = std::cos(k * th);
      A(i, M + k) = std::sin(k * th);
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols)
    throw std::runtime_error(
        "fit_fourier: rank-deficient design matrix; sample angles do not "
        "cover the circle well enough for degree " +
        std::to_string(M));
  const Eigen::VectorXd x = qr.solve(y);
  TrigPoly f(M);
  f.p(0) = x(0);
  for (int k = 1; k <= M; ++k) {
    f.p(k) = x(k);
    f.q(k) = x(M + k);
  }
  return f;
}

// |p_0| + sum_k sqrt(p_k^2 + q_k^2); dominates max |p| on the circle.
inline double sup_bound(const TrigPoly& p) {
  double b = std::abs(p.p(0));
  for (int k = 1; k <= p.degree(); ++k) b += std::hypot(p.p(k), p.q(k));
  return b;
}

struct GridExtremum {
  double theta;
  double value;
};

// Maximum over a uniform grid on [0, 2pi); ties resolved to smallest theta.
inline GridExtremum grid_max(const TrigPoly& p, int n_points) {
  if (n_points < 4 * p.degree() + 1)
    throw std::invalid_argument("grid_max: need at least 4M+1 points");
  GridExtremum best{0.0, p.eval(0.0)};
  for (int i = 1; i < n_points; ++i) {
    const double th = kTwoPi * i / n_points;
    const double v = p.eval(th);
    if (v > best.value) best = {th, v};
  }
  return best;
}

inline GridExtremum grid_min(const TrigPoly& p, int n_points) {
  GridExtremum m = grid_max(p * -1.0, n_points);
  return {m.theta, -m.value};
}

// Max of |p| on a grid.
inline double grid_abs_max(const TrigPoly& p, int n_points) {
  return std::max(grid_max(p, n_points).value,
                  -grid_min(p, n_points).value);
}

}  // namespace pmmctl

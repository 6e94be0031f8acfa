#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pmmctl/trigpoly.hpp"
#include "test_helpers.hpp"

using namespace pmmctl;
using pmmctl::testing::naive_eval;
using pmmctl::testing::random_poly;

namespace {
constexpr double kPi = kTwoPi / 2.0;

void require_coeffs_close(const TrigPoly& a, const TrigPoly& b,
                          double tol = 1e-9) {
  const int m = std::max(a.degree(), b.degree());
  for (int k = 0; k <= m; ++k) {
    const double pa = k <= a.degree() ? a.p(k) : 0.0;
    const double pb = k <= b.degree() ? b.p(k) : 0.0;
    const double qa = k <= a.degree() ? a.q(k) : 0.0;
    const double qb = k <= b.degree() ? b.q(k) : 0.0;
    REQUIRE_THAT(pa, Catch::Matchers::WithinAbs(pb, tol));
    REQUIRE_THAT(qa, Catch::Matchers::WithinAbs(qb, tol));
  }
}
}  // namespace

TEST_CASE("eval identities") {
  REQUIRE_THAT(TrigPoly::harmonic_sin(1).eval(kPi / 2),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(TrigPoly::constant(1.5).eval(0.37),
               Catch::Matchers::WithinAbs(1.5, 1e-15));
}

TEST_CASE("eval matches direct summation oracle") {
  std::mt19937_64 rng(42);
  const TrigPoly p = random_poly(rng, 17);
  for (int i = 0; i < 1000; ++i) {
    const double th = kTwoPi * i / 1000.0;
    REQUIRE_THAT(p.eval(th), Catch::Matchers::WithinAbs(naive_eval(p, th), 1e-12));
  }
}

TEST_CASE("eval is 2pi periodic") {
  std::mt19937_64 rng(3);
  const TrigPoly p = random_poly(rng, 8);
  for (double th : {0.1, 1.7, 4.4}) {
    REQUIRE_THAT(p.eval(th), Catch::Matchers::WithinAbs(p.eval(th + kTwoPi), 1e-10));
  }
}

TEST_CASE("complex round trip is the identity") {
  std::mt19937_64 rng(7);
  const TrigPoly p = random_poly(rng, 6);
  require_coeffs_close(TrigPoly::from_complex(p.complex_coeffs()), p, 1e-15);
  // Real-valuedness of the complex form.
  const auto r = p.complex_coeffs();
  for (double th : {0.3, 2.2, 5.9}) {
    std::complex<double> acc = r[0];
    for (std::size_t k = 1; k < r.size(); ++k) {
      const auto e = std::exp(std::complex<double>(0.0, k * th));
      acc += r[k] * e + std::conj(r[k]) * std::conj(e);
    }
    REQUIRE_THAT(acc.imag(), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(acc.real(), Catch::Matchers::WithinAbs(p.eval(th), 1e-12));
  }
}

TEST_CASE("mul: sin^2 product-to-sum") {
  const TrigPoly s = TrigPoly::harmonic_sin(1);
  const TrigPoly p = mul(s, s);
  REQUIRE(p.degree() == 2);
  REQUIRE_THAT(p.p(0), Catch::Matchers::WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(p.p(2), Catch::Matchers::WithinAbs(-0.5, 1e-12));
  REQUIRE_THAT(p.q(1), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("mul: three-phase sin^2 sum is constant 3/2") {
  TrigPoly total(0);
  for (int j = 0; j < 3; ++j) {
    const TrigPoly sj = shift(TrigPoly::harmonic_sin(1), kTwoPi * j / 3.0);
    total = total + mul(sj, sj);
  }
  const TrigPoly t = total.trimmed(1e-12);
  REQUIRE(t.degree() == 0);
  REQUIRE_THAT(t.p(0), Catch::Matchers::WithinAbs(1.5, 1e-12));
}

TEST_CASE("mul matches pointwise product on a grid") {
  std::mt19937_64 rng(11);
  const TrigPoly a = random_poly(rng, 3);
  const TrigPoly b = random_poly(rng, 4);
  const TrigPoly c = mul(a, b);
  REQUIRE(c.degree() == 7);
  for (int i = 0; i < 10000; ++i) {
    const double th = kTwoPi * i / 10000.0;
    REQUIRE_THAT(c.eval(th),
                 Catch::Matchers::WithinAbs(a.eval(th) * b.eval(th), 1e-10));
  }
}

TEST_CASE("mul is commutative and associative") {
  std::mt19937_64 rng(12);
  const TrigPoly a = random_poly(rng, 2), b = random_poly(rng, 3),
                 c = random_poly(rng, 2);
  require_coeffs_close(mul(a, b), mul(b, a), 1e-12);
  require_coeffs_close(mul(mul(a, b), c), mul(a, mul(b, c)), 1e-12);
}

TEST_CASE("shift identities") {
  const TrigPoly c = TrigPoly::harmonic_cos(1);
  require_coeffs_close(shift(c, kPi / 2), TrigPoly::harmonic_sin(1, -1.0), 1e-12);
  std::mt19937_64 rng(13);
  const TrigPoly p = random_poly(rng, 5);
  require_coeffs_close(shift(p, 0.0), p, 1e-15);
  require_coeffs_close(shift(shift(p, 2.0 * kPi / 3.0), 4.0 * kPi / 3.0), p, 1e-12);
}

TEST_CASE("shift is a group action") {
  std::mt19937_64 rng(14);
  const TrigPoly p = random_poly(rng, 6);
  std::uniform_real_distribution<double> d(0.0, kTwoPi);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = d(rng), b = d(rng);
    require_coeffs_close(shift(p, a + b), shift(shift(p, a), b), 1e-11);
  }
}

TEST_CASE("derivative basics") {
  require_coeffs_close(derivative(TrigPoly::harmonic_sin(1)),
                       TrigPoly::harmonic_cos(1), 1e-15);
  const TrigPoly dz = derivative(TrigPoly::constant(4.2));
  REQUIRE(dz.degree() == 0);
  REQUIRE(dz.p(0) == 0.0);
}

TEST_CASE("derivative matches central finite differences") {
  std::mt19937_64 rng(15);
  const TrigPoly p = random_poly(rng, 5);
  const TrigPoly dp = derivative(p);
  std::uniform_real_distribution<double> d(0.0, kTwoPi);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const double th = d(rng);
    const double fd = (p.eval(th + h) - p.eval(th - h)) / (2.0 * h);
    REQUIRE_THAT(dp.eval(th), Catch::Matchers::WithinAbs(fd, 1e-6));
  }
}

TEST_CASE("derivative obeys the product rule coefficientwise") {
  std::mt19937_64 rng(16);
  const TrigPoly a = random_poly(rng, 3), b = random_poly(rng, 4);
  require_coeffs_close(derivative(mul(a, b)),
                       mul(derivative(a), b) + mul(a, derivative(b)), 1e-11);
}

TEST_CASE("fit_fourier recovers an exact sinusoid") {
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 100; ++i) {
    const double th = kTwoPi * i / 100.0;
    samples.emplace_back(th, std::sin(th));
  }
  const TrigPoly f = fit_fourier(samples, 1);
  REQUIRE_THAT(f.q(1), Catch::Matchers::WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(f.p(0), Catch::Matchers::WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(f.p(1), Catch::Matchers::WithinAbs(0.0, 1e-10));
}

TEST_CASE("fit_fourier round trip on random degree-3 polynomials") {
  std::mt19937_64 rng(17);
  const TrigPoly p = random_poly(rng, 3);
  std::vector<std::pair<double, double>> samples;
  std::uniform_real_distribution<double> d(0.0, kTwoPi);
  for (int i = 0; i < 40; ++i) {
    const double th = d(rng);
    samples.emplace_back(th, p.eval(th));
  }
  require_coeffs_close(fit_fourier(samples, 3), p, 1e-8);
}

TEST_CASE("fit_fourier with bounded noise stays close") {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (int seed = 0; seed < 100; ++seed) {
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i < 200; ++i) {
      const double th = kTwoPi * i / 200.0;
      samples.emplace_back(th, std::sin(th) + noise(rng));
    }
    const TrigPoly f = fit_fourier(samples, 1);
    REQUIRE_THAT(f.q(1), Catch::Matchers::WithinAbs(1.0, 0.01));
  }
}

TEST_CASE("fit_fourier rejects coincident angles") {
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 10; ++i) samples.emplace_back(0.5, 1.0);
  REQUIRE_THROWS_WITH(fit_fourier(samples, 1),
                      Catch::Matchers::ContainsSubstring("angular coverage") ||
                          Catch::Matchers::ContainsSubstring("rank"));
}

TEST_CASE("sup_bound tight cases") {
  REQUIRE_THAT(sup_bound(TrigPoly::harmonic_sin(1)),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
  const TrigPoly p = TrigPoly::harmonic_cos(1) + TrigPoly::harmonic_cos(2);
  REQUIRE_THAT(sup_bound(p), Catch::Matchers::WithinAbs(2.0, 1e-15));
}

TEST_CASE("sup_bound dominates the dense-grid maximum") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    const TrigPoly p = random_poly(rng, 1 + trial % 8);
    REQUIRE(sup_bound(p) >= testing::grid_oracle_max_abs(p, 100000) - 1e-12);
  }
}

TEST_CASE("grid_max basics") {
  const auto m = grid_max(TrigPoly::harmonic_sin(1), 10000);
  REQUIRE_THAT(m.value, Catch::Matchers::WithinAbs(1.0, 1e-7));
  const auto c = grid_max(TrigPoly::constant(5.0), 11);
  REQUIRE(c.theta == 0.0);
  REQUIRE(c.value == 5.0);
}

TEST_CASE("grid_max never exceeds sup_bound") {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 25; ++trial) {
    const TrigPoly p = random_poly(rng, 1 + trial % 6);
    REQUIRE(grid_max(p, 4 * p.degree() + 64).value <= sup_bound(p) + 1e-12);
  }
}

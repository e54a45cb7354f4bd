#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "chafee/errors.hpp"
#include "chafee/special.hpp"

using namespace chafee;

namespace {

// erf by composite Simpson quadrature of 2/sqrt(pi) e^{-s^2}.
double erf_quadrature(double z) {
  const int n = 2000;
  const double h = z / n;
  double s = 1.0 + std::exp(-z * z);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * std::exp(-std::pow(i * h, 2));
  return 2.0 / std::sqrt(std::numbers::pi) * s * h / 3.0;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
  return t;
}

}  // namespace

TEST_SUITE("special") {
  TEST_CASE("Mittag-Leffler values") {
    CHECK(std::abs(mittag_leffler(1.0, 1.0) - std::numbers::e) <= 1e-12);
    CHECK(mittag_leffler(0.0, 0.5) == 1.0);
    for (double z : {0.25, 1.0, 2.0, 3.0}) {
      const double oracle = std::exp(z * z) * (1.0 + erf_quadrature(z));
      CHECK(mittag_leffler(z, 0.5) == doctest::Approx(oracle).epsilon(1e-10));
    }
    CHECK_THROWS_AS(mittag_leffler(-1.0, 0.5), DomainError);
    CHECK_THROWS_AS(mittag_leffler(1.0, 1.5), DomainError);
    MlParams tight;
    tight.max_terms = 3;
    CHECK_THROWS_AS(mittag_leffler(5.0, 0.5, tight), ConvergenceError);
  }

  TEST_CASE("Mittag-Leffler derivative against differences") {
    for (double order : {0.5, 0.8, 1.0}) {
      for (double z : {0.1, 1.0, 2.5}) {
        const double h = 1e-5;
        const double fd = (mittag_leffler(z + h, order) - mittag_leffler(z - h, order)) / (2 * h);
        CHECK(mittag_leffler_derivative(z, order) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("Beta identity by quadrature") {
    for (int n = 1; n <= 4; ++n) {
      // int_0^1 (1-z)^{n/2-1} z^{-1/2} dz with z = sin^2(phi):
      // 2 int_0^{pi/2} cos^{n-1}(phi) dphi
      const int m = 20000;
      const double h = 0.5 * std::numbers::pi / m;
      double s = std::pow(1.0, n - 1) + std::pow(std::cos(0.5 * std::numbers::pi), n - 1);
      for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * std::pow(std::cos(i * h), n - 1);
      const double quad = 2.0 * s * h / 3.0;
      CHECK(beta_function(0.5 * n, 0.5) == doctest::Approx(quad).epsilon(1e-8));
    }
  }

  TEST_CASE("Gronwall reductions") {
    const auto t = linspace(0.0, 2.0, 41);
    const std::vector<double> a(t.size(), 1.0);
    const auto plain = gronwall_bound(a, 0.0, 0.5, t, GronwallForm::General);
    for (double x : plain) CHECK(x == doctest::Approx(1.0));
    const auto classical = gronwall_bound(a, 0.7, 0.0, t, GronwallForm::Nondecreasing);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(classical[i] == doctest::Approx(std::exp(0.7 * t[i])).epsilon(1e-12));
    const auto nd = gronwall_bound(a, 1.0, 0.5, t, GronwallForm::Nondecreasing);
    const auto gen = gronwall_bound(a, 1.0, 0.5, t, GronwallForm::General);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(gen[i] == doctest::Approx(nd[i]).epsilon(0.01));
  }

  TEST_CASE("singular exponential integral") {
    // mu = 0: int_0^t (t-s)^{-1/2} ds = 2 sqrt(t)
    CHECK(singular_exp_integral(0.0, 2.0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-10));
    // against the Dawson-type closed form via erf for mu > 0:
    // e^{mu t} sqrt(pi/mu) erf(sqrt(mu t))
    const double mu = 0.8, t = 1.5;
    const double closed = std::exp(mu * t) * std::sqrt(std::numbers::pi / mu) * erf_quadrature(std::sqrt(mu * t));
    CHECK(singular_exp_integral(mu, t) == doctest::Approx(closed).epsilon(1e-8));
  }

  TEST_CASE("envelope reductions") {
    const auto t = linspace(0.0, 2.0, 21);
    for (double x : h1_envelope(0.0, 0.0, 1.0, 0.5, t)) CHECK(x == 0.0);
    const auto decay = h1_envelope(0.4, 0.0, 0.0, 0.5, t);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(decay[i] == doctest::Approx(0.4 * std::exp(-0.5 * t[i])).epsilon(1e-12));
    CHECK_THROWS_AS(h1_envelope(1.0, 0.1, 1.0, -0.1, t), DomainError);
    const auto a = h1_envelope(0.4, 0.1, 1.0, 0.5, t);
    const auto b = h1_envelope(0.4, 0.2, 1.0, 0.5, t);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(b[i] >= a[i]);
  }
}

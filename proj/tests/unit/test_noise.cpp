#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "chafee/errors.hpp"
#include "chafee/noise.hpp"

using namespace chafee;

namespace {

std::shared_ptr<const Domain> paper_domain(int n) {
  return Domain::make({2.0 * std::numbers::pi, n, BasisConvention::PaperTwoPi});
}

}  // namespace

TEST_SUITE("noise") {
  TEST_CASE("zero covariance gives zero increments") {
    const auto d = paper_domain(8);
    const NoisePath p = sample_path(CovarianceSpec::zero(*d), 1e-3, -1.0, 1.0, 42);
    for (std::int64_t i = p.first_step(); i < p.end_step(); ++i) {
      for (double x : p.increment(i)) CHECK(x == 0.0);
    }
  }

  TEST_CASE("increment mean and variance") {
    const auto d = paper_domain(4);
    const auto cov = CovarianceSpec::power_law(*d, 1.0, 2.0);
    const double dt = 1e-3;
    const long n = 100000;
    const NoisePath p = sample_path(cov, dt, 0.0, n * dt, 5);
    REQUIRE(p.steps() == n);
    for (int k = 1; k <= 4; ++k) {
      double s = 0.0, s2 = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const double x = p.increment(i)[k - 1];
        s += x;
        s2 += x * x;
      }
      const double qk = cov.q[k - 1];
      const double mean = s / n;
      const double var = s2 / n - mean * mean;
      CHECK(std::abs(mean) <= 4.0 * std::sqrt(qk * dt / n));
      CHECK(var == doctest::Approx(qk * dt).epsilon(0.05));
    }
  }

  TEST_CASE("paths are keyed by (seed, mode, step)") {
    const auto d = paper_domain(6);
    const auto cov = CovarianceSpec::power_law(*d, 1.0);
    const NoisePath a = sample_path(cov, 1e-3, -2.0, 1.0, 77);
    const NoisePath b = sample_path(cov, 1e-3, -0.5, 0.5, 77);
    for (std::int64_t i = b.first_step(); i < b.end_step(); i += 37) {
      const auto x = a.increment(i), y = b.increment(i);
      CHECK(std::equal(x.begin(), x.end(), y.begin()));
    }
    const NoisePath c = sample_path(cov, 1e-3, -0.5, 0.5, 78);
    CHECK(c.increment(0)[0] != b.increment(0)[0]);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 5) == derive_seed(1, 5));
  }

  TEST_CASE("wiener shift") {
    const auto d = paper_domain(5);
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0), 1e-2, -3.0, 3.0, 3);
    CHECK(wiener_shift(p, 0.0) == p);
    CHECK(wiener_shift(wiener_shift(p, -0.01), 0.01) == p);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick(0, 100);
    for (int trial = 0; trial < 20; ++trial) {
      const double s = pick(rng) * 0.01 - 0.5;  // in [-0.5, 0.5]
      const double t = pick(rng) * 0.01;        // in [0, 1]
      const NoisePath q = wiener_shift(p, s);
      for (int k = 1; k <= 5; ++k) {
        // direct summation: W_{t+s} - W_s against W_t of the shifted path
        double direct = 0.0;
        const auto a = static_cast<std::int64_t>(std::llround(s / 0.01));
        const auto b = static_cast<std::int64_t>(std::llround((s + t) / 0.01));
        for (std::int64_t i = a; i < b; ++i) direct += p.increment(i)[k - 1];
        CHECK(wiener_difference(q, k, 0.0, t) == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
      }
    }
    CHECK_THROWS_AS(wiener_shift(p, 10.0), std::out_of_range);
  }

  TEST_CASE("slice, coarsen and refine") {
    const auto d = paper_domain(4);
    const auto cov = CovarianceSpec::power_law(*d, 1.0);
    const NoisePath p = sample_path(cov, 1e-2, -1.0, 1.0, 11);
    const NoisePath s = p.slice(0, 50);
    CHECK(s.first_step() == 0);
    CHECK(s.steps() == 50);
    CHECK(s.increment(7)[2] == p.increment(7)[2]);
    CHECK_THROWS(s.increment(50));

    const NoisePath fine = refine(s, cov);
    CHECK(fine.dt() == doctest::Approx(0.005));
    CHECK(fine.steps() == 100);
    const NoisePath back = fine.coarsen(2);
    for (std::int64_t i = 0; i < 50; ++i) {
      for (int k = 0; k < 4; ++k) CHECK(back.increment(i)[k] == doctest::Approx(s.increment(i)[k]).epsilon(1e-14).scale(1.0));
    }
    CHECK(refine(s, cov) == fine);

    // bridge midpoints: conditional variance q dt / 4 for each half
    const NoisePath long_path = sample_path(cov, 1e-2, 0.0, 400.0, 12);
    const NoisePath lf = refine(long_path, cov);
    double s2 = 0.0;
    for (std::int64_t i = 0; i < long_path.steps(); ++i) {
      const double half = 0.5 * long_path.increment(i)[0];
      const double x = lf.increment(2 * i)[0] - half;
      s2 += x * x;
    }
    CHECK(s2 / long_path.steps() == doctest::Approx(cov.q[0] * 1e-2 / 4.0).epsilon(0.05));
  }

  TEST_CASE("binary path round trip") {
    const auto d = paper_domain(3);
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0), 1e-2, -0.2, 0.3, 4);
    std::stringstream ss;
    write_path_binary(p, ss, "chafee test");
    CHECK(ss.str().find("chafee test") == 8 + 4);
    CHECK(read_path_binary(ss) == p);
  }

  TEST_CASE("trace condition and covariance validation") {
    const auto d = paper_domain(64);
    CHECK(trace_check(CovarianceSpec::power_law(*d, 1.0), *d).ok);
    CHECK_FALSE(trace_check(CovarianceSpec::power_law(*d, 0.0), *d).ok);
    CHECK_THROWS_AS(validate_covariance(CovarianceSpec::explicit_values({1.0, 2.0}), *d), ConfigError);
    std::vector<double> q(64, 0.0);
    q[0] = -1.0;
    CHECK_THROWS_AS(validate_covariance(CovarianceSpec::explicit_values(q), *d), ConfigError);
  }

  TEST_CASE("OU step") {
    const auto d = paper_domain(3);
    OuState s{SpectralField(d, {0.0, 0.0, 1.0}), 8.0};  // alpha - lambda_3 = -1
    const std::vector<double> zero(3, 0.0);
    const OuState n = ou_step(s, zero, 0.1, 8.0);
    CHECK(n.z.coeff(3) == doctest::Approx(std::exp(-0.1)).epsilon(1e-15));

    OuState z{SpectralField(d), 0.5};
    const NoisePath p = sample_path(CovarianceSpec::zero(*d), 1e-2, 0.0, 1.0, 1);
    for (std::int64_t i = 0; i < p.steps(); ++i) z = ou_step(z, p.increment(i), 1e-2, 0.5);
    CHECK(h_norm(z.z) == 0.0);
  }

  TEST_CASE("variance-exact OU has the stationary variance") {
    const auto d = paper_domain(2);
    const auto cov = CovarianceSpec::power_law(*d, 1.0);
    const double alpha = 0.5, dt = 0.05;
    const NoisePath p = sample_path(cov, dt, 0.0, 20000.0, 21);
    OuState z{SpectralField(d), alpha};
    double s2[2] = {0.0, 0.0};
    long count = 0;
    for (std::int64_t i = 0; i < p.steps(); ++i) {
      z = ou_step(z, p.increment(i), dt, alpha, OuVariant::VarianceExact);
      if (i < 2000) continue;
      for (int k = 0; k < 2; ++k) s2[k] += z.z.values()[k] * z.z.values()[k];
      ++count;
    }
    for (int k = 1; k <= 2; ++k) {
      const double expected = cov.q[k - 1] / (2.0 * (d->eigenvalue(k) - alpha));
      CHECK(s2[k - 1] / count == doctest::Approx(expected).epsilon(0.05));
    }
  }
}

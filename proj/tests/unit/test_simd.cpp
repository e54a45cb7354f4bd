#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/simd/kernels.hpp"
#include "chafee/spectral.hpp"

using namespace chafee;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

bool close(const std::vector<double>& a, const std::vector<double>& b, double rel) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(a[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return diff <= rel * std::max(1.0, scale);
}

// Restores the active ISA on scope exit.
struct IsaGuard {
  simd::Isa saved = simd::active_isa();
  ~IsaGuard() { simd::set_isa(saved); }
};

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar is always available and selectable") {
    IsaGuard guard;
    CHECK(simd::isa_available(simd::Isa::Scalar));
    simd::set_isa(simd::Isa::Scalar);
    CHECK(simd::active_isa() == simd::Isa::Scalar);
    CHECK(&simd::kernels() == &simd::scalar_kernels());
  }

  TEST_CASE("vector kernels agree with the scalar reference") {
    if (!simd::isa_available(simd::Isa::Avx2)) return;
    const auto& s = simd::kernels_for(simd::Isa::Scalar);
    const auto& v = simd::kernels_for(simd::Isa::Avx2);
    std::mt19937_64 rng(1);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 13u, 64u, 129u}) {
      const auto a = random_vector(n, rng);
      const auto b = random_vector(n, rng);
      const auto c = random_vector(n, rng);
      CHECK(v.dot(a.data(), b.data(), n) == doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-13));
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = std::abs(c[i]);
      CHECK(v.weighted_sum_squares(w.data(), a.data(), n) ==
            doctest::Approx(s.weighted_sum_squares(w.data(), a.data(), n)).epsilon(1e-13));

      std::vector<double> y1(n), y2(n);
      s.cube(a.data(), y1.data(), n);
      v.cube(a.data(), y2.data(), n);
      CHECK(close(y1, y2, 1e-15));
      s.mul(a.data(), b.data(), y1.data(), n);
      v.mul(a.data(), b.data(), y2.data(), n);
      CHECK(close(y1, y2, 1e-15));
      s.scaled_square(a.data(), 3.0, y1.data(), n);
      v.scaled_square(a.data(), 3.0, y2.data(), n);
      CHECK(close(y1, y2, 1e-15));
      s.diagonal_step(w.data(), b.data(), a.data(), c.data(), b.data(), y1.data(), n);
      v.diagonal_step(w.data(), b.data(), a.data(), c.data(), b.data(), y2.data(), n);
      CHECK(close(y1, y2, 1e-14));
      s.diagonal_step(w.data(), b.data(), a.data(), nullptr, b.data(), y1.data(), n);
      v.diagonal_step(w.data(), b.data(), a.data(), nullptr, b.data(), y2.data(), n);
      CHECK(close(y1, y2, 1e-14));
      y1 = c;
      y2 = c;
      s.axpy(0.7, a.data(), y1.data(), n);
      v.axpy(0.7, a.data(), y2.data(), n);
      CHECK(close(y1, y2, 1e-15));
      s.scale(-1.3, y1.data(), n);
      v.scale(-1.3, y2.data(), n);
      CHECK(close(y1, y2, 1e-15));
    }
  }

  TEST_CASE("matvec agrees across ISAs and matmat is bit-identical to matvec") {
    std::mt19937_64 rng(2);
    for (auto [rows, cols, ld] : {std::tuple{5ul, 3ul, 3ul}, std::tuple{17ul, 9ul, 12ul},
                                  std::tuple{129ul, 64ul, 64ul}, std::tuple{64ul, 129ul, 130ul}}) {
      const auto a = random_vector(rows * ld, rng);
      const std::size_t m = 5;
      const std::size_t ldx = cols + 2;
      const auto x = random_vector(m * ldx, rng);
      std::vector<std::vector<double>> per_isa;
      for (simd::Isa isa : {simd::Isa::Scalar, simd::Isa::Avx2}) {
        if (!simd::isa_available(isa)) continue;
        const auto& k = simd::kernels_for(isa);
        std::vector<double> single(m * rows), batch(m * rows);
        for (std::size_t j = 0; j < m; ++j) k.matvec(a.data(), rows, cols, ld, x.data() + j * ldx, single.data() + j * rows);
        k.matmat(a.data(), rows, cols, ld, x.data(), ldx, m, batch.data(), rows);
        CHECK(single == batch);
        per_isa.push_back(single);
      }
      if (per_isa.size() == 2) CHECK(close(per_isa[0], per_isa[1], 1e-13));
    }
  }

  TEST_CASE("batched transforms and steps are bit-identical to single ones") {
    const auto d = Domain::make({2.0 * std::numbers::pi, 24, BasisConvention::PaperTwoPi});
    std::mt19937_64 rng(3);
    const std::size_t count = 5;
    const auto coeffs = random_vector(count * d->modes(), rng);
    std::vector<double> grid(count * d->grid_size()), one(d->grid_size());
    d->synthesize_many(coeffs, count, grid);
    for (std::size_t j = 0; j < count; ++j) {
      d->synthesize(std::span(coeffs).subspan(j * d->modes(), d->modes()), one);
      CHECK(std::equal(one.begin(), one.end(), grid.begin() + j * d->grid_size()));
    }
    std::vector<double> back(count * d->modes()), back1(d->modes());
    d->analyze_many(grid, count, back);
    for (std::size_t j = 0; j < count; ++j) {
      d->analyze(std::span(grid).subspan(j * d->grid_size(), d->grid_size()), back1);
      CHECK(std::equal(back1.begin(), back1.end(), back.begin() + j * d->modes()));
    }

    SolverConfig cfg;
    cfg.alpha = 2.0;
    Integrator in(d, cfg);
    const auto dw = random_vector(d->modes(), rng);
    std::vector<double> many(coeffs.size()), single(d->modes());
    in.step_spde_many(coeffs, count, dw, many, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
      in.step_spde(std::span(coeffs).subspan(j * d->modes(), d->modes()), dw, single, 0.0);
      CHECK(std::equal(single.begin(), single.end(), many.begin() + j * d->modes()));
    }
    in.set_base(std::span(coeffs).subspan(0, d->modes()));
    in.step_variational_many(coeffs, count, many, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
      in.step_variational(std::span(coeffs).subspan(j * d->modes(), d->modes()), single, 0.0);
      CHECK(std::equal(single.begin(), single.end(), many.begin() + j * d->modes()));
    }
  }

  TEST_CASE("a trajectory is the same under both ISAs up to rounding") {
    if (!simd::isa_available(simd::Isa::Avx2)) return;
    IsaGuard guard;
    const auto d = Domain::make({2.0 * std::numbers::pi, 32, BasisConvention::PaperTwoPi});
    SolverConfig cfg;
    cfg.alpha = 2.0;
    std::vector<double> u0(32);
    for (int k = 0; k < 32; ++k) u0[k] = std::sin(0.3 * k + 1.0) / (1.0 + k);
    std::vector<SpectralField> finals;
    for (simd::Isa isa : {simd::Isa::Scalar, simd::Isa::Avx2}) {
      simd::set_isa(isa);
      const NoisePath path = sample_path(CovarianceSpec::power_law(*d, 1.0), cfg.dt, 0.0, 1.0, 9);
      finals.push_back(integrate_final(SpectralField(d, u0), path, 0.0, 1.0, cfg));
    }
    CHECK(h_norm(finals[0] - finals[1]) <= 1e-11 * h_norm(finals[0]));
  }
}

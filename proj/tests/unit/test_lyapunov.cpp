#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "chafee/lyapunov.hpp"

using namespace chafee;

namespace {

std::shared_ptr<const Domain> paper_domain(int n) {
  return Domain::make({2.0 * std::numbers::pi, n, BasisConvention::PaperTwoPi});
}

SpectralField smooth_field(const std::shared_ptr<const Domain>& d, double amp, double phase) {
  SpectralField u(d);
  for (int k = 1; k <= d->modes(); ++k) u.coeff(k) = amp * std::sin(phase + 0.7 * k) / k;
  return u;
}

std::vector<double> grid(double step, double end) {
  std::vector<double> g;
  for (int i = 1; i * step <= end + 1e-12; ++i) g.push_back(i * step);
  return g;
}

}  // namespace

TEST_SUITE("lyapunov") {
  TEST_CASE("frames") {
    const auto d = paper_domain(6);
    const TangentFrame f = TangentFrame::leading(d, 3);
    CHECK(f.size() == 3);
    CHECK(f.orthonormality_defect() == 0.0);
    const TangentFrame g = TangentFrame::from_vectors(d, {{1, 1, 0, 0, 0, 0}, {1, 0, 1, 0, 0, 0}});
    CHECK(g.orthonormality_defect() < 1e-15);
    CHECK_THROWS(TangentFrame::from_vectors(d, {{1, 0, 0, 0, 0, 0}, {2, 0, 0, 0, 0, 0}}));
  }

  TEST_CASE("linear case: log stretching is exact") {
    const auto d = paper_domain(8);
    SolverConfig cfg;
    cfg.alpha = 2.0;
    cfg.linear = true;
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0), cfg.dt, 0.0, 1.0, 1);
    const TrajectoryRecord base = integrate(SpectralField(d), p, 0.0, 1.0, cfg);
    const TangentFrame f = propagate_frame(TangentFrame::leading(d, 4), base, 0.0, 1.0, cfg);
    for (int i = 0; i < 4; ++i) {
      CHECK(f.log_r[i] == doctest::Approx(2.0 - (i + 1) * (i + 1)).epsilon(1e-9).scale(1.0));
    }
    const auto g = grid(0.1, 1.0);
    const FtleReport top = ftle_top(p, SpectralField(d), g, cfg);
    const FtleReport vol = volume_growth(p, SpectralField(d), 3, g, cfg);
    for (std::size_t t = 0; t < g.size(); ++t) {
      CHECK(std::abs(top.lambda[t][0] - 1.0) <= 1e-8);
      for (int j = 0; j < 3; ++j) CHECK(std::abs(vol.v[t][j] - vol.volume_bounds[j]) <= 1e-8);
    }
    CHECK(vol.volume_bounds[2] == doctest::Approx(1.0 - 2.0 - 7.0));
  }

  TEST_CASE("one-vector stretching obeys the first-eigenvalue bound") {
    const auto d = paper_domain(32);
    SolverConfig cfg;
    cfg.alpha = 2.5;
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0, 4.0), cfg.dt, 0.0, 2.0, 3);
    const TrajectoryRecord base = integrate(smooth_field(d, 2.0, 0.3), p, 0.0, 2.0, cfg);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> w(32);
      for (double& x : w) x = gauss(rng);
      TangentFrame f = TangentFrame::from_vectors(d, {w});
      for (double t : {0.5, 1.0, 2.0}) {
        f = propagate_frame(f, base, f.t_elapsed, t, cfg);
        CHECK(std::exp(f.log_r[0]) <= std::exp((2.5 - 1.0) * t) * (1.0 + 1e-6));
      }
    }
  }

  TEST_CASE("reorthonormalization frequency does not change the volume") {
    const auto d = paper_domain(32);
    SolverConfig cfg;
    cfg.alpha = 5.0;
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0, 4.0), cfg.dt, 0.0, 2.0, 7);
    const TrajectoryRecord base = integrate(smooth_field(d, 1.0, 0.1), p, 0.0, 2.0, cfg);
    std::vector<double> vols;
    for (int every : {1, 5, 25}) {
      vols.push_back(propagate_frame(TangentFrame::leading(d, 3), base, 0.0, 2.0, cfg, every).log_volume);
    }
    CHECK(vols[1] == doctest::Approx(vols[0]).epsilon(1e-7).scale(1.0));
    CHECK(vols[2] == doctest::Approx(vols[0]).epsilon(1e-7).scale(1.0));
  }

  TEST_CASE("dense Jacobian oracle for a small system") {
    const auto d = paper_domain(6);
    SolverConfig cfg;
    cfg.alpha = 5.0;
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0, 4.0), cfg.dt, 0.0, 1.0, 11);
    const TrajectoryRecord base = integrate(smooth_field(d, 2.0, 0.8), p, 0.0, 1.0, cfg);
    // assemble D phi column by column from the unit vectors
    Eigen::MatrixXd jac(6, 6);
    for (int c = 0; c < 6; ++c) {
      SpectralField v = SpectralField::unit(d, c + 1);
      for (std::size_t i = 0; i + 1 < base.size(); ++i) v = step_variational(v, base.state(i), cfg);
      for (int r = 0; r < 6; ++r) jac(r, c) = v.values()[r];
    }
    // V_2 from a frame started at (e1, e2) is the volume of D phi on that plane
    const Eigen::MatrixXd image = jac.leftCols(2);
    const double oracle_v2 = 0.5 * std::log((image.transpose() * image).determinant());
    const FtleReport rep = volume_growth_along(base, 2, {1.0}, cfg);
    CHECK(rep.v.back()[1] == doctest::Approx(oracle_v2).epsilon(1e-6).scale(1.0));
    // Lambda_1 over all of R^6 against the dense top singular value
    FtleOptions o;
    o.k_probe = 6;
    const FtleReport top = ftle_top_along(base, {1.0}, cfg, o);
    const double s1 = Eigen::JacobiSVD<Eigen::MatrixXd>(jac).singularValues()(0);
    CHECK(top.lambda.back()[0] == doctest::Approx(std::log(s1)).epsilon(1e-6).scale(1.0));
    // and the top-2 singular values bound V_2 from above
    const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(jac).singularValues();
    CHECK(rep.v.back()[1] <= std::log(sv(0) * sv(1)) + 1e-9);
  }

  TEST_CASE("finite differences of the nonlinear flow agree with the tangent map") {
    const auto d = paper_domain(16);
    SolverConfig cfg;
    cfg.alpha = 2.0;
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0, 4.0), cfg.dt, 0.0, 1.0, 13);
    const SpectralField u0 = smooth_field(d, 1.0, 0.4);
    const TrajectoryRecord base = integrate(u0, p, 0.0, 1.0, cfg);
    const SpectralField end = base.final_state();
    const double h = 1e-5;
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    const FtleReport top = ftle_top_along(base, {1.0}, cfg);
    double best_fd = -1e300;
    for (int trial = 0; trial < 16; ++trial) {
      std::vector<double> w(16);
      for (double& x : w) x = gauss(rng);
      SpectralField wf(d, w);
      wf *= 1.0 / h_norm(wf);
      const double fd = std::log(h_norm(integrate_final(u0 + h * wf, p, 0.0, 1.0, cfg) - end) / h);
      const TangentFrame f = propagate_frame(TangentFrame::from_vectors(d, {w}), base, 0.0, 1.0, cfg);
      CHECK(f.log_r[0] == doctest::Approx(fd).epsilon(5e-3).scale(1.0));
      best_fd = std::max(best_fd, fd);
    }
    // the top exponent dominates every direction
    CHECK(top.lambda.back()[0] >= best_fd - 5e-3);
  }

  TEST_CASE("report bookkeeping and csv") {
    const auto d = paper_domain(8);
    SolverConfig cfg;
    cfg.alpha = 2.0;
    const NoisePath p = sample_path(CovarianceSpec::power_law(*d, 1.0), cfg.dt, 0.0, 0.5, 2);
    FtleOptions o;
    o.base_tag = "attractor";
    const FtleReport rep = volume_growth(p, smooth_field(d, 1.0, 0.0), 2, grid(0.1, 0.5), cfg, o);
    CHECK(rep.times.size() == 5);
    CHECK(rep.base_tag == "attractor");
    CHECK(rep.max_volume_violation(1) <= 0.0);
    std::stringstream ss;
    write_ftle_csv(rep, ss, "chafee test");
    std::string line;
    std::getline(ss, line);
    CHECK(line == "# chafee test");
    std::getline(ss, line);
    CHECK(line.rfind("# base=attractor", 0) == 0);
    std::getline(ss, line);
    CHECK(line == "t,k,lambda_k,v_k,bound_k");
    int rows = 0;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == 10);
  }
}

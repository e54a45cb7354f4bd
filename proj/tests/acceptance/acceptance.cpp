// Acceptance checks at desk scale. Usage: acceptance <criterion 1..9>.
// Prints one PASS/FAIL line and exits 0 on pass, 1 on fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "chafee/attractor.hpp"
#include "chafee/exterior.hpp"
#include "chafee/experiment.hpp"
#include "chafee/lyapunov.hpp"
#include "chafee/special.hpp"

using namespace chafee;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// L = 2 pi, lambda_k = k^2, N = 64, dt = 1e-3: the library defaults.
ExperimentConfig desk_config() {
  ExperimentConfig cfg;
  cfg.output.csv = false;
  return cfg;
}

// Upper bounds on Lambda_1 for alpha = lambda_1 -+ 1, with the dt/2 study.
Outcome upper_lambda() {
  Outcome o{true, ""};
  for (double alpha : {0.0, 2.0}) {
    ExperimentConfig cfg = desk_config();
    cfg.solver.alpha = alpha;
    cfg.dt_refine = true;
    const UpperBoundsResult r = run_upper_bounds(cfg);
    const double tol = cfg.analysis.tol_disc;
    const double v = r.violation(0, false), vf = r.violation(0, true);
    // nothing to shrink when there is no violation at dt
    const bool shrinks = v == 0.0 || vf * 1.5 <= v;
    const bool ok = r.succeeded == cfg.noise.ensemble_size && r.worst_lambda1 <= tol && shrinks;
    o.pass = o.pass && ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt("alpha=%g paths=%d/%d max(L1-(a-l1))=%.4g at dt, %.4g at dt/2", alpha,
                    r.succeeded, r.ensemble_size, r.worst_lambda1, r.worst_lambda1_fine);
  }
  return o;
}

// Upper bounds on V_1..V_3.
Outcome upper_volume() {
  Outcome o{true, ""};
  for (double alpha : {0.0, 2.0}) {
    ExperimentConfig cfg = desk_config();
    cfg.solver.alpha = alpha;
    cfg.analysis.k_max = 3;
    const UpperBoundsResult r = run_upper_bounds(cfg);
    bool ok = r.succeeded == cfg.noise.ensemble_size;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt("alpha=%g paths=%d/%d", alpha, r.succeeded, r.ensemble_size);
    for (int k = 1; k <= 3; ++k) {
      const double m = r.worst_volume[static_cast<std::size_t>(k - 1)];
      ok = ok && m <= k * cfg.analysis.tol_disc;
      o.detail += fmt(" V%d margin=%.4g", k, m);
    }
    o.pass = o.pass && ok;
  }
  return o;
}

// Lower bound on smallness events, grade k at alpha.
Outcome lower_event(int k, double alpha, long max_trials, int events) {
  ExperimentConfig cfg = desk_config();
  cfg.solver.alpha = alpha;
  cfg.analysis.T = 1.0;
  cfg.analysis.k_max = k;
  cfg.analysis.event_k = k;
  cfg.analysis.max_trials = max_trials;
  cfg.analysis.events = events;
  const LowerBoundResult r = run_lower_bound_event(cfg);
  int good = 0;
  for (const EventCheck& e : r.events) {
    if (e.bound_ok && e.certificate.min_residual >= -cfg.analysis.residual_tol) ++good;
  }
  const double frac = r.events.empty() ? 0.0 : static_cast<double>(good) / r.events.size();
  Outcome o;
  o.pass = !r.events.empty() && frac >= 0.9;
  o.detail = fmt("k=%d alpha=%g eps=%g events=%zu in %ld trials (%ld unsynchronized)", k, alpha,
                 r.epsilon.epsilon_v, r.events.size(), r.trials_used, r.unsynchronized);
  if (r.events.empty()) {
    o.detail += fmt(" smallest sup|a|_V=%.4g", r.smallest_sup);
  } else {
    o.detail += fmt(" bound ok=%d certified=%d good fraction=%.3g", r.bound_ok_count,
                    r.certified_count, frac);
    double worst_margin = r.events[0].min_margin_floored, worst_res = r.events[0].certificate.min_residual;
    for (const EventCheck& e : r.events) {
      worst_margin = std::min(worst_margin, e.min_margin_floored);
      worst_res = std::min(worst_res, e.certificate.min_residual);
    }
    o.detail += fmt(" min margin=%.4g min residual=%.4g", worst_margin, worst_res);
  }
  return o;
}

// Linear case: the tangent flow is the heat semigroup shifted by alpha.
Outcome linear_exactness() {
  ExperimentConfig cfg = desk_config();
  cfg.solver.alpha = 2.5;
  cfg.solver.linear = true;
  const auto d = make_domain(cfg);
  const NoisePath p = sample_path(make_covariance(cfg, *d), cfg.solver.dt, 0.0, 5.0, 7);
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(0.05 * i);
  SpectralField u0(d);
  u0.coeff(1) = 0.5;
  const int k = 3;
  const FtleReport vr = volume_growth(p, u0, k, grid, cfg.solver);
  const FtleReport tr = ftle_top(p, u0, grid, cfg.solver);
  double err = 0.0;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    double sum = 0.0;
    for (int i = 1; i <= k; ++i) {
      const double exact = cfg.solver.alpha - d->eigenvalue(i);
      sum += exact;
      err = std::max(err, std::abs(vr.lambda[t][i - 1] - exact));
      err = std::max(err, std::abs(vr.v[t][i - 1] - sum));
    }
    err = std::max(err, std::abs(tr.lambda[t][0] - (cfg.solver.alpha - d->eigenvalue(1))));
  }
  return {err <= 1e-8, fmt("max deviation from the semigroup values %.3g over %zu times", err, grid.size())};
}

// Envelope on smallness events below the first eigenvalue.
Outcome envelope() {
  ExperimentConfig cfg = desk_config();
  cfg.solver.alpha = 0.5;
  cfg.analysis.T = 1.0;
  cfg.analysis.epsilon = 1.0;
  cfg.analysis.events = 20;
  cfg.analysis.max_trials = 2000;
  const EnvelopeStudyResult r = run_envelope_study(cfg);
  const double frac = r.events.empty() ? 0.0 : static_cast<double>(r.holds_count) / r.events.size();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : r.events) worst = std::max(worst, e.report.max_residual);
  return {!r.events.empty() && frac >= 0.95,
          fmt("eps=%g R=%g l=%.4g events=%zu in %ld trials, within envelope %d (%.3g), worst residual %.3g",
              r.epsilon, r.cutoff_radius, r.lipschitz, r.events.size(), r.trials_used, r.holds_count,
              frac, worst)};
}

// 2-volume |det(A|_E)| of an orthonormalized 2-frame.
double frame_volume(const Eigen::MatrixXd& a, const Eigen::MatrixXd& f) {
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(f).householderQ() *
                            Eigen::MatrixXd::Identity(f.rows(), f.cols());
  const Eigen::MatrixXd m = a * q;
  return std::sqrt(std::max(0.0, (m.transpose() * m).determinant()));
}

Outcome wedge_oracle() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  auto gaussian = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
  };
  bool bounded = true;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = gaussian(6, 6);
    const double w = wedge_norm_of_operator(a, 2);
    // random search: 5000 uniform frames, then 5000 shrinking perturbations
    // of the best frame so far
    double best = 0.0;
    Eigen::MatrixXd best_f = gaussian(6, 2);
    double step = 0.3;
    for (int i = 0; i < 10000; ++i) {
      const Eigen::MatrixXd f = i < 5000 ? gaussian(6, 2) : Eigen::MatrixXd(best_f + step * gaussian(6, 2));
      const double v = frame_volume(a, f);
      bounded = bounded && v <= w * (1.0 + 1e-12);
      if (v > best) {
        best = v;
        best_f = f;
      }
      if (i >= 5000 && (i - 5000) % 500 == 499) step *= 0.6;
    }
    worst_gap = std::max(worst_gap, 1.0 - best / w);
  }
  double worst_eig = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd gm = gaussian(6, 6);
    const Eigen::MatrixXd b = -gm * gm.transpose();
    for (int k = 1; k <= 5; ++k) {
      const Eigen::MatrixXd bk = b_hat_k(b, k);
      const Eigen::MatrixXd sym = 0.5 * (bk + bk.transpose());
      worst_eig = std::max(worst_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().maxCoeff());
    }
  }
  return {bounded && worst_gap <= 1e-2 && worst_eig <= 1e-10,
          fmt("frames bounded=%s worst relative gap of best frame %.3g, max eigenvalue of B^(k) %.3g",
              bounded ? "yes" : "no", worst_gap, worst_eig)};
}

Outcome synchronization() {
  auto run = [](double amplitude) {
    ExperimentConfig cfg = desk_config();
    cfg.solver.alpha = 2.0;
    cfg.noise.amplitude = amplitude;
    cfg.analysis.T = 1.0;
    return run_attractor(cfg);
  };
  const AttractorResult r = run(9.0);
  int within = 0;
  for (const auto& p : r.paths) {
    if (p.synchronized && p.gap < 1e-9 && p.depth <= 40.0) ++within;
  }
  const AttractorResult weak = run(1.0);
  return {within >= 99, fmt("amplitude 9: %d/%d synchronized by depth 40 (amplitude 1: %d/%d)", within,
                            r.ensemble_size, weak.synchronized, weak.ensemble_size)};
}

Outcome special_functions() {
  const double e1 = std::abs(mittag_leffler(1.0, 1.0) - std::numbers::e);
  double erf_err = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const double z = 0.01 * i;
    const double oracle = std::exp(z * z) * (1.0 + std::erf(z));
    erf_err = std::max(erf_err, std::abs(mittag_leffler(z, 0.5) - oracle) / oracle);
  }
  // int_0^1 (1-z)^{n/2-1} z^{-1/2} dz = B(n/2, 1/2) = Gamma(n/2) Gamma(1/2) / Gamma((n+1)/2);
  // the integral is 2 int_0^{pi/2} cos^{n-1}(phi) dphi by Simpson's rule
  double beta_err = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const int m = 20000;
    const double h = 0.5 * std::numbers::pi / m;
    double s = 1.0 + std::pow(std::cos(0.5 * std::numbers::pi), n - 1);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * std::pow(std::cos(i * h), n - 1);
    const double quad = 2.0 * s * h / 3.0;
    const double gammas = std::tgamma(0.5 * n) * std::tgamma(0.5) / std::tgamma(0.5 * (n + 1));
    const double b = beta_function(0.5 * n, 0.5);
    beta_err = std::max({beta_err, std::abs(b - quad) / quad, std::abs(b - gammas) / gammas});
  }
  return {e1 <= 1e-12 && erf_err <= 1e-8 && beta_err <= 1e-8,
          fmt("|E_1(1)-e|=%.3g, erf identity rel err %.3g, Beta identity rel err %.3g", e1, erf_err,
              beta_err)};
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::function<Outcome()> checks[] = {
      upper_lambda,
      upper_volume,
      [] { return lower_event(1, 1.5, 10000, 2); },
      // bounded budget: no trial synchronizes at this alpha (see README)
      [] { return lower_event(2, 4.5, 1000, 2); },
      linear_exactness,
      envelope,
      wedge_oracle,
      synchronization,
      special_functions,
  };
  if (n < 1 || n > 9) {
    std::fprintf(stderr, "usage: acceptance <1..9>\n");
    return 2;
  }
  Outcome o;
  try {
    o = checks[n - 1]();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  std::printf("criterion %d %s: %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  return o.pass ? 0 : 1;
}

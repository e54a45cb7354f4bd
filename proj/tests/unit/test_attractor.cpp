#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chafee/attractor.hpp"
#include "chafee/errors.hpp"
#include "chafee/special.hpp"

using namespace chafee;

namespace {

std::shared_ptr<const Domain> paper_domain(int n) {
  return Domain::make({2.0 * std::numbers::pi, n, BasisConvention::PaperTwoPi});
}

}  // namespace

TEST_SUITE("attractor") {
  TEST_CASE("initial ensemble") {
    const auto d = paper_domain(8);
    const auto ics = pullback_initial_conditions(*d, 5.0);
    REQUIRE(ics.size() == 5);
    CHECK(ensemble_diameter(ics) == doctest::Approx(2.0 * 5.0 * std::sqrt(2.0)));
    CHECK(pullback_initial_conditions(*paper_domain(1), 5.0).size() == 3);
  }

  TEST_CASE("without noise below the first eigenvalue the attractor is zero") {
    const auto d = paper_domain(16);
    SolverConfig cfg;
    cfg.alpha = 0.0;
    const NoisePath p = sample_path(CovarianceSpec::zero(*d), cfg.dt, -40.0, 0.0, 1);
    const AttractorEstimate a = pullback_attractor(p, d, cfg);
    CHECK(a.synchronized);
    CHECK(h_norm(a.a) < 1e-9);
  }

  TEST_CASE("pullback distance shrinks with depth") {
    const auto d = paper_domain(16);
    SolverConfig cfg;
    cfg.alpha = 2.0;
    const auto cov = CovarianceSpec::power_law(*d, 1.0, 9.0);
    const NoisePath p = sample_path(cov, cfg.dt, -20.0, 0.0, 3);
    SpectralField a = 5.0 * SpectralField::unit(d, 1);
    SpectralField b = -5.0 * SpectralField::unit(d, 1) + 5.0 * SpectralField::unit(d, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {2.5, 5.0, 10.0, 20.0}) {
      const double dist = h_norm(integrate_final(a, p, -s, 0.0, cfg) - integrate_final(b, p, -s, 0.0, cfg));
      CHECK(dist < prev);
      prev = dist;
    }
  }

  TEST_CASE("equivariance of the pullback estimate") {
    const auto d = paper_domain(16);
    SolverConfig cfg;
    cfg.alpha = 0.5;
    const auto cov = CovarianceSpec::power_law(*d, 1.0, 4.0);
    PullbackOptions o;
    const NoisePath p = sample_path(cov, cfg.dt, -o.max_depth, 1.0, 17);
    const AttractorEstimate here = pullback_attractor(p, d, cfg, o);
    const AttractorEstimate there = pullback_attractor(wiener_shift(p, 1.0), d, cfg, o);
    REQUIRE(here.synchronized);
    REQUIRE(there.synchronized);
    const SpectralField moved = integrate_final(here.a, p, 0.0, 1.0, cfg);
    CHECK(h_norm(moved - there.a) < 10.0 * o.tol);
  }

  TEST_CASE("degenerate zero event") {
    const auto d = paper_domain(8);
    SolverConfig cfg;
    cfg.alpha = 0.0;
    EventOptions o;
    o.epsilon = 0.1;
    o.horizon = 0.5;
    o.max_trials = 5;
    const EventSample s = sample_smallness_event(CovarianceSpec::zero(*d), d, cfg, o);
    CHECK(s.degenerate_zero);
    CHECK_FALSE(s.accepted);
    CHECK(s.trial_index == 0);
  }

  TEST_CASE("event sampling: monotone in epsilon, deterministic, replayable") {
    const auto d = paper_domain(16);
    SolverConfig cfg;
    cfg.alpha = 0.5;
    const auto cov = CovarianceSpec::power_law(*d, 1.0);
    EventOptions o;
    o.horizon = 1.0;
    o.seed = 2;
    o.workers = 4;
    const auto outcomes = survey_trials(cov, d, cfg, o, 200);
    REQUIRE(outcomes.size() == 200);
    std::vector<double> sups;
    for (const auto& t : outcomes) {
      if (t.synchronized && !t.blew_up) sups.push_back(t.sup_v);
    }
    std::sort(sups.begin(), sups.end());
    const double eps = sups[sups.size() / 4];
    auto hits = [&](double e) {
      return std::count_if(outcomes.begin(), outcomes.end(), [&](const TrialOutcome& t) {
        return t.synchronized && !t.blew_up && t.sup_v < e;
      });
    };
    CHECK(hits(eps) <= hits(2 * eps));
    CHECK(hits(2 * eps) > hits(eps / 2));

    o.epsilon = eps;
    const EventSample s4 = sample_smallness_event(cov, d, cfg, o);
    o.workers = 1;
    const EventSample s1 = sample_smallness_event(cov, d, cfg, o);
    REQUIRE(s4.accepted);
    CHECK(s1.trial_index == s4.trial_index);
    CHECK(s1.sup_v == s4.sup_v);
    CHECK(s4.sup_v < eps);
    // lowest accepted index agrees with the survey
    const auto first = std::find_if(outcomes.begin(), outcomes.end(), [&](const TrialOutcome& t) {
      return t.synchronized && !t.blew_up && t.sup_v < eps;
    });
    CHECK(first->index == s4.trial_index);
    const EventSample replay = replay_trial(cov, d, cfg, o, s4.trial_index);
    CHECK(replay.sup_v == s4.sup_v);
    CHECK(replay.orbit->final_state() == s4.orbit->final_state());

    o.first_trial = s4.trial_index + 1;
    const EventSample next = sample_smallness_event(cov, d, cfg, o);
    CHECK(next.trial_index > s4.trial_index);
  }

  TEST_CASE("rejection exhaustion reports the smallest sup norm") {
    const auto d = paper_domain(8);
    SolverConfig cfg;
    cfg.alpha = 0.5;
    EventOptions o;
    o.epsilon = 1e-9;
    o.horizon = 0.5;
    o.max_trials = 4;
    try {
      sample_smallness_event(CovarianceSpec::power_law(*d, 1.0), d, cfg, o);
      FAIL("expected exhaustion");
    } catch (const RejectionExhaustedError& e) {
      CHECK(e.trials() == 4);
      CHECK(e.smallest_sup_norm() > 1e-9);
      CHECK(std::isfinite(e.smallest_sup_norm()));
    }
  }

  TEST_CASE("envelope check boundary cases") {
    const std::vector<double> t{0.0, 0.5, 1.0};
    const EnvelopeReport zero = gronwall_envelope_check(t, {0.0, 0.0, 0.0}, 0.0, 1.0, 0.5);
    CHECK(zero.applicable);
    CHECK(zero.holds());
    const EnvelopeReport na = gronwall_envelope_check(t, {0.0, 0.0, 0.0}, 0.0, 1.0, -0.5);
    CHECK_FALSE(na.applicable);
  }

  TEST_CASE("envelope in the linear case") {
    const auto d = paper_domain(16);
    SolverConfig cfg;
    cfg.alpha = 0.5;
    cfg.cutoff_radius = 1e-30;  // F vanishes on every state met here
    const auto cov = CovarianceSpec::power_law(*d, 1.0, 0.01);
    const NoisePath p = sample_path(cov, cfg.dt, 0.0, 1.0, 4);
    SpectralField u0(d);
    u0.coeff(1) = 0.2;
    const RandomPdeRun run = integrate_random_pde(u0, p, 1.0, cfg, 10);
    for (std::size_t i = 0; i < run.times.size(); ++i) {
      CHECK(run.ut_v_norms[i] == doctest::Approx(std::exp(-0.5 * run.times[i]) * 0.2).epsilon(1e-12));
    }
    const EnvelopeReport r = gronwall_envelope_check(run.times, run.ut_v_norms, run.eta, 1.0, 0.5);
    CHECK(r.holds());
    for (std::size_t i = 1; i < r.times.size(); ++i) CHECK(r.norms[i] < r.envelope[i]);
  }

  TEST_CASE("envelope on a small nonlinear run") {
    const auto d = paper_domain(16);
    SolverConfig cfg;
    cfg.alpha = 0.5;
    cfg.cutoff_radius = 1.0;
    const auto cov = CovarianceSpec::power_law(*d, 1.0, 0.01);
    const NoisePath p = sample_path(cov, cfg.dt, 0.0, 1.0, 5);
    SpectralField u0(d);
    u0.coeff(1) = 0.3;
    u0.coeff(2) = -0.1;
    const double l = estimate_lipschitz(d, 1.0, 500, 3);
    CHECK(l > 0.0);
    const RandomPdeRun run = integrate_random_pde(u0, p, 1.0, cfg, 10);
    CHECK(run.eta < 0.2);
    const EnvelopeReport r = gronwall_envelope_check(run.times, run.ut_v_norms, run.eta, l, 0.5);
    CHECK(r.holds());
    CHECK(r.max_residual <= 0.0);
  }
}

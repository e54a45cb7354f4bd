#include "chafee/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chafee/errors.hpp"
#include "chafee/parallel.hpp"
#include "chafee/special.hpp"

namespace chafee {

std::vector<std::vector<double>> pullback_initial_conditions(const Domain& domain, double spread) {
  const auto n = static_cast<std::size_t>(domain.modes());
  std::vector<std::vector<double>> ics;
  ics.emplace_back(n, 0.0);
  // Members come in +- pairs so that the ensemble mean of an odd flow with
  // zero noise is exactly zero.
  auto add_pair = [&](double c1, double c2) {
    std::vector<double> u(n, 0.0);
    u[0] = c1;
    if (n > 1) u[1] = c2;
    ics.push_back(u);
    for (double& x : u) x = -x;
    ics.push_back(u);
  };
  if (n == 1) {
    add_pair(spread, 0.0);
  } else {
    add_pair(spread, spread);
    add_pair(spread, -spread);
  }
  return ics;
}

double ensemble_diameter(const std::vector<std::vector<double>>& members) {
  double d = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < members[i].size(); ++k) {
        const double x = members[i][k] - members[j][k];
        s += x * x;
      }
      d = std::max(d, std::sqrt(s));
    }
  }
  return d;
}

namespace {

double ensemble_v_diameter(const std::vector<std::vector<double>>& members, const Domain& domain) {
  double d = 0.0;
  std::vector<double> diff(members.front().size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = members[i][k] - members[j][k];
      d = std::max(d, v_norm(diff, domain));
    }
  }
  return d;
}

}  // namespace

AttractorEstimate pullback_attractor(const NoisePath& path, std::shared_ptr<const Domain> domain,
                                     const SolverConfig& cfg, const PullbackOptions& opts) {
  if (!(opts.initial_depth > 0.0) || !(opts.max_depth >= opts.initial_depth)) {
    throw ConfigError("pullback depths must satisfy 0 < S_0 <= S_max");
  }
  if (!(opts.tol > 0.0)) throw ConfigError("pullback tolerance must be positive");
  Integrator it(domain, cfg);
  const auto ics = pullback_initial_conditions(*domain, opts.spread);
  AttractorEstimate est{SpectralField(domain), 0.0, 0.0, 0.0, false, {}, {}};
  double depth = opts.initial_depth;
  for (;;) {
    const double s = std::min(depth, opts.max_depth);
    const auto steps = static_cast<std::int64_t>(std::llround(s / cfg.dt));
    if (!path.contains(-steps) || !path.contains(-1)) {
      throw std::out_of_range("noise path does not cover the pullback window [-S, 0]");
    }
    const auto members = integrate_ensemble_final(it, ics, path, -steps, 0);
    est.depth = static_cast<double>(steps) * cfg.dt;
    est.gap = ensemble_diameter(members);
    est.depths.push_back(est.depth);
    est.gaps.push_back(est.gap);
    std::vector<double> mean(members.front().size(), 0.0);
    for (const auto& m : members) {
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += m[k];
    }
    for (double& x : mean) x /= static_cast<double>(members.size());
    est.a = SpectralField(domain, std::move(mean));
    est.v_gap = ensemble_v_diameter(members, *domain);
    if (est.gap < opts.tol) {
      est.synchronized = true;
      return est;
    }
    if (s >= opts.max_depth) return est;
    depth *= 2.0;
  }
}

// ---------------------------------------------------------------------------

NoisePath trial_path(const CovarianceSpec& cov, const SolverConfig& cfg, const EventOptions& opts,
                     long index) {
  return sample_path(cov, cfg.dt, -opts.pullback.max_depth, opts.horizon,
                     derive_seed(opts.seed, static_cast<std::uint64_t>(index)));
}

namespace {

void check_event_options(const EventOptions& opts) {
  if (!(opts.epsilon > 0.0)) throw ConfigError("event epsilon must be positive");
  if (!(opts.horizon > 0.0)) throw ConfigError("event horizon must be positive");
  if (opts.max_trials < 1) throw ConfigError("event max_trials must be >= 1");
}

struct TrialData {
  TrialOutcome outcome;
  std::optional<NoisePath> path;
  std::optional<AttractorEstimate> attractor;
  std::optional<TrajectoryRecord> orbit;
};

TrialData run_trial(const CovarianceSpec& cov, const std::shared_ptr<const Domain>& domain,
                    const SolverConfig& cfg, const EventOptions& opts, long index, bool keep) {
  TrialData d;
  d.outcome.index = index;
  d.outcome.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(index));
  NoisePath path = trial_path(cov, cfg, opts, index);
  try {
    AttractorEstimate est = pullback_attractor(path, domain, cfg, opts.pullback);
    d.outcome.synchronized = est.synchronized;
    d.outcome.depth = est.depth;
    if (est.synchronized) {
      TrajectoryRecord orbit = integrate(est.a, path, 0.0, opts.horizon, cfg, 1);
      d.outcome.sup_v = *std::max_element(orbit.v_norms.begin(), orbit.v_norms.end());
      d.outcome.inf_v = *std::min_element(orbit.v_norms.begin(), orbit.v_norms.end());
      if (keep) d.orbit = std::move(orbit);
    }
    if (keep) d.attractor = std::move(est);
  } catch (const BlowUpError&) {
    d.outcome.blew_up = true;
  }
  if (keep) d.path = std::move(path);
  return d;
}

bool qualifies(const TrialOutcome& o, double epsilon) {
  return o.synchronized && !o.blew_up && o.sup_v < epsilon;
}

}  // namespace

TrialOutcome evaluate_trial(const CovarianceSpec& cov, std::shared_ptr<const Domain> domain,
                            const SolverConfig& cfg, const EventOptions& opts, long index) {
  return run_trial(cov, domain, cfg, opts, index, false).outcome;
}

std::vector<TrialOutcome> survey_trials(const CovarianceSpec& cov,
                                        std::shared_ptr<const Domain> domain,
                                        const SolverConfig& cfg, const EventOptions& opts,
                                        long count) {
  std::vector<TrialOutcome> out(static_cast<std::size_t>(std::max(0L, count)));
  parallel_for(0, count, opts.workers, [&](long i) {
    out[static_cast<std::size_t>(i)] = run_trial(cov, domain, cfg, opts, i, false).outcome;
  });
  return out;
}

EventSample replay_trial(const CovarianceSpec& cov, std::shared_ptr<const Domain> domain,
                         const SolverConfig& cfg, const EventOptions& opts, long index) {
  TrialData d = run_trial(cov, domain, cfg, opts, index, true);
  EventSample s;
  s.trial_index = index;
  s.trial_seed = d.outcome.seed;
  s.trials_used = index + 1;
  s.epsilon = opts.epsilon;
  s.horizon = opts.horizon;
  s.sup_v = d.outcome.sup_v;
  s.accepted = qualifies(d.outcome, opts.epsilon) && d.outcome.inf_v > 0.0;
  s.degenerate_zero = qualifies(d.outcome, opts.epsilon) && d.outcome.inf_v == 0.0;
  s.path = std::move(d.path);
  s.attractor = std::move(d.attractor);
  s.orbit = std::move(d.orbit);
  return s;
}

EventSample sample_smallness_event(const CovarianceSpec& cov, std::shared_ptr<const Domain> domain,
                                   const SolverConfig& cfg, const EventOptions& opts) {
  check_event_options(opts);
  const long batch = std::max(1, opts.workers);
  double smallest = std::numeric_limits<double>::infinity();
  long unsynchronized = 0;
  const long stop = opts.first_trial + opts.max_trials;
  for (long begin = opts.first_trial; begin < stop; begin += batch) {
    const long end = std::min(stop, begin + batch);
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(end - begin));
    parallel_for(begin, end, opts.workers, [&](long i) {
      outcomes[static_cast<std::size_t>(i - begin)] = run_trial(cov, domain, cfg, opts, i, false).outcome;
    });
    for (const TrialOutcome& o : outcomes) {
      if (!o.synchronized || o.blew_up) {
        ++unsynchronized;
        continue;
      }
      smallest = std::min(smallest, o.sup_v);
      if (qualifies(o, opts.epsilon)) {
        EventSample s = replay_trial(cov, domain, cfg, opts, o.index);
        s.unsynchronized = unsynchronized;
        s.trials_used = o.index - opts.first_trial + 1;
        return s;
      }
    }
  }
  throw RejectionExhaustedError("no smallness event in " + std::to_string(opts.max_trials) +
                                    " trials; smallest sup |a|_V = " + std::to_string(smallest),
                                smallest, opts.max_trials, unsynchronized);
}

// ---------------------------------------------------------------------------

RandomPdeRun integrate_random_pde(const SpectralField& u0, const NoisePath& path, double horizon,
                                  const SolverConfig& cfg, int record_every) {
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  const Domain& d = u0.domain();
  Integrator it(u0.domain_ptr(), cfg);
  const std::int64_t steps = path.step_of(horizon);
  if (steps > 0 && !path.contains(steps - 1)) {
    throw std::out_of_range("noise path does not cover [0, T]");
  }
  const int n = d.modes();
  std::vector<double> zdecay(n), zscale(n);
  for (int k = 1; k <= n; ++k) {
    const double a = cfg.alpha - d.eigenvalue(k);
    zdecay[k - 1] = std::exp(a * cfg.dt);
    zscale[k - 1] = ou_increment_scale(a, cfg.dt, cfg.ou_variant);
  }
  std::vector<double> ut(u0.values()), next(n), z(n, 0.0);
  RandomPdeRun run;
  auto push = [&](std::int64_t i) {
    run.times.push_back(static_cast<double>(i) * cfg.dt);
    run.ut_v_norms.push_back(v_norm(ut, d));
    run.z_v_norms.push_back(v_norm(z, d));
  };
  push(0);
  for (std::int64_t i = 0; i < steps; ++i) {
    it.step_random_pde(ut, z, next, static_cast<double>(i) * cfg.dt);
    ut.swap(next);
    const auto dw = path.increment(i);
    for (int k = 0; k < n; ++k) z[k] = zdecay[k] * (z[k] + zscale[k] * dw[k]);
    run.eta = std::max(run.eta, v_norm(z, d));
    if ((i + 1) % record_every == 0 || i + 1 == steps) push(i + 1);
  }
  return run;
}

double estimate_lipschitz(std::shared_ptr<const Domain> domain, double radius, int samples,
                          std::uint64_t seed) {
  if (!(radius > 0.0)) throw ConfigError("Lipschitz estimate needs a positive cut-off radius");
  SolverConfig cfg;
  cfg.cutoff_radius = radius;
  Integrator it(domain, cfg);
  const int n = domain->modes();
  std::vector<double> u1(n), u2(n), f1(n), f2(n), diff(n);
  double best = 0.0;
  auto random_field = [&](std::vector<double>& u, long sample, int stream, double r) {
    // spectral decay between lambda^-1/2 and lambda^-3/2, then scaled to V-norm r
    const double p = 0.5 + 0.5 * (sample % 3);
    for (int k = 1; k <= n; ++k) {
      u[k - 1] = counter_normal(seed + stream, k, sample) * std::pow(domain->eigenvalue(k), -p);
    }
    const double vn = v_norm(u, *domain);
    if (vn > 0.0) {
      for (double& x : u) x *= r / vn;
    }
  };
  for (long s = 0; s < samples; ++s) {
    const double u_frac = 0.5 * (1.0 + std::cos(static_cast<double>(s) * 0.7));
    random_field(u1, s, 1, 2.0 * radius * u_frac);
    if (s % 2 == 0) {
      random_field(u2, s, 2, 2.0 * radius * (1.0 - 0.5 * u_frac));
    } else {
      random_field(diff, s, 3, 1e-4 * radius);
      for (int k = 0; k < n; ++k) u2[k] = u1[k] + diff[k];
    }
    it.nonlinearity(u1, f1);
    it.nonlinearity(u2, f2);
    for (int k = 0; k < n; ++k) {
      diff[k] = u1[k] - u2[k];
      f1[k] -= f2[k];
    }
    const double den = v_norm(diff, *domain);
    if (den > 0.0) best = std::max(best, h_norm(f1) / den);
  }
  return best;
}

EnvelopeReport gronwall_envelope_check(const std::vector<double>& times,
                                       const std::vector<double>& ut_v_norms, double eta,
                                       double lipschitz, double mu) {
  EnvelopeReport r;
  r.mu = mu;
  r.eta = eta;
  r.lipschitz = lipschitz;
  r.times = times;
  r.norms = ut_v_norms;
  if (times.size() != ut_v_norms.size() || times.empty()) {
    throw std::invalid_argument("gronwall_envelope_check: size mismatch");
  }
  r.u0_norm = ut_v_norms.front();
  if (!(mu > 0.0)) {
    r.applicable = false;
    r.reason = "mu = lambda_1 - alpha <= 0: the estimate is vacuous";
    return r;
  }
  r.applicable = true;
  r.envelope = h1_envelope(r.u0_norm, eta, lipschitz, mu, times);
  r.max_residual = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < times.size(); ++i) {
    r.max_residual = std::max(r.max_residual, ut_v_norms[i] - r.envelope[i]);
  }
  return r;
}

}  // namespace chafee

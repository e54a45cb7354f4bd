#include "chafee/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "chafee/errors.hpp"
#include "chafee/exterior.hpp"
#include "chafee/parallel.hpp"
#include "chafee/simd/kernels.hpp"
#include "chafee/special.hpp"

namespace chafee {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string report_header(const ExperimentConfig& cfg) {
  return std::string(kVersion) + " config=" + config_hash(cfg);
}

namespace {

// ---------------------------------------------------------------------------
// Output helpers

class Writer {
 public:
  Writer(const ExperimentConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {
    if (enabled()) {
      fs::create_directories(dir_);
      std::ofstream(dir_ / "config.txt") << "# " << report_header(cfg_) << '\n'
                                         << canonical_text(cfg_);
    }
  }

  bool enabled() const { return !dir_.empty(); }
  const fs::path& dir() const { return dir_; }

  std::ofstream open(const fs::path& rel, bool binary = false) const {
    const fs::path p = dir_ / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  }

  void json(const fs::path& rel, Json j) const {
    Json out;
    out["config_hash"] = config_hash(cfg_);
    out["version"] = std::string(kVersion);
    for (auto& [k, v] : j.items()) out[k] = v;
    open(rel) << out.dump(2) << '\n';
  }

  void path(const fs::path& stem, const NoisePath& p) const {
    if (cfg_.output.csv) {
      auto f = open(stem.string() + ".csv");
      write_path_csv(p, f, report_header(cfg_));
    }
    if (cfg_.output.binary) {
      auto f = open(stem.string() + ".bin", true);
      write_path_binary(p, f, report_header(cfg_));
    }
  }

  void trajectory(const fs::path& stem, const TrajectoryRecord& r) const {
    if (cfg_.output.csv) {
      auto f = open(stem.string() + ".csv");
      write_trajectory_csv(r, f, report_header(cfg_));
    }
    if (cfg_.output.binary) {
      auto f = open(stem.string() + ".bin", true);
      write_trajectory_binary(r, f, report_header(cfg_));
    }
  }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string index_name(const char* prefix, long i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%04ld", prefix, i);
  return buf;
}

// Json cannot hold inf/nan; those become null.
Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::vector<double> time_grid(double step, double horizon, double dt) {
  std::vector<double> g;
  const auto per = static_cast<long>(std::llround(step / dt));
  const auto total = static_cast<long>(std::llround(horizon / dt));
  for (long i = per; i <= total; i += per) g.push_back(static_cast<double>(i) * dt);
  if (g.empty() || std::abs(g.back() - horizon) > 1e-9 * horizon) g.push_back(horizon);
  return g;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

EventOptions event_options(const ExperimentConfig& cfg, double epsilon) {
  EventOptions o;
  o.epsilon = epsilon;
  o.horizon = cfg.analysis.T;
  o.max_trials = cfg.analysis.max_trials;
  o.seed = cfg.noise.seed;
  o.workers = cfg.workers;
  o.pullback = cfg.pullback;
  return o;
}

FtleOptions ftle_options(const ExperimentConfig& cfg, const std::string& tag) {
  FtleOptions o;
  o.k_probe = cfg.analysis.k_probe;
  o.reorth_every = cfg.analysis.reorth_every;
  o.base_tag = tag;
  return o;
}

struct EventBatch {
  std::vector<EventSample> samples;
  long trials_used = 0;
  long unsynchronized = 0;
  bool exhausted = false;
  bool degenerate_zero = false;
  double smallest_sup = std::numeric_limits<double>::infinity();
};

// Collect up to `wanted` accepted events from consecutive trials.
EventBatch collect_events(const ExperimentConfig& cfg, const CovarianceSpec& cov,
                          const std::shared_ptr<const Domain>& domain, double epsilon, int wanted) {
  EventBatch b;
  EventOptions o = event_options(cfg, epsilon);
  long next = 0;
  while (static_cast<int>(b.samples.size()) < wanted && next < cfg.analysis.max_trials) {
    o.first_trial = next;
    o.max_trials = cfg.analysis.max_trials - next;
    try {
      EventSample s = sample_smallness_event(cov, domain, cfg.solver, o);
      b.trials_used = next + s.trials_used;
      b.unsynchronized += s.unsynchronized;
      next = s.trial_index + 1;
      if (s.degenerate_zero) {
        b.degenerate_zero = true;
        break;
      }
      b.samples.push_back(std::move(s));
    } catch (const RejectionExhaustedError& e) {
      b.trials_used = cfg.analysis.max_trials;
      b.unsynchronized += e.unsynchronized();
      b.exhausted = b.samples.empty();
      b.smallest_sup = e.smallest_sup_norm();
      break;
    }
  }
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Upper bounds

double UpperBoundsResult::violation(int k, bool fine) const {
  double m = 0.0;
  if (k == 0) {
    m = fine ? worst_lambda1_fine : worst_lambda1;
  } else {
    const auto& v = fine ? worst_volume_fine : worst_volume;
    m = v.at(static_cast<std::size_t>(k - 1));
  }
  return std::max(0.0, m);
}

namespace {

struct PathWork {
  PathBounds bounds;
  FtleReport top;
  FtleReport volume;
};

PathWork upper_bounds_path(const ExperimentConfig& cfg, const std::shared_ptr<const Domain>& domain,
                           const CovarianceSpec& cov, long index) {
  PathWork w;
  PathBounds& b = w.bounds;
  b.index = index;
  b.seed = derive_seed(cfg.noise.seed, static_cast<std::uint64_t>(index));
  const double T = cfg.analysis.T;
  const SolverConfig& solver = cfg.solver;
  try {
    const NoisePath path = sample_path(cov, solver.dt, -cfg.pullback.max_depth, T, b.seed);
    const AttractorEstimate est = pullback_attractor(path, domain, solver, cfg.pullback);
    b.base_tag = est.synchronized ? "attractor" : "attractor-unsynchronized";
    b.depth = est.depth;
    const auto grid = time_grid(cfg.analysis.record_dt, T, solver.dt);
    const FtleOptions fo = ftle_options(cfg, b.base_tag);
    {
      const TrajectoryRecord base = integrate(est.a, path, 0.0, T, solver, 1);
      w.top = ftle_top_along(base, grid, solver, fo);
      w.volume = volume_growth_along(base, cfg.analysis.k_max, grid, solver, fo);
    }
    b.lambda1_margin = w.top.max_lambda1_violation();
    b.probe_converged = w.top.probe_converged;
    for (int k = 1; k <= cfg.analysis.k_max; ++k) {
      b.volume_margins.push_back(w.volume.max_volume_violation(k));
    }
    if (cfg.dt_refine) {
      // the same Brownian path at dt/2, from the same base point a(w)
      const NoisePath fine = refine(path.slice(0, path.step_of(T)), cov);
      SolverConfig half = solver;
      half.dt = 0.5 * solver.dt;
      const TrajectoryRecord base = integrate(est.a, fine, 0.0, T, half, 1);
      const FtleReport top = ftle_top_along(base, grid, half, fo);
      const FtleReport vol = volume_growth_along(base, cfg.analysis.k_max, grid, half, fo);
      b.lambda1_margin_fine = top.max_lambda1_violation();
      for (int k = 1; k <= cfg.analysis.k_max; ++k) {
        b.volume_margins_fine.push_back(vol.max_volume_violation(k));
      }
    }
    b.ok = true;
  } catch (const std::exception& e) {
    b.ok = false;
    b.error = e.what();
  }
  return w;
}

}  // namespace

UpperBoundsResult run_upper_bounds(const ExperimentConfig& cfg, const fs::path& out) {
  validate(cfg);
  const auto domain = make_domain(cfg);
  const CovarianceSpec cov = make_covariance(cfg, *domain);
  const Writer writer(cfg, out);
  const int n = cfg.noise.ensemble_size;
  const int kmax = cfg.analysis.k_max;

  std::vector<PathWork> work(static_cast<std::size_t>(n));
  parallel_for(0, n, cfg.workers, [&](long i) {
    work[static_cast<std::size_t>(i)] = upper_bounds_path(cfg, domain, cov, i);
  });

  UpperBoundsResult r;
  r.ensemble_size = n;
  r.refined = cfg.dt_refine;
  const double lowest = -std::numeric_limits<double>::infinity();
  r.worst_lambda1 = r.worst_lambda1_fine = lowest;
  r.worst_volume.assign(static_cast<std::size_t>(kmax), lowest);
  r.worst_volume_fine.assign(static_cast<std::size_t>(kmax), lowest);
  for (const PathWork& w : work) {
    const PathBounds& b = w.bounds;
    r.paths.push_back(b);
    if (!b.ok) {
      ++r.failed;
      std::cerr << "path " << b.index << " failed: " << b.error << '\n';
      continue;
    }
    ++r.succeeded;
    if (!b.probe_converged) ++r.probe_unconverged;
    r.worst_lambda1 = std::max(r.worst_lambda1, b.lambda1_margin);
    for (int k = 0; k < kmax; ++k) r.worst_volume[k] = std::max(r.worst_volume[k], b.volume_margins[k]);
    if (b.lambda1_margin_fine) {
      r.worst_lambda1_fine = std::max(r.worst_lambda1_fine, *b.lambda1_margin_fine);
      for (int k = 0; k < kmax; ++k) {
        r.worst_volume_fine[k] = std::max(r.worst_volume_fine[k], b.volume_margins_fine[k]);
      }
    }
  }
  r.run_failed = r.failed >= cfg.analysis.failure_fraction * n;

  if (writer.enabled()) {
    for (const PathWork& w : work) {
      if (!w.bounds.ok || !cfg.output.csv) continue;
      auto f1 = writer.open(fs::path("ftle") / (index_name("path", w.bounds.index) + "_top.csv"));
      write_ftle_csv(w.top, f1, report_header(cfg));
      auto f2 = writer.open(fs::path("ftle") / (index_name("path", w.bounds.index) + "_volume.csv"));
      write_ftle_csv(w.volume, f2, report_header(cfg));
    }
    auto f = writer.open("margins.csv");
    f << "# " << report_header(cfg) << '\n' << "path,seed,status,base,depth,dt,lambda1_margin";
    for (int k = 1; k <= kmax; ++k) f << ",v" << k << "_margin";
    f << '\n';
    for (const PathBounds& b : r.paths) {
      auto row = [&](double dt, double l1, const std::vector<double>& vm) {
        f << b.index << ',' << b.seed << ',' << (b.ok ? "ok" : "failed") << ',' << b.base_tag
          << ',' << num(b.depth) << ',' << num(dt) << ',' << num(l1);
        for (int k = 0; k < kmax; ++k) f << ',' << (b.ok ? num(vm[k]) : std::string("nan"));
        f << '\n';
      };
      row(cfg.solver.dt, b.ok ? b.lambda1_margin : std::nan(""), b.volume_margins);
      if (b.lambda1_margin_fine) row(0.5 * cfg.solver.dt, *b.lambda1_margin_fine, b.volume_margins_fine);
    }
    Json j;
    j["experiment"] = "upper-bounds";
    j["ensemble_size"] = r.ensemble_size;
    j["succeeded"] = r.succeeded;
    j["failed"] = r.failed;
    j["run_failed"] = r.run_failed;
    j["tol_disc"] = cfg.analysis.tol_disc;
    j["worst_lambda1_margin"] = finite_or_null(r.worst_lambda1);
    j["worst_volume_margins"] = Json::array();
    for (double v : r.worst_volume) j["worst_volume_margins"].push_back(finite_or_null(v));
    j["probe_unconverged_paths"] = r.probe_unconverged;
    if (r.refined) {
      j["worst_lambda1_margin_half_dt"] = finite_or_null(r.worst_lambda1_fine);
      j["worst_volume_margins_half_dt"] = Json::array();
      for (double v : r.worst_volume_fine) j["worst_volume_margins_half_dt"].push_back(finite_or_null(v));
    }
    Json errors = Json::array();
    for (const PathBounds& b : r.paths) {
      if (!b.ok) errors.push_back({{"path", b.index}, {"error", b.error}});
    }
    j["errors"] = errors;
    writer.json("summary.json", j);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Lower bounds on smallness events

std::pair<double, double> wilson_interval(long hits, long trials) {
  if (trials <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double den = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / den;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

EpsilonChoice choose_epsilon(const ExperimentConfig& cfg, const Domain& domain, int k) {
  EpsilonChoice c;
  c.sobolev = sobolev_constant(domain);
  auto feasible = [&](double eps_v) {
    EpsilonChoice e = c;
    e.epsilon_v = eps_v;
    e.epsilon_b = 6.0 * c.sobolev * eps_v * eps_v;
    try {
      e.cone_delta = admissible_delta(cfg.solver.alpha, k, e.epsilon_b, domain);
    } catch (const DomainError&) {
      e.cone_delta.reset();
    }
    return e;
  };
  if (cfg.analysis.epsilon) return feasible(*cfg.analysis.epsilon);
  std::vector<double> cands = cfg.analysis.epsilons;
  std::sort(cands.begin(), cands.end(), std::greater<>());
  for (double eps : cands) {
    EpsilonChoice e = feasible(eps);
    if (e.cone_delta) return e;
  }
  return feasible(cands.back());
}

double LowerBoundResult::bound_fraction() const {
  if (events.empty()) return 0.0;
  return static_cast<double>(bound_ok_count) / static_cast<double>(events.size());
}

LowerBoundResult run_lower_bound_event(const ExperimentConfig& cfg, const fs::path& out) {
  validate(cfg);
  const auto domain = make_domain(cfg);
  const CovarianceSpec cov = make_covariance(cfg, *domain);
  const int k = cfg.analysis.event_k;
  const double alpha = cfg.solver.alpha;
  double mean_lambda = 0.0;
  double sum_rate = 0.0;
  for (int i = 1; i <= k; ++i) {
    mean_lambda += domain->eigenvalue(i) / k;
    sum_rate += alpha - domain->eigenvalue(i);
  }
  if (!(alpha > mean_lambda)) {
    throw ConfigError("lower-bound events need alpha > (lambda_1 + ... + lambda_k) / k");
  }
  const Writer writer(cfg, out);

  LowerBoundResult r;
  r.k = k;
  r.alpha = alpha;
  r.epsilon = choose_epsilon(cfg, *domain, k);
  const EventBatch batch = collect_events(cfg, cov, domain, r.epsilon.epsilon_v, cfg.analysis.events);
  r.trials_used = batch.trials_used;
  r.unsynchronized = batch.unsynchronized;
  r.exhausted = batch.exhausted;
  r.degenerate_zero = batch.degenerate_zero;
  r.smallest_sup = batch.smallest_sup;

  const auto grid = time_grid(cfg.analysis.record_dt, cfg.analysis.T, cfg.solver.dt);
  const double target = k == 1 ? alpha - domain->eigenvalue(1) - cfg.analysis.delta
                               : sum_rate - cfg.analysis.delta;
  std::vector<FtleReport> reports;
  for (const EventSample& s : batch.samples) {
    EventCheck c;
    c.trial_index = s.trial_index;
    c.trial_seed = s.trial_seed;
    c.sup_v = s.sup_v;
    const TrajectoryRecord& orbit = *s.orbit;
    c.inf_v = *std::min_element(orbit.v_norms.begin(), orbit.v_norms.end());
    const FtleOptions fo = ftle_options(cfg, "attractor");
    FtleReport rep = k == 1 ? ftle_top_along(orbit, grid, cfg.solver, fo)
                            : volume_growth_along(orbit, k, grid, cfg.solver, fo);
    c.min_margin_floored = c.min_margin_raw = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      const double value = k == 1 ? rep.lambda[i][0] : rep.v[i][k - 1];
      const double margin = value - target;
      c.min_margin_raw = std::min(c.min_margin_raw, margin);
      if (rep.times[i] >= cfg.analysis.t_floor - 1e-12) {
        c.min_margin_floored = std::min(c.min_margin_floored, margin);
      }
    }
    c.bound_ok = c.min_margin_floored >= 0.0;
    if (r.epsilon.cone_delta) {
      ConeParams p;
      p.delta = *r.epsilon.cone_delta;
      p.k = k;
      p.M = cfg.analysis.M;
      p.epsilon = r.epsilon.epsilon_b;
      p.residual_tol = cfg.analysis.residual_tol;
      std::vector<SpectralField> frame0;
      for (int j = 1; j <= k; ++j) frame0.push_back(SpectralField::unit(domain, j));
      c.certificate = certify_cone_growth(orbit, frame0, p, cfg.solver);
    }
    if (c.bound_ok) ++r.bound_ok_count;
    if (c.certificate.certified()) ++r.certified_count;
    r.events.push_back(std::move(c));
    reports.push_back(std::move(rep));
  }

  if (cfg.analysis.probability_trials > 0) {
    EventOptions o = event_options(cfg, r.epsilon.epsilon_v);
    const auto outcomes = survey_trials(cov, domain, cfg.solver, o, cfg.analysis.probability_trials);
    for (double eps : cfg.analysis.epsilons) {
      ProbabilityEstimate pe;
      pe.epsilon = eps;
      pe.trials = static_cast<long>(outcomes.size());
      for (const TrialOutcome& t : outcomes) {
        if (t.synchronized && !t.blew_up && t.sup_v < eps && t.inf_v > 0.0) ++pe.hits;
      }
      pe.p = static_cast<double>(pe.hits) / static_cast<double>(pe.trials);
      std::tie(pe.ci_low, pe.ci_high) = wilson_interval(pe.hits, pe.trials);
      r.probability.push_back(pe);
    }
  }

  if (writer.enabled()) {
    Json manifest = Json::array();
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      const EventCheck& c = r.events[i];
      manifest.push_back({{"seed", cfg.noise.seed},
                          {"trial_index", c.trial_index},
                          {"trial_seed", c.trial_seed},
                          {"config_hash", config_hash(cfg)}});
      const std::string stem = index_name("event", static_cast<long>(i));
      if (cfg.output.csv) {
        auto f = writer.open(fs::path(stem) / "ftle.csv");
        write_ftle_csv(reports[i], f, report_header(cfg));
        if (!c.certificate.times.empty()) {
          auto g = writer.open(fs::path(stem) / "cone.csv");
          write_certificate_csv(c.certificate, g, report_header(cfg));
        }
      }
      writer.open(fs::path(stem) / "cone.json")
          << certificate_summary_json(c.certificate, config_hash(cfg), std::string(kVersion)) << '\n';
      if (i == 0) {
        const EventSample& s = batch.samples[i];
        writer.path(fs::path(stem) / "noise", s.path->slice(0, s.path->step_of(cfg.analysis.T)));
        writer.trajectory(fs::path(stem) / "orbit", *s.orbit);
      }
    }
    writer.json("events.json", {{"events", manifest}});
    if (!r.probability.empty()) {
      auto f = writer.open("probability.csv");
      f << "# " << report_header(cfg) << '\n' << "epsilon,trials,hits,p,ci_low,ci_high\n";
      for (const auto& p : r.probability) {
        f << num(p.epsilon) << ',' << p.trials << ',' << p.hits << ',' << num(p.p) << ','
          << num(p.ci_low) << ',' << num(p.ci_high) << '\n';
      }
    }
    Json j;
    j["experiment"] = "lower-bound-event";
    j["k"] = k;
    j["alpha"] = alpha;
    j["epsilon_v"] = r.epsilon.epsilon_v;
    j["epsilon_b"] = r.epsilon.epsilon_b;
    j["sobolev_constant"] = r.epsilon.sobolev;
    j["cone_delta"] = r.epsilon.cone_delta ? Json(*r.epsilon.cone_delta) : Json(nullptr);
    j["delta"] = cfg.analysis.delta;
    j["t_floor"] = cfg.analysis.t_floor;
    j["trials_used"] = r.trials_used;
    j["unsynchronized"] = r.unsynchronized;
    j["accepted"] = r.events.size();
    j["exhausted"] = r.exhausted;
    j["degenerate_zero"] = r.degenerate_zero;
    if (r.exhausted) {
      j["smallest_sup_v"] = finite_or_null(r.smallest_sup);
      j["guidance"] = "no event within max_trials; raise epsilon above the smallest sup norm "
                      "or the trial budget";
    }
    j["bound_ok"] = r.bound_ok_count;
    j["certified"] = r.certified_count;
    Json ev = Json::array();
    for (const EventCheck& c : r.events) {
      ev.push_back({{"trial_index", c.trial_index},
                    {"sup_v", c.sup_v},
                    {"inf_v", c.inf_v},
                    {"min_margin", finite_or_null(c.min_margin_floored)},
                    {"min_margin_raw", finite_or_null(c.min_margin_raw)},
                    {"bound_ok", c.bound_ok},
                    {"certificate", std::string(status_name(c.certificate.status))},
                    {"min_residual", finite_or_null(c.certificate.min_residual)}});
    }
    j["events"] = ev;
    writer.json("summary.json", j);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Envelope study

EnvelopeStudyResult run_envelope_study(const ExperimentConfig& cfg, const fs::path& out) {
  validate(cfg);
  const auto domain = make_domain(cfg);
  const CovarianceSpec cov = make_covariance(cfg, *domain);
  const double mu = domain->eigenvalue(1) - cfg.solver.alpha;
  if (!(mu > 0.0)) throw ConfigError("the envelope study needs alpha < lambda_1");
  const Writer writer(cfg, out);

  EnvelopeStudyResult r;
  r.epsilon = cfg.analysis.epsilon ? *cfg.analysis.epsilon : cfg.analysis.epsilons.front();
  r.cutoff_radius = cfg.solver.cutoff_radius.value_or(1.0);
  r.lipschitz = estimate_lipschitz(domain, r.cutoff_radius, 4000, cfg.noise.seed);

  // the events are sampled for the plain cubic; u~ uses the cut-off F
  ExperimentConfig plain = cfg;
  plain.solver.cutoff_radius.reset();
  const EventBatch batch = collect_events(plain, cov, domain, r.epsilon, cfg.analysis.events);
  r.trials_used = batch.trials_used;
  r.exhausted = batch.exhausted;
  SolverConfig cut = cfg.solver;
  cut.cutoff_radius = r.cutoff_radius;
  for (const EventSample& s : batch.samples) {
    const RandomPdeRun run = integrate_random_pde(s.attractor->a, *s.path, cfg.analysis.T, cut, 1);
    EnvelopeEvent e;
    e.trial_index = s.trial_index;
    e.report = gronwall_envelope_check(run.times, run.ut_v_norms, run.eta, r.lipschitz, mu);
    if (e.report.holds()) ++r.holds_count;
    r.events.push_back(std::move(e));
  }

  if (writer.enabled()) {
    Json ev = Json::array();
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      const EnvelopeReport& rep = r.events[i].report;
      if (cfg.output.csv) {
        auto f = writer.open(index_name("envelope", static_cast<long>(i)) + ".csv");
        f << "# " << report_header(cfg) << '\n' << "t,norm_v,envelope\n";
        for (std::size_t j = 0; j < rep.times.size(); ++j) {
          f << num(rep.times[j]) << ',' << num(rep.norms[j]) << ','
            << (rep.envelope.empty() ? std::string("nan") : num(rep.envelope[j])) << '\n';
        }
      }
      ev.push_back({{"trial_index", r.events[i].trial_index},
                    {"eta", rep.eta},
                    {"u0_norm", rep.u0_norm},
                    {"max_residual", finite_or_null(rep.max_residual)},
                    {"holds", rep.holds()}});
    }
    writer.json("envelope_summary.json", {{"experiment", "envelope"},
                                          {"epsilon", r.epsilon},
                                          {"mu", mu},
                                          {"cutoff_radius", r.cutoff_radius},
                                          {"lipschitz", r.lipschitz},
                                          {"trials_used", r.trials_used},
                                          {"exhausted", r.exhausted},
                                          {"holds", r.holds_count},
                                          {"events", ev}});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bifurcation sweep

SweepResult run_bifurcation_sweep(const ExperimentConfig& cfg, const fs::path& out) {
  validate(cfg);
  const auto domain = make_domain(cfg);
  const CovarianceSpec cov = make_covariance(cfg, *domain);
  const Writer writer(cfg, out);
  const int kmax = cfg.analysis.k_max;
  const double T = cfg.analysis.T;
  SweepResult r;

  for (double alpha : cfg.analysis.alpha_grid) {
    ExperimentConfig c = cfg;
    c.solver.alpha = alpha;
    const std::vector<double> grid{T};
    auto lambdas_at_T = [&](const TrajectoryRecord& orbit) {
      const FtleReport rep = volume_growth_along(orbit, kmax, grid, c.solver, ftle_options(c, "attractor"));
      return rep.lambda.back();
    };
    try {
      validate(c);
      // unconditional: at the attractor of every ensemble path
      std::vector<std::vector<double>> per_path(static_cast<std::size_t>(c.noise.ensemble_size));
      std::vector<char> ok(per_path.size(), 0);
      parallel_for(0, c.noise.ensemble_size, c.workers, [&](long i) {
        const auto seed = derive_seed(c.noise.seed, static_cast<std::uint64_t>(i));
        try {
          const NoisePath path = sample_path(cov, c.solver.dt, -c.pullback.max_depth, T, seed);
          const AttractorEstimate est = pullback_attractor(path, domain, c.solver, c.pullback);
          per_path[i] = lambdas_at_T(integrate(est.a, path, 0.0, T, c.solver, 1));
          ok[i] = 1;
        } catch (const std::exception&) {
        }
      });
      std::vector<std::vector<double>> uncond(static_cast<std::size_t>(kmax));
      for (std::size_t i = 0; i < per_path.size(); ++i) {
        if (!ok[i]) continue;
        for (int k = 0; k < kmax; ++k) uncond[k].push_back(per_path[i][k]);
      }
      if (uncond[0].size() < per_path.size()) {
        r.failures.push_back("alpha " + num(alpha) + ": " +
                             std::to_string(per_path.size() - uncond[0].size()) + " paths failed");
      }
      for (int k = 0; k < kmax; ++k) {
        r.rows.push_back({alpha, k + 1, "unconditional", static_cast<long>(uncond[k].size()),
                          quantile(uncond[k], 0.1), quantile(uncond[k], 0.5), quantile(uncond[k], 0.9)});
      }
      // conditional: on smallness events
      const double eps = c.analysis.epsilon ? *c.analysis.epsilon : c.analysis.epsilons.front();
      const EventBatch batch = collect_events(c, cov, domain, eps, c.analysis.events);
      if (batch.samples.empty()) {
        r.failures.push_back("alpha " + num(alpha) + ": no smallness event (" +
                             (batch.degenerate_zero ? std::string("degenerate zero attractor")
                                                    : "smallest sup " + num(batch.smallest_sup)) +
                             ")");
        continue;
      }
      std::vector<std::vector<double>> cond(static_cast<std::size_t>(kmax));
      for (const EventSample& s : batch.samples) {
        const auto l = lambdas_at_T(*s.orbit);
        for (int k = 0; k < kmax; ++k) cond[k].push_back(l[k]);
      }
      for (int k = 0; k < kmax; ++k) {
        r.rows.push_back({alpha, k + 1, "conditional", static_cast<long>(cond[k].size()),
                          quantile(cond[k], 0.1), quantile(cond[k], 0.5), quantile(cond[k], 0.9)});
      }
    } catch (const std::exception& e) {
      r.failures.push_back("alpha " + num(alpha) + ": " + e.what());
    }
  }
  for (const auto& f : r.failures) std::cerr << f << '\n';

  if (writer.enabled()) {
    auto f = writer.open("sweep.csv");
    f << "# " << report_header(cfg) << '\n' << "alpha,k,kind,count,q10,q50,q90\n";
    for (const SweepRow& row : r.rows) {
      f << num(row.alpha) << ',' << row.k << ',' << row.kind << ',' << row.count << ','
        << num(row.q10) << ',' << num(row.q50) << ',' << num(row.q90) << '\n';
    }
    writer.json("summary.json", {{"experiment", "sweep"},
                                 {"alphas", cfg.analysis.alpha_grid.size()},
                                 {"rows", r.rows.size()},
                                 {"failures", r.failures}});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Attractor

AttractorResult run_attractor(const ExperimentConfig& cfg, const fs::path& out) {
  validate(cfg);
  const auto domain = make_domain(cfg);
  const CovarianceSpec cov = make_covariance(cfg, *domain);
  const Writer writer(cfg, out);
  const int n = cfg.noise.ensemble_size;
  AttractorResult r;
  r.ensemble_size = n;
  r.paths.resize(static_cast<std::size_t>(n));
  parallel_for(0, n, cfg.workers, [&](long i) {
    AttractorPath& p = r.paths[static_cast<std::size_t>(i)];
    p.index = i;
    p.seed = derive_seed(cfg.noise.seed, static_cast<std::uint64_t>(i));
    try {
      const NoisePath path = sample_path(cov, cfg.solver.dt, -cfg.pullback.max_depth, 0.0, p.seed);
      const AttractorEstimate est = pullback_attractor(path, domain, cfg.solver, cfg.pullback);
      p.synchronized = est.synchronized;
      p.depth = est.depth;
      p.gap = est.gap;
      p.v_gap = est.v_gap;
      p.h_norm = h_norm(est.a);
      p.v_norm = v_norm(est.a);
    } catch (const BlowUpError&) {
      p.blew_up = true;
    }
  });
  for (const AttractorPath& p : r.paths) {
    if (p.synchronized) {
      ++r.synchronized;
      r.max_depth_used = std::max(r.max_depth_used, p.depth);
    }
  }
  r.run_failed = (n - r.synchronized) >= cfg.analysis.failure_fraction * n;

  if (writer.enabled()) {
    auto f = writer.open("attractor.csv");
    f << "# " << report_header(cfg) << '\n'
      << "path,seed,synchronized,blew_up,depth,gap_h,gap_v,norm_h,norm_v\n";
    for (const AttractorPath& p : r.paths) {
      f << p.index << ',' << p.seed << ',' << p.synchronized << ',' << p.blew_up << ','
        << num(p.depth) << ',' << num(p.gap) << ',' << num(p.v_gap) << ',' << num(p.h_norm) << ','
        << num(p.v_norm) << '\n';
    }
    // first path: noise and the orbit a(theta^s w), s in [0, T]
    if (n > 0) {
      const NoisePath path =
          sample_path(cov, cfg.solver.dt, -cfg.pullback.max_depth, cfg.analysis.T, r.paths[0].seed);
      try {
        const AttractorEstimate est = pullback_attractor(path, domain, cfg.solver, cfg.pullback);
        writer.path("path_0000_noise", path.slice(0, path.step_of(cfg.analysis.T)));
        const int every = static_cast<int>(std::llround(cfg.analysis.record_dt / cfg.solver.dt));
        writer.trajectory("path_0000_orbit", integrate(est.a, path, 0.0, cfg.analysis.T, cfg.solver, every));
      } catch (const BlowUpError&) {
      }
    }
    Json depths = Json::array();
    for (const AttractorPath& p : r.paths) depths.push_back(p.depth);
    writer.json("summary.json", {{"experiment", "attractor"},
                                 {"ensemble_size", n},
                                 {"synchronized", r.synchronized},
                                 {"unsynchronized", n - r.synchronized},
                                 {"max_depth_used", r.max_depth_used},
                                 {"run_failed", r.run_failed},
                                 {"depths", depths}});
  }
  return r;
}

// ---------------------------------------------------------------------------

std::vector<SelftestLine> run_selftest() {
  std::vector<SelftestLine> lines;
  auto add = [&](std::string name, bool pass, std::string detail) {
    lines.push_back({std::move(name), pass, std::move(detail)});
  };
  const auto domain = Domain::make({6.283185307179586, 16, BasisConvention::PaperTwoPi});

  // scalar vs active kernels on a cubic
  {
    std::vector<double> u(16);
    for (int k = 0; k < 16; ++k) u[k] = std::sin(1.0 + k) / (1.0 + k);
    const SpectralField f(domain, u);
    const simd::Isa isa = simd::active_isa();
    simd::set_isa(simd::Isa::Scalar);
    const SpectralField a = cubic(f);
    simd::set_isa(isa);
    const SpectralField b = cubic(f);
    const double d = h_norm(a - b);
    add("simd-equivalence", d < 1e-12, std::string(simd::isa_name(isa)) + " diff " + num(d));
  }
  // linear exactness of the tangent flow
  {
    SolverConfig cfg;
    cfg.alpha = 2.0;
    cfg.linear = true;
    const NoisePath path = sample_path(CovarianceSpec::zero(*domain), cfg.dt, 0.0, 1.0, 1);
    const FtleReport rep = volume_growth(path, SpectralField(domain), 2, {1.0}, cfg);
    const double err = std::abs(rep.v.back()[1] - rep.volume_bounds[1]);
    add("linear-exactness", err < 1e-8, "V_2 error " + num(err));
  }
  // Mittag-Leffler of order 1
  {
    const double err = std::abs(mittag_leffler(1.0, 1.0) - std::numbers::e);
    add("mittag-leffler", err < 1e-12, "E_1(1) - e = " + num(err));
  }
  // wedge norm against the compound matrix
  {
    Eigen::MatrixXd a(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) a(i, j) = std::cos(1.0 + 3 * i + j);
    }
    const double w = wedge_norm_of_operator(a, 2);
    const double c = singular_values(compound_matrix(a, 2)).front();
    add("wedge-norm", std::abs(w - c) < 1e-10 * std::max(1.0, c), "diff " + num(std::abs(w - c)));
  }
  // config round trip
  {
    ExperimentConfig cfg;
    const bool same = config_hash(parse_config(canonical_text(cfg))) == config_hash(cfg);
    add("config-roundtrip", same, config_hash(cfg));
  }
  return lines;
}

}  // namespace chafee

#pragma once

// Pullback approximation of the singleton random attractor a(w), forward
// orbits a(theta^s w), and rejection sampling of the smallness events
// sup_{s in [0,T]} |a(theta^s w)|_V < epsilon.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

struct PullbackOptions {
  double spread = 5.0;         // c in the initial conditions 0, +-c e1 +- c e2
  double tol = 1e-9;           // H-diameter at time 0
  double initial_depth = 2.5;  // S_0
  double max_depth = 40.0;     // S_max
};

struct AttractorEstimate {
  SpectralField a;
  double depth = 0.0;     // pullback depth S of the returned estimate
  double gap = 0.0;       // H-diameter of the ensemble at time 0
  double v_gap = 0.0;     // V-diameter of the ensemble at time 0
  bool synchronized = false;
  std::vector<double> depths;  // every depth tried
  std::vector<double> gaps;    // H-diameter at each depth
};

/// The default ensemble 0, +-c e1 +- c e2 (e1 alone when N = 1).
std::vector<std::vector<double>> pullback_initial_conditions(const Domain& domain, double spread);

/// Integrate the ensemble from -S to 0 on `path` for S = S_0, 2 S_0, ...,
/// S_max until the time-0 diameter drops below tol. The ensemble mean is the
/// estimate. Reaching S_max without convergence is reported through
/// synchronized = false.
AttractorEstimate pullback_attractor(const NoisePath& path, std::shared_ptr<const Domain> domain,
                                     const SolverConfig& cfg, const PullbackOptions& opts = {});

/// Largest pairwise H-distance.
double ensemble_diameter(const std::vector<std::vector<double>>& members);

struct EventOptions {
  double epsilon = 0.1;
  double horizon = 1.0;  // T
  long max_trials = 10000;
  long first_trial = 0;  // trials first_trial .. first_trial + max_trials - 1
  std::uint64_t seed = 0;
  int workers = 1;
  PullbackOptions pullback;
};

/// Summary of one rejection-sampling trial.
struct TrialOutcome {
  long index = 0;
  std::uint64_t seed = 0;
  bool synchronized = false;
  bool blew_up = false;
  double sup_v = 0.0;  // sup over s in [0,T] of |a(theta^s w)|_V
  double inf_v = 0.0;
  double depth = 0.0;
};

struct EventSample {
  bool accepted = false;
  bool degenerate_zero = false;  // sup < epsilon but the attractor is exactly 0
  long trial_index = -1;
  std::uint64_t trial_seed = 0;
  long trials_used = 0;
  double epsilon = 0.0;
  double horizon = 0.0;
  double sup_v = 0.0;
  long unsynchronized = 0;  // trials rejected because pullback did not converge
  std::optional<NoisePath> path;
  std::optional<AttractorEstimate> attractor;
  std::optional<TrajectoryRecord> orbit;  // a(theta^s w), s in [0,T]
};

/// Noise path of trial `index`: covers [-S_max, T].
NoisePath trial_path(const CovarianceSpec& cov, const SolverConfig& cfg, const EventOptions& opts,
                     long index);

/// Run one trial (pullback + forward orbit).
TrialOutcome evaluate_trial(const CovarianceSpec& cov, std::shared_ptr<const Domain> domain,
                            const SolverConfig& cfg, const EventOptions& opts, long index);

/// Evaluate trials [0, count) in parallel; outcome i belongs to trial i.
std::vector<TrialOutcome> survey_trials(const CovarianceSpec& cov,
                                        std::shared_ptr<const Domain> domain,
                                        const SolverConfig& cfg, const EventOptions& opts,
                                        long count);

/// Full replay of trial `index` with path, attractor and orbit attached.
EventSample replay_trial(const CovarianceSpec& cov, std::shared_ptr<const Domain> domain,
                         const SolverConfig& cfg, const EventOptions& opts, long index);

/// Rejection sampling: the result is the lowest-index trial whose orbit
/// satisfies sup |a|_V < epsilon, independent of the worker count. Throws
/// RejectionExhaustedError after max_trials, carrying the smallest observed
/// sup-norm among synchronized trials.
EventSample sample_smallness_event(const CovarianceSpec& cov, std::shared_ptr<const Domain> domain,
                                   const SolverConfig& cfg, const EventOptions& opts);

// ---------------------------------------------------------------------------
// Random PDE along an event and its Gronwall envelope.

struct RandomPdeRun {
  std::vector<double> times;
  std::vector<double> ut_v_norms;  // |u~(t)|_V
  std::vector<double> z_v_norms;   // |z(t)|_V, z(0) = 0
  double eta = 0.0;                // sup |z|_V
};

/// u~ from u~(0) = u0 with the zero-start OU process z; u~ + z is the SPDE
/// solution. Records every `record_every` steps.
RandomPdeRun integrate_random_pde(const SpectralField& u0, const NoisePath& path, double horizon,
                                  const SolverConfig& cfg, int record_every = 1);

/// Sampled estimate of the Lipschitz constant of the cut-off nonlinearity
/// F: V -> H over the V-ball of radius 2R.
double estimate_lipschitz(std::shared_ptr<const Domain> domain, double radius, int samples,
                          std::uint64_t seed);

struct EnvelopeReport {
  bool applicable = false;
  std::string reason;
  double mu = 0.0;
  double eta = 0.0;
  double lipschitz = 0.0;
  double u0_norm = 0.0;
  std::vector<double> times;
  std::vector<double> norms;
  std::vector<double> envelope;
  double max_residual = 0.0;  // max_t (|u~(t)|_V - envelope(t))

  bool holds() const { return applicable && max_residual <= 0.0; }
};

/// Compare recorded |u~(t)|_V against h1_envelope. Not applicable when
/// mu = lambda_1 - alpha <= 0.
EnvelopeReport gronwall_envelope_check(const std::vector<double>& times,
                                       const std::vector<double>& ut_v_norms, double eta,
                                       double lipschitz, double mu);

}  // namespace chafee

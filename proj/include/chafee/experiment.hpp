#pragma once

// The canonical experiments behind the command-line driver. Each run takes
// a validated ExperimentConfig, returns a result structure, and (when `out`
// is non-empty) writes its reports there. Every file carries the config hash
// and the module version. Results do not depend on the worker count.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chafee/attractor.hpp"
#include "chafee/cones.hpp"
#include "chafee/config.hpp"
#include "chafee/lyapunov.hpp"

namespace chafee {

/// "# chafee 0.1.0 config=<hash>": first line of every CSV.
std::string report_header(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Upper bounds

struct PathBounds {
  long index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string base_tag;  // attractor, or attractor-unsynchronized
  double depth = 0.0;
  double lambda1_margin = 0.0;                 // max_t Lambda_1 - (alpha - lambda_1)
  std::vector<double> volume_margins;          // max_t V_k - sum (alpha - lambda_i)
  std::optional<double> lambda1_margin_fine;   // same at dt/2
  std::vector<double> volume_margins_fine;
  bool probe_converged = true;
};

struct UpperBoundsResult {
  int ensemble_size = 0;
  int succeeded = 0;
  int failed = 0;
  bool run_failed = false;
  bool refined = false;
  double worst_lambda1 = 0.0;            // max over paths of lambda1_margin
  std::vector<double> worst_volume;      // per k
  double worst_lambda1_fine = 0.0;
  std::vector<double> worst_volume_fine;
  int probe_unconverged = 0;
  std::vector<PathBounds> paths;

  /// max(0, worst margin) at dt and dt/2 for Lambda_1 (k = 0) or V_k.
  double violation(int k, bool fine) const;
};

UpperBoundsResult run_upper_bounds(const ExperimentConfig& cfg,
                                   const std::filesystem::path& out = {});

// ---------------------------------------------------------------------------
// Lower bounds on smallness events

struct EpsilonChoice {
  double epsilon_v = 0.0;  // smallness of |a|_V
  double epsilon_b = 0.0;  // implied bound on |3 a^2|_V
  double sobolev = 0.0;    // discrete Sobolev constant used
  std::optional<double> cone_delta;
};

/// Largest candidate (descending) whose implied epsilon_b = 6 C eps_v^2
/// admits a cone delta; a fixed analysis.epsilon is used as is.
EpsilonChoice choose_epsilon(const ExperimentConfig& cfg, const Domain& domain, int k);

struct EventCheck {
  long trial_index = 0;
  std::uint64_t trial_seed = 0;
  double sup_v = 0.0;
  double inf_v = 0.0;
  double min_margin_floored = 0.0;  // min over t in [t_floor, T] of lower-bound margin
  double min_margin_raw = 0.0;      // same over (0, T]
  bool bound_ok = false;            // floored margin >= 0
  ConeCertificate certificate;
};

struct ProbabilityEstimate {
  double epsilon = 0.0;
  long trials = 0;
  long hits = 0;
  double p = 0.0;
  double ci_low = 0.0;  // Wilson 95%
  double ci_high = 0.0;
};

struct LowerBoundResult {
  int k = 1;
  double alpha = 0.0;
  EpsilonChoice epsilon;
  long trials_used = 0;
  long unsynchronized = 0;
  bool exhausted = false;
  bool degenerate_zero = false;
  double smallest_sup = 0.0;  // among synchronized trials, when exhausted
  std::vector<EventCheck> events;
  int bound_ok_count = 0;
  int certified_count = 0;
  std::vector<ProbabilityEstimate> probability;

  double bound_fraction() const;
};

/// Requires alpha > lambda_1 for k = 1, alpha > mean(lambda_1..lambda_k)
/// otherwise (ConfigError).
LowerBoundResult run_lower_bound_event(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out = {});

/// Wilson score interval at 95%.
std::pair<double, double> wilson_interval(long hits, long trials);

// ---------------------------------------------------------------------------
// Gronwall envelope on smallness events (alpha < lambda_1)

struct EnvelopeEvent {
  long trial_index = 0;
  EnvelopeReport report;
};

struct EnvelopeStudyResult {
  double epsilon = 0.0;
  double cutoff_radius = 0.0;
  double lipschitz = 0.0;
  long trials_used = 0;
  bool exhausted = false;
  std::vector<EnvelopeEvent> events;
  int holds_count = 0;
};

EnvelopeStudyResult run_envelope_study(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out = {});

// ---------------------------------------------------------------------------
// Bifurcation sweep

struct SweepRow {
  double alpha = 0.0;
  int k = 0;
  std::string kind;  // unconditional or conditional
  long count = 0;
  double q10 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> failures;  // per-alpha messages
};

/// Lambda_k(T) statistics for each alpha in analysis.alpha_grid, at the
/// attractor (unconditional) and on smallness events (conditional).
SweepResult run_bifurcation_sweep(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out = {});

// ---------------------------------------------------------------------------
// Attractor

struct AttractorPath {
  long index = 0;
  std::uint64_t seed = 0;
  bool synchronized = false;
  bool blew_up = false;
  double depth = 0.0;
  double gap = 0.0;
  double v_gap = 0.0;
  double h_norm = 0.0;
  double v_norm = 0.0;
};

struct AttractorResult {
  int ensemble_size = 0;
  int synchronized = 0;
  double max_depth_used = 0.0;
  bool run_failed = false;
  std::vector<AttractorPath> paths;
};

AttractorResult run_attractor(const ExperimentConfig& cfg, const std::filesystem::path& out = {});

// ---------------------------------------------------------------------------

struct SelftestLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<SelftestLine> run_selftest();

}  // namespace chafee

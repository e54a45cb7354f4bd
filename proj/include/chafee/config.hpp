#pragma once

// Experiment configuration: a flat key-value text format.
//
//   # comment                      (also after a value)
//   section.key = value
//
// One assignment per line; keys are dotted lowercase identifiers from the
// table in README.md; values are numbers, booleans (true/false), words, or
// comma-separated number lists. Unknown keys, repeated keys and malformed
// values are errors that report the line number.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chafee/attractor.hpp"
#include "chafee/dynamics.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

inline constexpr std::string_view kVersion = "chafee 0.1.0";

struct NoiseConfig {
  double gamma = 1.0;
  double amplitude = 1.0;
  std::vector<double> q;  // explicit spectrum; overrides gamma/amplitude
  std::uint64_t seed = 0;
  int ensemble_size = 100;
};

struct AnalysisConfig {
  int k_max = 3;               // largest k for V_k, and k of the event study
  double T = 5.0;              // horizon
  double record_dt = 0.05;     // spacing of the reported FTLE grid
  std::vector<double> epsilons = {0.4, 0.2, 0.1};  // event smallness levels
  std::optional<double> epsilon;                   // fixed level (else chosen)
  double delta = 0.1;          // margin in the lower-bound checks
  double M = 2.0;              // narrow-cone safety factor
  double t_floor = 0.1;
  long max_trials = 10000;
  int events = 1;              // accepted events to collect
  int event_k = 1;             // grade k of the event study
  long probability_trials = 0; // trials of the event-probability study (0: skip)
  std::vector<double> alpha_grid;
  int k_probe = 4;
  int reorth_every = 10;
  double tol_disc = 0.02;
  double failure_fraction = 0.1;
  double residual_tol = 1e-4;
};

struct OutputConfig {
  std::string directory = "out";
  bool csv = true;
  bool binary = false;
};

struct ExperimentConfig {
  DomainSpec domain;
  SolverConfig solver;
  NoiseConfig noise;
  PullbackOptions pullback;
  AnalysisConfig analysis;
  OutputConfig output;
  int workers = 1;
  bool dt_refine = false;
};

/// Parse config text on top of the defaults. Throws ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Re-validate every module-level invariant. Throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// All effective settings as sorted key = value lines (parseable).
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a 64 of canonical_text, as 16 hex digits. Worker count and output
/// directory are excluded: they do not change results.
std::string config_hash(const ExperimentConfig& cfg);

std::shared_ptr<const Domain> make_domain(const ExperimentConfig& cfg);
CovarianceSpec make_covariance(const ExperimentConfig& cfg, const Domain& domain);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace chafee

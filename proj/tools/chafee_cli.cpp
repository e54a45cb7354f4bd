// chafee: command-line driver for the canonical experiments.
//
//   chafee <upper-bounds|lower-bound-event|sweep|attractor|selftest>
//          [--config PATH] [--seed U64] [--workers N] [--out DIR] [--dt-refine]
//
// Exit codes: 0 success, 2 configuration error, 3 run failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chafee/errors.hpp"
#include "chafee/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRunFailed = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool dt_refine = false;
};

chafee::ExperimentConfig effective_config(const Overrides& o) {
  chafee::ExperimentConfig cfg =
      o.config.empty() ? chafee::ExperimentConfig{} : chafee::load_config(o.config);
  if (o.seed) cfg.noise.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.out) cfg.output.directory = *o.out;
  if (o.dt_refine) cfg.dt_refine = true;
  chafee::validate(cfg);
  return cfg;
}

int upper_bounds(const chafee::ExperimentConfig& cfg) {
  const auto r = chafee::run_upper_bounds(cfg, cfg.output.directory);
  std::cout << "paths " << r.succeeded << " ok, " << r.failed << " failed\n"
            << "worst Lambda_1 margin " << r.worst_lambda1 << '\n';
  for (std::size_t k = 0; k < r.worst_volume.size(); ++k) {
    std::cout << "worst V_" << k + 1 << " margin " << r.worst_volume[k] << '\n';
  }
  return r.run_failed ? kRunFailed : kOk;
}

int lower_bound_event(const chafee::ExperimentConfig& cfg) {
  const auto domain = chafee::make_domain(cfg);
  if (cfg.solver.alpha < domain->eigenvalue(1)) {
    const auto r = chafee::run_envelope_study(cfg, cfg.output.directory);
    std::cout << "envelope study: " << r.events.size() << " events, " << r.holds_count
              << " within the envelope, " << r.trials_used << " trials\n";
    if (r.exhausted) {
      std::cerr << "no smallness event within analysis.max_trials\n";
      return kRunFailed;
    }
    return kOk;
  }
  const auto r = chafee::run_lower_bound_event(cfg, cfg.output.directory);
  std::cout << "epsilon " << r.epsilon.epsilon_v << ", " << r.events.size() << " events in "
            << r.trials_used << " trials; bound holds on " << r.bound_ok_count << ", certified "
            << r.certified_count << '\n';
  if (r.degenerate_zero) {
    std::cerr << "the attractor is the zero state; no nontrivial smallness event exists\n";
    return kRunFailed;
  }
  if (r.exhausted) {
    std::cerr << "no smallness event within analysis.max_trials (smallest sup |a|_V "
              << r.smallest_sup << ", " << r.unsynchronized
              << " trials unsynchronized); raise analysis.epsilon or analysis.max_trials\n";
    return kRunFailed;
  }
  return kOk;
}

int sweep(const chafee::ExperimentConfig& cfg) {
  const auto r = chafee::run_bifurcation_sweep(cfg, cfg.output.directory);
  std::cout << r.rows.size() << " rows, " << r.failures.size() << " failures\n";
  const double n = static_cast<double>(cfg.analysis.alpha_grid.size());
  const bool failed = !r.failures.empty() &&
                      static_cast<double>(r.failures.size()) >= cfg.analysis.failure_fraction * n;
  return failed ? kRunFailed : kOk;
}

int attractor(const chafee::ExperimentConfig& cfg) {
  const auto r = chafee::run_attractor(cfg, cfg.output.directory);
  std::cout << r.synchronized << " of " << r.ensemble_size << " paths synchronized, max depth "
            << r.max_depth_used << '\n';
  return r.run_failed ? kRunFailed : kOk;
}

int selftest() {
  bool all = true;
  for (const auto& line : chafee::run_selftest()) {
    std::cout << (line.pass ? "PASS " : "FAIL ") << line.name << "  " << line.detail << '\n';
    all = all && line.pass;
  }
  return all ? kOk : kRunFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin experiments for the stochastic Chafee-Infante equation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(chafee::kVersion));

  Overrides o;
  app.add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed (overrides noise.seed)");
  app.add_option("--workers", o.workers, "worker threads (overrides run.workers)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "output directory (overrides output.directory)");
  app.add_flag("--dt-refine", o.dt_refine, "repeat upper bounds at dt/2");

  auto* ub = app.add_subcommand("upper-bounds", "FTLE and volume-growth upper bounds on an ensemble");
  auto* lb = app.add_subcommand("lower-bound-event", "lower bounds and cone certificates on smallness events");
  auto* sw = app.add_subcommand("sweep", "Lambda_k quantiles across analysis.alpha_grid");
  auto* at = app.add_subcommand("attractor", "pullback attractor synchronization");
  auto* st = app.add_subcommand("selftest", "quick internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*st) return selftest();
    const chafee::ExperimentConfig cfg = effective_config(o);
    if (*ub) return upper_bounds(cfg);
    if (*lb) return lower_bound_event(cfg);
    if (*sw) return sweep(cfg);
    if (*at) return attractor(cfg);
  } catch (const chafee::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kRunFailed;
  }
  return kOk;
}

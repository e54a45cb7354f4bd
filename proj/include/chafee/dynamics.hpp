#pragma once

// Time stepping for
//   du = (Delta u + alpha u - u^3) dt + dW            (the SPDE)
//   du~ = (Delta + alpha) u~ dt + f(u~ + z) dt        (OU-subtracted form)
//   dv = (Delta v + alpha v - 3 u^2 v) dt             (first variation)
// in the truncated sine basis. The linear part is diagonal, so both schemes
// reduce to y_k = decay_k (u_k + dW_k) + gain_k N_k(u) with per-mode
// coefficients fixed by (dt, alpha, scheme).

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

enum class Scheme { ExponentialEuler, SemiImplicitEuler };

struct SolverConfig {
  double dt = 1e-3;
  double alpha = 0.0;
  Scheme scheme = Scheme::ExponentialEuler;
  /// V-ball radius R of the cut-off nonlinearity F(u) = theta(|u|_V / R) u^3.
  std::optional<double> cutoff_radius;
  /// Drop the nonlinearity entirely (F = 0); the variational equation is then
  /// the heat semigroup.
  bool linear = false;
  OuVariant ou_variant = OuVariant::LeftPoint;
  /// |u|_H above this counts as blow-up.
  double blowup_threshold = 1e6;
};

void validate(const SolverConfig& cfg, const Domain& domain);

/// C^1 cut-off: 1 on [0,1], 0 on [2,inf), cubic Hermite in between.
double cutoff_theta(double r);
double cutoff_theta_prime(double r);

/// phi_1(z) = (e^z - 1) / z with phi_1(0) = 1.
double phi1(double z);

/// Stepper with precomputed coefficients and scratch space. Not thread-safe;
/// use one per worker.
class Integrator {
 public:
  Integrator(std::shared_ptr<const Domain> domain, SolverConfig cfg);

  const Domain& domain() const { return *domain_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
  const SolverConfig& config() const { return cfg_; }
  int modes() const { return domain_->modes(); }
  std::span<const double> decay() const { return decay_; }
  std::span<const double> gain() const { return gain_; }

  /// out = -F(u) (or 0 in linear mode).
  void nonlinearity(std::span<const double> u, std::span<double> out);

  /// One SPDE step from time t; `dw` may be empty for a deterministic step.
  void step_spde(std::span<const double> u, std::span<const double> dw, std::span<double> out,
                 double t);

  /// step_spde for `count` states stored back to back in `u`, all driven by
  /// the same increment. Bit-identical to `count` single steps.
  void step_spde_many(std::span<const double> u, std::size_t count, std::span<const double> dw,
                      std::span<double> out, double t);

  /// One step of the random PDE with OU value z at the left endpoint.
  void step_random_pde(std::span<const double> ut, std::span<const double> z,
                       std::span<double> out, double t);

  /// Freeze the base state used by step_variational (left-endpoint rule).
  void set_base(std::span<const double> u_base);

  /// One step of the linearization about the frozen base state.
  void step_variational(std::span<const double> v, std::span<double> out, double t);

  /// step_variational for `count` vectors stored back to back; bit-identical
  /// to single steps.
  void step_variational_many(std::span<const double> v, std::size_t count, std::span<double> out,
                             double t);

  /// Throws BlowUpError(t) if the state is non-finite or too large.
  void check_state(std::span<const double> u, double t) const;

 private:
  std::shared_ptr<const Domain> domain_;
  SolverConfig cfg_;
  std::vector<double> decay_;
  std::vector<double> gain_;
  // scratch
  std::vector<double> grid_;
  std::vector<double> f_;
  std::vector<double> w_;
  std::vector<double> batch_grid_;
  std::vector<double> batch_f_;
  // frozen base for the variational step
  std::vector<double> multiplier_;  // grid values of 3 theta u^2
  std::vector<double> base_cube_;   // u^3 coefficients (cut-off correction)
  std::vector<double> base_grad_;   // (theta'/R) lambda_k u_k / |u|_V
  bool base_has_correction_ = false;
  bool base_is_zero_ = true;
};

// Convenience single-step forms on fields.
SpectralField step_spde(const SpectralField& u, std::span<const double> dw, const SolverConfig& cfg);
SpectralField step_random_pde(const SpectralField& ut, const OuState& z, const SolverConfig& cfg);
SpectralField step_variational(const SpectralField& v, const SpectralField& u_base,
                               const SolverConfig& cfg);

struct TrajectoryRecord {
  std::shared_ptr<const Domain> domain;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // coefficients at each time
  std::vector<double> v_norms;

  std::size_t size() const { return times.size(); }
  SpectralField state(std::size_t i) const { return SpectralField(domain, states.at(i)); }
  SpectralField final_state() const { return state(size() - 1); }
};

/// Integrate the SPDE from t0 to t1 on the path's grid, recording every
/// `record_every` steps (always including both endpoints). The path's dt
/// must equal cfg.dt.
TrajectoryRecord integrate(const SpectralField& u0, const NoisePath& path, double t0, double t1,
                           const SolverConfig& cfg, int record_every = 1);

/// Same stepping without recording; returns the final state.
SpectralField integrate_final(const SpectralField& u0, const NoisePath& path, double t0, double t1,
                              const SolverConfig& cfg);

/// Integrate several initial conditions on one path; returns final states.
/// Members are stepped as one batch (see Integrator::step_spde_many).
std::vector<std::vector<double>> integrate_ensemble_final(
    Integrator& integrator, const std::vector<std::vector<double>>& u0, const NoisePath& path,
    std::int64_t first_step, std::int64_t end_step);

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& out,
                          const std::string& header_comment = {});
/// Layout: magic, uint32 header length, header bytes, int32 modes, int64
/// records, double dt, then per record the time and the N coefficients.
void write_trajectory_binary(const TrajectoryRecord& rec, std::ostream& out,
                             const std::string& header = {});

}  // namespace chafee

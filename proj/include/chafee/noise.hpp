#pragma once

// Q-Wiener increments, the Wiener shift and the Ornstein-Uhlenbeck process.
//
// Increments come from a counter-based generator: the normal variate for
// (seed, mode, step) is a pure function of those three numbers. Extending a
// path into the past therefore never changes increments that were already
// drawn, and paths are identical no matter which thread samples them.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chafee/spectral.hpp"

namespace chafee {

/// Eigenvalues q_k of the covariance operator against the basis e_k.
struct CovarianceSpec {
  std::vector<double> q;
  double gamma = 1.0;      // exponent of the power-law profile (informational
                           // for explicit spectra)
  double amplitude = 1.0;  // q_k = amplitude * lambda_k^-gamma

  static CovarianceSpec power_law(const Domain& domain, double gamma, double amplitude = 1.0);
  static CovarianceSpec explicit_values(std::vector<double> q);
  static CovarianceSpec zero(const Domain& domain);

  bool is_zero() const;
};

struct TraceCheck {
  double total = 0.0;  // sum_k q_k lambda_k^eps
  double tail = 0.0;   // same sum over k > N/2
  double ratio = 0.0;  // tail / total (0 when total == 0)
  bool ok = true;
};

/// Discrete trace condition: tail / total <= tail_fraction.
TraceCheck trace_check(const CovarianceSpec& cov, const Domain& domain, double epsilon = 0.01,
                       double tail_fraction = 0.01);

/// Throws ConfigError if q has the wrong length, a negative or non-finite
/// entry, or fails the trace condition.
void validate_covariance(const CovarianceSpec& cov, const Domain& domain, double epsilon = 0.01);

/// 64-bit mixing function (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Deterministic seed for member `index` of an ensemble rooted at `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Standard normal variate keyed by (seed, mode, step). Modes 2j-1 and 2j
/// take the two independent outputs of one polar-method draw. Negative steps
/// use a separate substream.
double counter_normal(std::uint64_t seed, int mode, std::int64_t step);

/// Sampled two-sided path. Step i carries the increment W((i+1)dt) - W(i dt)
/// for every mode; valid steps are first_step() .. end_step()-1.
class NoisePath {
 public:
  NoisePath(int modes, double dt, std::int64_t first_step, std::int64_t steps, std::uint64_t seed,
            std::vector<double> increments);

  int modes() const { return modes_; }
  double dt() const { return dt_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t first_step() const { return first_step_; }
  std::int64_t end_step() const { return first_step_ + steps_; }
  std::int64_t steps() const { return steps_; }
  double t_min() const { return static_cast<double>(first_step_) * dt_; }
  double t_max() const { return static_cast<double>(end_step()) * dt_; }

  /// Increments of all modes over step i; throws std::out_of_range outside
  /// the window.
  std::span<const double> increment(std::int64_t step) const;
  bool contains(std::int64_t step) const { return step >= first_step_ && step < end_step(); }

  /// The path shifted by `steps` steps: increment(i) of the result is
  /// increment(i + steps) of this path. Shares storage.
  NoisePath shifted(std::int64_t steps) const;

  /// The steps [first, end) of this path as a view sharing storage.
  NoisePath slice(std::int64_t first, std::int64_t end) const;

  /// Coarser path with step factor*dt whose increments are sums of
  /// consecutive increments. Requires first_step and steps divisible by
  /// factor.
  NoisePath coarsen(int factor) const;

  /// Convert a time to a step index, requiring it to be a multiple of dt
  /// (within 1e-9 relative).
  std::int64_t step_of(double t) const;

  friend bool operator==(const NoisePath& a, const NoisePath& b);

 private:
  int modes_;
  double dt_;
  std::int64_t first_step_;
  std::int64_t steps_;
  std::uint64_t seed_;
  std::shared_ptr<const std::vector<double>> data_;
  std::int64_t row_offset_;  // data row of first_step_
};

/// Draw increments with variance q_k dt for all steps covering [t_min, t_max].
/// t_min and t_max are rounded outward to multiples of dt.
NoisePath sample_path(const CovarianceSpec& cov, double dt, double t_min, double t_max,
                      std::uint64_t seed);

/// Brownian-bridge halving: a path with step dt/2 whose consecutive pairs sum
/// to the increments of `path`. The midpoint draws are keyed by the path's
/// seed, so refinement is reproducible and coarsen(2) recovers `path` up to
/// rounding.
NoisePath refine(const NoisePath& path, const CovarianceSpec& cov);

/// (theta^t w)_s = w_{t+s} - w_t. `t` must be a multiple of dt; throws
/// std::out_of_range if the shifted window would be empty.
NoisePath wiener_shift(const NoisePath& path, double t);

/// W(t1) - W(t0) for mode k (1-based) by summing increments.
double wiener_difference(const NoisePath& path, int k, double t0, double t1);

void write_path_csv(const NoisePath& path, std::ostream& out, const std::string& header_comment = {});
/// The header string (config hash and version) is stored after the magic.
void write_path_binary(const NoisePath& path, std::ostream& out, const std::string& header = {});
NoisePath read_path_binary(std::istream& in);

enum class OuVariant { LeftPoint, VarianceExact };

struct OuState {
  SpectralField z;
  double alpha = 0.0;
};

/// Mode-wise update z_k <- e^{a dt} (z_k + c dW_k), a = alpha - lambda_k.
/// c = 1 for the left-point rule; the variance-exact rule uses
/// c = sqrt((1 - e^{-2 a dt}) / (2 a dt)) so the transition variance is
/// exactly q_k (e^{2 a dt} - 1) / (2a).
OuState ou_step(const OuState& state, std::span<const double> dw, double dt, double alpha,
                OuVariant variant = OuVariant::LeftPoint);

/// The factor c above.
double ou_increment_scale(double a, double dt, OuVariant variant);

}  // namespace chafee

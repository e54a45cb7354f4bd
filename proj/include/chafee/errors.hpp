#pragma once

#include <stdexcept>
#include <string>

namespace chafee {

/// Invalid configuration or violated construction invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mathematical precondition does not hold (e.g. alpha <= lambda_k).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The integrated state became non-finite or left the blow-up threshold.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// A tangent frame lost rank during re-orthonormalization.
class DegenerateFrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A series or iteration did not reach its tolerance within the allowed work.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection sampling ran out of trials.
class RejectionExhaustedError : public std::runtime_error {
 public:
  RejectionExhaustedError(const std::string& what, double smallest_sup_norm, long trials,
                          long unsynchronized = 0)
      : std::runtime_error(what),
        smallest_sup_norm_(smallest_sup_norm),
        trials_(trials),
        unsynchronized_(unsynchronized) {}
  double smallest_sup_norm() const noexcept { return smallest_sup_norm_; }
  long trials() const noexcept { return trials_; }
  /// Trials rejected because the pullback did not converge or blew up.
  long unsynchronized() const noexcept { return unsynchronized_; }

 private:
  double smallest_sup_norm_;
  long trials_;
  long unsynchronized_;
};

}  // namespace chafee

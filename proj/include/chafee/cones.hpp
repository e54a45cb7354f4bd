#pragma once

// Quadratic cone forms and numerical certification of cone growth along the
// linearization.
//
//   Q_delta(v)     = delta |pi_1 v|^2 - |(1 - pi_1) v|^2
//   Q^(k)_delta(w) = delta w_{i0}^2 - sum_{i != i0} w_i^2   (blade basis)
//
// with i0 = (1, ..., k). A certificate propagates a vector (k = 1) or a
// k-frame along a recorded base trajectory and checks
//   (1/2) dQ/dt >= rate Q,
//   rate = alpha - lambda_1 - 2 delta           (k = 1)
//   rate = Lambda_i0 - (1 + delta) k eps / delta (k >= 2)
// together with the norm bound
//   |v_t|^2 >= (M - 1)/(M + delta) exp(2 t rate) |v_0|^2  for v_0 in C_{delta/M}.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/exterior.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

struct ConeParams {
  double delta = 0.1;
  int k = 1;
  double M = 2.0;        // safety factor of the narrower cone C_{delta/M}
  double epsilon = 0.0;  // bound on sup_t |3 u(t)^2|_V
  double residual_tol = 1e-4;

  /// delta = sqrt(epsilon), the coupling used for k = 1.
  static ConeParams coupled(double epsilon, double M = 2.0);
};

double q_delta(std::span<const double> v, double delta);
double q_delta(const SpectralField& v, double delta);

/// Throws std::invalid_argument if v's grade differs from k.
double q_delta_k(const WedgeVector& v, double delta, int k);

/// Largest delta in {1, 1/2, 1/4, ...} (down to 2^-52) with
/// eps (1 + delta) k (1 + 1/delta) <= lambda_{k+1} - lambda_k; the cap 1 when
/// N = k. Throws DomainError unless alpha > lambda_k.
std::optional<double> admissible_delta(double alpha, int k, double epsilon, const Domain& domain);

/// Growth rate used by the certificate.
double cone_rate(double alpha, const Domain& domain, const ConeParams& params);

enum class CertificateStatus { Certified, Failed, PreconditionFailed, InitialConeViolation };

std::string_view status_name(CertificateStatus s);

struct ConeCertificate {
  CertificateStatus status = CertificateStatus::Failed;
  ConeParams params;
  double rate = 0.0;
  double measured_sup_b = 0.0;  // sup_t |3 u(t)^2|_V
  double q0 = 0.0;
  std::vector<double> times;
  std::vector<double> q_values;
  std::vector<double> residuals;    // (1/2) dQ/dt - rate Q
  std::vector<double> norm_ratios;  // |v_t|^2 / (prefactor exp(2 t rate) |v_0|^2)
  double min_residual = 0.0;
  double min_norm_ratio = 0.0;
  double prefactor = 0.0;           // (M - 1)/(M + delta)
  bool in_narrow_cone = false;      // Q_{delta/M}(v_0) >= 0
  bool q_positive = false;
  double min_growth_margin = 0.0;   // min_t Q_t - Q_0 exp(2 t rate), relative to Q_0

  bool certified() const { return status == CertificateStatus::Certified; }
};

/// k = 1: propagate v0. The base trajectory must be recorded at every step.
ConeCertificate certify_cone_growth(const TrajectoryRecord& base, const SpectralField& v0,
                                    const ConeParams& params, const SolverConfig& cfg);

/// k >= 1: propagate the frame; blade coefficients come from the blade map
/// of the propagated vectors at every step.
ConeCertificate certify_cone_growth(const TrajectoryRecord& base,
                                    const std::vector<SpectralField>& frame0,
                                    const ConeParams& params, const SolverConfig& cfg);

/// CSV columns t,Q,residual,norm_ratio.
void write_certificate_csv(const ConeCertificate& cert, std::ostream& out,
                           const std::string& header_comment = {});

/// Summary JSON text: status, pass, min_residual, min_norm_ratio, rate, ...
std::string certificate_summary_json(const ConeCertificate& cert, const std::string& config_hash,
                                     const std::string& version);

}  // namespace chafee

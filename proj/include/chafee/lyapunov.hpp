#pragma once

// Finite-time Lyapunov exponents Lambda_k(t) and volume growth rates V_k(t)
// from a propagated orthonormal tangent frame (discrete QR method).
//
// For a frame started at the orthonormal V_0, D phi^t V_0 = Q_t R_t with R_t
// upper triangular and positive on the diagonal. log_r holds log diag(R_t);
// the sum of the first j entries is log |^j D phi^t V_0|. R_t itself is kept
// (rescaled) so that the top singular value of the restricted derivative,
// which is what Lambda_1 measures, is available too.

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

struct TangentFrame {
  std::shared_ptr<const Domain> domain;
  std::vector<std::vector<double>> vectors;  // orthonormal in H
  std::vector<double> log_r;                 // accumulated log stretching factors
  double log_volume = 0.0;                   // sum of log_r
  double t_elapsed = 0.0;
  Eigen::MatrixXd stretch;        // R_t / exp(log_stretch_scale)
  double log_stretch_scale = 0.0;

  int size() const { return static_cast<int>(vectors.size()); }

  /// (e_1, ..., e_k).
  static TangentFrame leading(std::shared_ptr<const Domain> domain, int k);

  /// Orthonormalize the given vectors; the initial stretching is discarded.
  static TangentFrame from_vectors(std::shared_ptr<const Domain> domain,
                                   std::vector<std::vector<double>> vectors);

  /// log of the largest singular value of D phi^t restricted to the span of
  /// the first j initial vectors (j = 0 means all).
  double log_top_singular_value(int j = 0) const;

  /// Largest |(v_i, v_j) - delta_ij|.
  double orthonormality_defect() const;
};

/// QR step: orthonormalize the frame in place (positive diagonal), fold R
/// into the accumulated stretch and log_r. Throws DegenerateFrameError when a
/// stretching factor drops below 1e-300.
void reorthonormalize(TangentFrame& frame);

/// Propagate along the recorded base trajectory from t0 to t1 by
/// step_variational (left-endpoint base), reorthonormalizing every
/// `reorth_every` steps and at t1. The base must be recorded at every step
/// of cfg.dt and cover [t0, t1].
TangentFrame propagate_frame(TangentFrame frame, const TrajectoryRecord& base, double t0,
                             double t1, const SolverConfig& cfg, int reorth_every = 10);

struct FtleOptions {
  int k_probe = 4;
  int reorth_every = 10;
  double probe_tol = 1e-4;
  std::string base_tag = "user";  // "attractor" when u0 = a(w)
};

struct FtleReport {
  std::string base_tag;
  double alpha = 0.0;
  int k = 0;                                // number of reported indices
  std::vector<double> times;
  std::vector<std::vector<double>> lambda;  // [time][i] Lambda_{i+1}(t)
  std::vector<std::vector<double>> v;       // [time][j] V_{j+1}(t)
  std::vector<double> lambda_bounds;        // alpha - lambda_i
  std::vector<double> volume_bounds;        // sum_{i<=j} (alpha - lambda_i)
  // ftle_top only: estimate with 2 k_probe directions and the agreement flag
  std::vector<double> lambda_wide;
  bool probe_converged = true;
  double probe_gap = 0.0;

  /// max over times of V_j(t) - sum_{i<=j}(alpha - lambda_i).
  double max_volume_violation(int j) const;
  /// max over times of Lambda_1(t) - (alpha - lambda_1).
  double max_lambda1_violation() const;
};

/// Lambda_1 on t_grid (times > 0, increasing) along the trajectory from u0
/// at time 0: log of the top singular value of D phi^t restricted to
/// span(e_1..e_kprobe), divided by t. A second estimate from 2 k_probe
/// directions sets probe_converged.
FtleReport ftle_top(const NoisePath& path, const SpectralField& u0,
                    const std::vector<double>& t_grid, const SolverConfig& cfg,
                    const FtleOptions& opts = {});
FtleReport ftle_top_along(const TrajectoryRecord& base, const std::vector<double>& t_grid,
                          const SolverConfig& cfg, const FtleOptions& opts = {});

/// V_1..V_k and Lambda_1..Lambda_k from a k-frame started at (e_1..e_k).
FtleReport volume_growth(const NoisePath& path, const SpectralField& u0, int k,
                         const std::vector<double>& t_grid, const SolverConfig& cfg,
                         const FtleOptions& opts = {});
FtleReport volume_growth_along(const TrajectoryRecord& base, int k,
                               const std::vector<double>& t_grid, const SolverConfig& cfg,
                               const FtleOptions& opts = {});

/// CSV with columns t,k,lambda_k,v_k,bound_k (bound_k = sum_{i<=k}(alpha -
/// lambda_i)).
void write_ftle_csv(const FtleReport& report, std::ostream& out,
                    const std::string& header_comment = {});

}  // namespace chafee

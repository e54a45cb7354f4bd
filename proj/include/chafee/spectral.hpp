#pragma once

// Truncated Dirichlet sine basis on [0, L].
//
// Coefficients are stored against the L2-orthonormal functions
//   e_k(x) = sqrt(2/L) sin(k pi x / X),  k = 1..N,
// where the half-period X is L/2 under BasisConvention::PaperTwoPi
// (e_k ~ sin(2 pi k x / L), lambda_k = (2 pi k / L)^2) and L under
// BasisConvention::StandardDirichlet (lambda_k = (pi k / L)^2).
//
// Products are evaluated by collocation on the 2N+1 interior points
// x_m = m X / P, P = 2N+2, of [0, X]. A cubic of an N-mode field has
// frequencies up to 3N, and the discrete sine transform on this grid
// aliases frequency j onto 2P - j >= N + 4, so the first N coefficients of
// every cubic product are exact (no aliasing).

#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace chafee {

enum class BasisConvention { PaperTwoPi, StandardDirichlet };

struct DomainSpec {
  double length = 6.283185307179586;
  int modes = 64;
  BasisConvention basis = BasisConvention::PaperTwoPi;
};

/// Immutable basis tables for one DomainSpec; shared between fields.
class Domain {
 public:
  explicit Domain(DomainSpec spec);
  static std::shared_ptr<const Domain> make(DomainSpec spec);

  const DomainSpec& spec() const { return spec_; }
  int modes() const { return spec_.modes; }
  double length() const { return spec_.length; }
  double half_period() const { return half_period_; }

  /// lambda_k for 1 <= k <= N; throws std::out_of_range otherwise.
  double eigenvalue(int k) const;
  std::span<const double> eigenvalues() const { return eigenvalues_; }

  int grid_size() const { return grid_size_; }
  std::span<const double> grid_points() const { return grid_points_; }
  /// Quadrature weight: integral over [0, L] of f ~ weight * sum_m f(x_m) for
  /// f vanishing at the endpoints of [0, X] (exact for trigonometric
  /// polynomials of degree < 2P).
  double grid_weight() const { return grid_weight_; }

  /// Values of the field on the collocation grid.
  void synthesize(std::span<const double> coeffs, std::span<double> grid) const;
  /// Values of the x-derivative of the field on the collocation grid.
  void synthesize_derivative(std::span<const double> coeffs, std::span<double> grid) const;
  /// First N sine coefficients of grid data (discrete sine transform).
  void analyze(std::span<const double> grid, std::span<double> coeffs) const;

  /// Batched synthesize/analyze over `count` fields stored back to back
  /// (N resp. grid_size values each). Bit-identical to the single forms.
  void synthesize_many(std::span<const double> coeffs, std::size_t count,
                       std::span<double> grid) const;
  void analyze_many(std::span<const double> grid, std::size_t count,
                    std::span<double> coeffs) const;

  /// Direct evaluation of the series at an arbitrary x in [0, L].
  double evaluate(std::span<const double> coeffs, double x) const;
  /// e_k(x), 1-based.
  double basis_function(int k, double x) const;

 private:
  DomainSpec spec_;
  double half_period_;
  int grid_size_;
  double grid_weight_;
  std::vector<double> eigenvalues_;
  std::vector<double> grid_points_;
  std::vector<double> synth_;     // grid_size x N
  std::vector<double> deriv_;     // grid_size x N
  std::vector<double> analysis_;  // N x grid_size
};

double eigenvalue(int k, const DomainSpec& d);

/// A function in the truncated space: coefficients u_1..u_N.
class SpectralField {
 public:
  explicit SpectralField(std::shared_ptr<const Domain> domain);
  SpectralField(std::shared_ptr<const Domain> domain, std::vector<double> coeffs);

  /// Unit vector e_k (1-based).
  static SpectralField unit(std::shared_ptr<const Domain> domain, int k);

  const Domain& domain() const { return *domain_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
  int modes() const { return static_cast<int>(coeffs_.size()); }

  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  const std::vector<double>& values() const { return coeffs_; }

  /// 1-based coefficient access.
  double coeff(int k) const { return coeffs_.at(static_cast<std::size_t>(k - 1)); }
  double& coeff(int k) { return coeffs_.at(static_cast<std::size_t>(k - 1)); }

  bool is_finite() const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  SpectralField operator-() const;
  friend bool operator==(const SpectralField& a, const SpectralField& b) {
    return a.coeffs_ == b.coeffs_;
  }

 private:
  void check_same_domain(const SpectralField& o) const;

  std::shared_ptr<const Domain> domain_;
  std::vector<double> coeffs_;
};

double inner(const SpectralField& a, const SpectralField& b);
double h_norm(const SpectralField& u);
double v_norm(const SpectralField& u);
double h_norm(std::span<const double> coeffs);
double v_norm(std::span<const double> coeffs, const Domain& domain);

/// (Pi_k u, Pi_k^perp u): split after the first k modes.
std::pair<SpectralField, SpectralField> project_span(const SpectralField& u, int k);

/// Galerkin projection of the pointwise cube u^3.
SpectralField cubic(const SpectralField& u);

/// Galerkin projection of the pointwise product b * v.
SpectralField multiply_pointwise(const SpectralField& b, const SpectralField& v);

/// Grid values of the field.
std::vector<double> to_grid(const SpectralField& u);

/// V-norm of the full (untruncated) function scale * u^2, i.e. the L2 norm of
/// its derivative, computed exactly by quadrature of (2 scale u u')^2.
double square_v_norm(const SpectralField& u, double scale = 1.0);

/// sup_x |u(x)| / ||u||_V over the truncated space, from the pointwise Riesz
/// representer sqrt(sum_k e_k(x)^2 / lambda_k).
double sobolev_constant(const Domain& domain);

/// The same supremum over all of H^1_0 functions that vanish at the nodes of
/// the basis (0, X, 2X, ...): X / (2 sqrt(L)). Bounds the truncated constant.
double sobolev_constant_continuum(const Domain& domain);

}  // namespace chafee

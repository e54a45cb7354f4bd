#pragma once

// Mittag-Leffler function and the singular Gronwall machinery.
//
//   E_a(z) = sum_{n>=0} z^n / Gamma(a n + 1),   0 < a <= 1, z >= 0.
//
// Gamma values come from std::lgamma/std::tgamma.

#include <span>
#include <vector>

namespace chafee {

struct MlParams {
  double series_tol = 1e-16;  // relative bound on the neglected tail
  int max_terms = 5000;
};

/// E_order(z) for z >= 0 and 0 < order <= 1. Throws ConvergenceError if the
/// tail bound does not drop below tolerance within max_terms, DomainError for
/// z < 0 or an order outside (0, 1].
double mittag_leffler(double z, double order, const MlParams& p = {});

/// d/dz E_order(z) = sum_{n>=1} n z^{n-1} / Gamma(a n + 1).
double mittag_leffler_derivative(double z, double order, const MlParams& p = {});

/// B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b).
double beta_function(double a, double b);

enum class GronwallForm { Nondecreasing, General };

/// Bound on f from f(t) <= a(t) + L int_0^t (t-s)^-beta f(s) ds.
///   Nondecreasing: a(t) E_{1-beta}(L Gamma(1-beta) t^{1-beta}).
///   General:       a(t) + int_0^t K(t-s) a(s) ds with the resolvent kernel
///                  K(r) = d/dr E_{1-beta}(L Gamma(1-beta) r^{1-beta}),
///                  integrated after the substitution rho = (t-s)^{1-beta},
///                  which turns K(r) dr into L Gamma(1-beta) E'(L Gamma rho) drho.
/// `a` is tabulated on the increasing grid `t` (t[0] = 0) and interpolated
/// linearly in between.
std::vector<double> gronwall_bound(std::span<const double> a, double L, double beta,
                                   std::span<const double> t, GronwallForm form,
                                   int quad_points = 2000, const MlParams& p = {});

/// int_0^t e^{mu s} (t - s)^{-1/2} ds, via s = t - r^2.
double singular_exp_integral(double mu, double t, int quad_points = 400);

/// V-norm envelope for the OU-subtracted equation on an event where
/// sup |z|_V <= eta, with mu = lambda_1 - alpha > 0 and Lipschitz constant l:
///   e^{-mu t} ( u0 E_{1/2}(l G t^{1/2}) + l eta int_0^t e^{mu s}(t-s)^{-1/2} ds
///               + eta int_0^t K(t-tau) e^{mu tau} dtau ),   G = Gamma(1/2),
/// K the resolvent kernel above with beta = 1/2. Throws DomainError when
/// mu <= 0.
std::vector<double> h1_envelope(double u0_norm, double eta, double lipschitz_l, double mu,
                                std::span<const double> t, const MlParams& p = {});

}  // namespace chafee

#include "chafee/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "chafee/errors.hpp"

namespace chafee {

namespace {

void check_args(double z, double order) {
  if (!(z >= 0.0) || !std::isfinite(z)) {
    throw DomainError("Mittag-Leffler argument must be finite and >= 0");
  }
  if (!(order > 0.0 && order <= 1.0)) throw DomainError("Mittag-Leffler order must lie in (0, 1]");
}

// log of z^m / Gamma(order * n + 1) with m = n - shift, as used by both series.
double log_term(double log_z, int n, int power, double order) {
  return power * log_z - std::lgamma(order * n + 1.0);
}

// Sum of exp(log_term) over n >= first, with prefactor n^deriv. The terms
// eventually decrease with a nonincreasing ratio, so once the ratio rho of
// the last two terms is below one the tail is at most next * rho / (1 - rho).
double series(double z, double order, int deriv, const MlParams& p) {
  const int first = deriv;
  if (z == 0.0) return deriv == 0 ? 1.0 : 1.0 / std::tgamma(order + 1.0);
  const double log_z = std::log(z);
  auto term = [&](int n) {
    const double pre = deriv == 0 ? 1.0 : static_cast<double>(n);
    return pre * std::exp(log_term(log_z, n, n - deriv, order));
  };
  double sum = 0.0;
  double prev = 0.0;
  for (int n = first; n < first + p.max_terms; ++n) {
    const double t = term(n);
    sum += t;
    if (n > first && t < prev) {
      const double next = term(n + 1);
      const double rho = next / t;
      if (rho < 1.0) {
        const double tail = next / (1.0 - rho);
        if (tail <= p.series_tol * std::max(1.0, sum)) return sum + next;
      }
    }
    prev = t;
  }
  throw ConvergenceError("Mittag-Leffler series did not converge for z = " + std::to_string(z));
}

}  // namespace

double mittag_leffler(double z, double order, const MlParams& p) {
  check_args(z, order);
  if (order == 1.0) return std::exp(z);
  return series(z, order, 0, p);
}

double mittag_leffler_derivative(double z, double order, const MlParams& p) {
  check_args(z, order);
  if (order == 1.0) return std::exp(z);
  return series(z, order, 1, p);
}

double beta_function(double a, double b) {
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

namespace {

double interp(std::span<const double> x, std::span<const double> y, double t) {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - x.begin());
  const double w = (t - x[j - 1]) / (x[j] - x[j - 1]);
  return (1.0 - w) * y[j - 1] + w * y[j];
}

// Composite Simpson rule of g on [0, b] with n (even) panels.
template <typename G>
double simpson(G&& g, double b, int n) {
  if (b <= 0.0) return 0.0;
  if (n % 2) ++n;
  const double h = b / n;
  double s = g(0.0) + g(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return s * h / 3.0;
}

}  // namespace

std::vector<double> gronwall_bound(std::span<const double> a, double L, double beta,
                                   std::span<const double> t, GronwallForm form, int quad_points,
                                   const MlParams& p) {
  if (a.size() != t.size() || t.empty()) throw std::invalid_argument("gronwall_bound: size mismatch");
  if (!(L >= 0.0)) throw DomainError("gronwall_bound: L must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("gronwall_bound: beta must lie in [0, 1)");
  for (double v : a) {
    if (!(v >= 0.0)) throw DomainError("gronwall_bound: a must be nonnegative");
  }
  const double order = 1.0 - beta;
  const double c = L * std::tgamma(order);
  std::vector<double> out(t.size());
  if (form == GronwallForm::Nondecreasing) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      out[i] = a[i] * mittag_leffler(c * std::pow(t[i], order), order, p);
    }
    return out;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    double integral = 0.0;
    if (L > 0.0 && t[i] > 0.0) {
      const double upper = std::pow(t[i], order);
      auto g = [&](double rho) {
        const double s = t[i] - std::pow(rho, 1.0 / order);
        return mittag_leffler_derivative(c * rho, order, p) * interp(t, a, std::max(s, 0.0));
      };
      integral = c * simpson(g, upper, quad_points);
    }
    out[i] = a[i] + integral;
  }
  return out;
}

double singular_exp_integral(double mu, double t, int quad_points) {
  if (t <= 0.0) return 0.0;
  // s = t - r^2: ds = -2r dr, (t-s)^{-1/2} = 1/r.
  return 2.0 * simpson([&](double r) { return std::exp(mu * (t - r * r)); }, std::sqrt(t),
                       quad_points);
}

std::vector<double> h1_envelope(double u0_norm, double eta, double lipschitz_l, double mu,
                                std::span<const double> t, const MlParams& p) {
  if (!(mu > 0.0)) throw DomainError("envelope not applicable: mu = lambda_1 - alpha <= 0");
  if (!(eta >= 0.0) || !(u0_norm >= 0.0) || !(lipschitz_l >= 0.0)) {
    throw DomainError("envelope needs nonnegative u0, eta and l");
  }
  const double g = std::sqrt(std::numbers::pi);  // Gamma(1/2)
  const double c = lipschitz_l * g;
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = t[i];
    if (ti < 0.0) throw DomainError("envelope time must be >= 0");
    const double root = std::sqrt(ti);
    const int panels = 400;
    // Both integrals carry the factor e^{mu t}, which cancels against the
    // e^{-mu t} prefactor, so the integrands below use e^{-mu rho^2} only.
    const double j = 2.0 * simpson([&](double r) { return std::exp(-mu * r * r); }, root, panels);
    double k_term = 0.0;
    if (c > 0.0 && eta > 0.0) {
      k_term = c * simpson([&](double rho) {
        return mittag_leffler_derivative(c * rho, 0.5, p) * std::exp(-mu * rho * rho);
      }, root, panels);
    }
    out[i] = u0_norm * std::exp(-mu * ti) * mittag_leffler(c * root, 0.5, p) +
             lipschitz_l * eta * j + eta * k_term;
  }
  return out;
}

}  // namespace chafee

#include "chafee/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "chafee/errors.hpp"
#include "chafee/simd/kernels.hpp"

namespace chafee {

namespace {

double half_period_of(const DomainSpec& d) {
  return d.basis == BasisConvention::PaperTwoPi ? 0.5 * d.length : d.length;
}

void validate(const DomainSpec& d) {
  if (!(d.length > 0.0) || !std::isfinite(d.length)) {
    throw ConfigError("domain length must be positive and finite");
  }
  if (d.modes < 1) throw ConfigError("domain must retain at least one mode");
}

}  // namespace

double eigenvalue(int k, const DomainSpec& d) {
  validate(d);
  if (k < 1 || k > d.modes) {
    throw std::out_of_range("mode index " + std::to_string(k) + " outside 1.." +
                            std::to_string(d.modes));
  }
  const double w = std::numbers::pi * k / half_period_of(d);
  return w * w;
}

Domain::Domain(DomainSpec spec) : spec_(spec) {
  validate(spec_);
  const int n = spec_.modes;
  const int p = 2 * n + 2;
  half_period_ = half_period_of(spec_);
  grid_size_ = p - 1;
  grid_weight_ = spec_.length / p;

  eigenvalues_.resize(n);
  for (int k = 1; k <= n; ++k) eigenvalues_[k - 1] = chafee::eigenvalue(k, spec_);

  grid_points_.resize(grid_size_);
  for (int m = 1; m <= grid_size_; ++m) grid_points_[m - 1] = half_period_ * m / p;

  const double norm = std::sqrt(2.0 / spec_.length);
  synth_.assign(static_cast<std::size_t>(grid_size_) * n, 0.0);
  deriv_.assign(static_cast<std::size_t>(grid_size_) * n, 0.0);
  analysis_.assign(static_cast<std::size_t>(n) * grid_size_, 0.0);
  for (int m = 1; m <= grid_size_; ++m) {
    for (int k = 1; k <= n; ++k) {
      // Reduce k*m mod 2p before taking the angle so the tables are accurate
      // to the last bit for large grids.
      const long km = (static_cast<long>(k) * m) % (2L * p);
      const double angle = std::numbers::pi * static_cast<double>(km) / p;
      const double s = norm * std::sin(angle);
      const double c = norm * (std::numbers::pi * k / half_period_) * std::cos(angle);
      synth_[static_cast<std::size_t>(m - 1) * n + (k - 1)] = s;
      deriv_[static_cast<std::size_t>(m - 1) * n + (k - 1)] = c;
      analysis_[static_cast<std::size_t>(k - 1) * grid_size_ + (m - 1)] = grid_weight_ * s;
    }
  }
}

std::shared_ptr<const Domain> Domain::make(DomainSpec spec) {
  return std::make_shared<const Domain>(spec);
}

double Domain::eigenvalue(int k) const {
  if (k < 1 || k > spec_.modes) {
    throw std::out_of_range("mode index " + std::to_string(k) + " outside 1.." +
                            std::to_string(spec_.modes));
  }
  return eigenvalues_[k - 1];
}

void Domain::synthesize(std::span<const double> coeffs, std::span<double> grid) const {
  if (coeffs.size() != static_cast<std::size_t>(modes()) ||
      grid.size() != static_cast<std::size_t>(grid_size_)) {
    throw std::invalid_argument("synthesize: size mismatch");
  }
  simd::kernels().matvec(synth_.data(), grid_size_, modes(), modes(), coeffs.data(), grid.data());
}

void Domain::synthesize_derivative(std::span<const double> coeffs, std::span<double> grid) const {
  if (coeffs.size() != static_cast<std::size_t>(modes()) ||
      grid.size() != static_cast<std::size_t>(grid_size_)) {
    throw std::invalid_argument("synthesize_derivative: size mismatch");
  }
  simd::kernels().matvec(deriv_.data(), grid_size_, modes(), modes(), coeffs.data(), grid.data());
}

void Domain::analyze(std::span<const double> grid, std::span<double> coeffs) const {
  if (coeffs.size() != static_cast<std::size_t>(modes()) ||
      grid.size() != static_cast<std::size_t>(grid_size_)) {
    throw std::invalid_argument("analyze: size mismatch");
  }
  simd::kernels().matvec(analysis_.data(), modes(), grid_size_, grid_size_, grid.data(),
                         coeffs.data());
}

void Domain::synthesize_many(std::span<const double> coeffs, std::size_t count,
                             std::span<double> grid) const {
  const auto n = static_cast<std::size_t>(modes());
  const auto g = static_cast<std::size_t>(grid_size_);
  if (coeffs.size() != count * n || grid.size() != count * g) {
    throw std::invalid_argument("synthesize_many: size mismatch");
  }
  simd::kernels().matmat(synth_.data(), g, n, n, coeffs.data(), n, count, grid.data(), g);
}

void Domain::analyze_many(std::span<const double> grid, std::size_t count,
                          std::span<double> coeffs) const {
  const auto n = static_cast<std::size_t>(modes());
  const auto g = static_cast<std::size_t>(grid_size_);
  if (coeffs.size() != count * n || grid.size() != count * g) {
    throw std::invalid_argument("analyze_many: size mismatch");
  }
  simd::kernels().matmat(analysis_.data(), n, g, g, grid.data(), g, count, coeffs.data(), n);
}

double Domain::basis_function(int k, double x) const {
  return std::sqrt(2.0 / spec_.length) * std::sin(std::numbers::pi * k * x / half_period_);
}

double Domain::evaluate(std::span<const double> coeffs, double x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    s += coeffs[k] * basis_function(static_cast<int>(k) + 1, x);
  }
  return s;
}

// ---------------------------------------------------------------------------

SpectralField::SpectralField(std::shared_ptr<const Domain> domain)
    : domain_(std::move(domain)) {
  if (!domain_) throw std::invalid_argument("SpectralField: null domain");
  coeffs_.assign(static_cast<std::size_t>(domain_->modes()), 0.0);
}

SpectralField::SpectralField(std::shared_ptr<const Domain> domain, std::vector<double> coeffs)
    : domain_(std::move(domain)), coeffs_(std::move(coeffs)) {
  if (!domain_) throw std::invalid_argument("SpectralField: null domain");
  if (coeffs_.size() != static_cast<std::size_t>(domain_->modes())) {
    throw std::invalid_argument("SpectralField: expected " + std::to_string(domain_->modes()) +
                                " coefficients, got " + std::to_string(coeffs_.size()));
  }
}

SpectralField SpectralField::unit(std::shared_ptr<const Domain> domain, int k) {
  SpectralField f(std::move(domain));
  f.coeff(k) = 1.0;
  return f;
}

bool SpectralField::is_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
}

void SpectralField::check_same_domain(const SpectralField& o) const {
  if (domain_ == o.domain_) return;
  const DomainSpec& a = domain_->spec();
  const DomainSpec& b = o.domain_->spec();
  if (a.modes != b.modes || a.length != b.length || a.basis != b.basis) {
    throw std::invalid_argument("SpectralField: domain mismatch");
  }
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  check_same_domain(o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  check_same_domain(o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

SpectralField SpectralField::operator-() const {
  SpectralField r = *this;
  for (double& c : r.coeffs_) c = -c;
  return r;
}

// ---------------------------------------------------------------------------

double inner(const SpectralField& a, const SpectralField& b) {
  if (a.modes() != b.modes()) throw std::invalid_argument("inner: size mismatch");
  return simd::kernels().dot(a.coeffs().data(), b.coeffs().data(), a.coeffs().size());
}

double h_norm(std::span<const double> coeffs) {
  return std::sqrt(simd::kernels().dot(coeffs.data(), coeffs.data(), coeffs.size()));
}

double v_norm(std::span<const double> coeffs, const Domain& domain) {
  const auto lambda = domain.eigenvalues();
  return std::sqrt(simd::kernels().weighted_sum_squares(lambda.data(), coeffs.data(), coeffs.size()));
}

double h_norm(const SpectralField& u) { return h_norm(u.coeffs()); }

double v_norm(const SpectralField& u) { return v_norm(u.coeffs(), u.domain()); }

std::pair<SpectralField, SpectralField> project_span(const SpectralField& u, int k) {
  if (k < 1 || k > u.modes()) throw std::out_of_range("project_span: k outside 1..N");
  SpectralField low(u.domain_ptr());
  SpectralField high(u.domain_ptr());
  for (int i = 1; i <= u.modes(); ++i) {
    if (i <= k) {
      low.coeff(i) = u.coeff(i);
    } else {
      high.coeff(i) = u.coeff(i);
    }
  }
  return {std::move(low), std::move(high)};
}

std::vector<double> to_grid(const SpectralField& u) {
  std::vector<double> g(static_cast<std::size_t>(u.domain().grid_size()));
  u.domain().synthesize(u.coeffs(), g);
  return g;
}

SpectralField cubic(const SpectralField& u) {
  const Domain& d = u.domain();
  std::vector<double> g = to_grid(u);
  simd::kernels().cube(g.data(), g.data(), g.size());
  SpectralField out(u.domain_ptr());
  d.analyze(g, out.coeffs());
  return out;
}

SpectralField multiply_pointwise(const SpectralField& b, const SpectralField& v) {
  if (b.modes() != v.modes()) throw std::invalid_argument("multiply_pointwise: size mismatch");
  const Domain& d = v.domain();
  std::vector<double> gb = to_grid(b);
  std::vector<double> gv = to_grid(v);
  simd::kernels().mul(gb.data(), gv.data(), gv.data(), gv.size());
  SpectralField out(v.domain_ptr());
  d.analyze(gv, out.coeffs());
  return out;
}

double square_v_norm(const SpectralField& u, double scale) {
  const Domain& d = u.domain();
  std::vector<double> g = to_grid(u);
  std::vector<double> dg(g.size());
  d.synthesize_derivative(u.coeffs(), dg);
  // (scale u^2)' = 2 scale u u'
  simd::kernels().mul(g.data(), dg.data(), g.data(), g.size());
  const double s = simd::kernels().dot(g.data(), g.data(), g.size());
  return 2.0 * std::abs(scale) * std::sqrt(d.grid_weight() * s);
}

double sobolev_constant(const Domain& domain) {
  // The representer sum is smooth in x; a fine uniform sweep of [0, X]
  // followed by a local golden-section refinement finds its maximum.
  const int n = domain.modes();
  auto riesz = [&](double x) {
    double s = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double e = domain.basis_function(k, x);
      s += e * e / domain.eigenvalue(k);
    }
    return std::sqrt(s);
  };
  const double x_end = domain.half_period();
  const int samples = 64 * n + 1;
  double best_x = 0.0;
  double best = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = x_end * i / samples;
    const double r = riesz(x);
    if (r > best) {
      best = r;
      best_x = x;
    }
  }
  double lo = std::max(0.0, best_x - x_end / samples);
  double hi = std::min(x_end, best_x + x_end / samples);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it) {
    const double a = hi - phi * (hi - lo);
    const double b = lo + phi * (hi - lo);
    if (riesz(a) > riesz(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return std::max(best, riesz(0.5 * (lo + hi)));
}

double sobolev_constant_continuum(const Domain& domain) {
  return domain.half_period() / (2.0 * std::sqrt(domain.length()));
}

}  // namespace chafee

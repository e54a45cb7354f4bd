#include "chafee/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "chafee/errors.hpp"
#include "chafee/simd/kernels.hpp"

namespace chafee {

void validate(const SolverConfig& cfg, const Domain& domain) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("solver dt must be positive");
  if (!std::isfinite(cfg.alpha)) throw ConfigError("solver alpha must be finite");
  if (cfg.cutoff_radius && !(*cfg.cutoff_radius > 0.0)) {
    throw ConfigError("cutoff radius must be positive");
  }
  if (!(cfg.blowup_threshold > 0.0)) throw ConfigError("blow-up threshold must be positive");
  if (cfg.scheme == Scheme::SemiImplicitEuler) {
    for (int k = 1; k <= domain.modes(); ++k) {
      if (1.0 + cfg.dt * (domain.eigenvalue(k) - cfg.alpha) <= 0.0) {
        throw ConfigError("semi-implicit step is singular: dt (lambda_k - alpha) <= -1");
      }
    }
  }
}

double cutoff_theta(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double s = r - 1.0;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

double cutoff_theta_prime(double r) {
  if (r <= 1.0 || r >= 2.0) return 0.0;
  const double s = r - 1.0;
  return 6.0 * s * (s - 1.0);
}

double phi1(double z) {
  if (z == 0.0) return 1.0;
  return std::expm1(z) / z;
}

Integrator::Integrator(std::shared_ptr<const Domain> domain, SolverConfig cfg)
    : domain_(std::move(domain)), cfg_(cfg) {
  if (!domain_) throw std::invalid_argument("Integrator: null domain");
  validate(cfg_, *domain_);
  const int n = domain_->modes();
  decay_.resize(n);
  gain_.resize(n);
  for (int k = 1; k <= n; ++k) {
    const double a = cfg_.alpha - domain_->eigenvalue(k);
    if (cfg_.scheme == Scheme::ExponentialEuler) {
      decay_[k - 1] = std::exp(a * cfg_.dt);
      gain_[k - 1] = phi1(a * cfg_.dt) * cfg_.dt;
    } else {
      decay_[k - 1] = 1.0 / (1.0 - cfg_.dt * a);
      gain_[k - 1] = decay_[k - 1] * cfg_.dt;
    }
  }
  grid_.resize(domain_->grid_size());
  multiplier_.assign(domain_->grid_size(), 0.0);
  f_.resize(n);
  w_.resize(n);
  base_cube_.assign(n, 0.0);
  base_grad_.assign(n, 0.0);
}

void Integrator::nonlinearity(std::span<const double> u, std::span<double> out) {
  const auto& K = simd::kernels();
  const std::size_t n = u.size();
  if (cfg_.linear) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  double theta = 1.0;
  if (cfg_.cutoff_radius) {
    theta = cutoff_theta(v_norm(u, *domain_) / *cfg_.cutoff_radius);
    if (theta == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
  }
  domain_->synthesize(u, grid_);
  K.cube(grid_.data(), grid_.data(), grid_.size());
  domain_->analyze(grid_, out);
  K.scale(-theta, out.data(), n);
}

void Integrator::check_state(std::span<const double> u, double t) const {
  const double h = h_norm(u);
  if (!std::isfinite(h) || h > cfg_.blowup_threshold) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "solution blew up at t = %.6g (|u|_H = %.3g)", t, h);
    throw BlowUpError(buf, t);
  }
}

void Integrator::step_spde(std::span<const double> u, std::span<const double> dw,
                           std::span<double> out, double t) {
  nonlinearity(u, f_);
  simd::kernels().diagonal_step(decay_.data(), gain_.data(), u.data(),
                                dw.empty() ? nullptr : dw.data(), f_.data(), out.data(), u.size());
  check_state(out, t + cfg_.dt);
}

void Integrator::step_spde_many(std::span<const double> u, std::size_t count,
                                std::span<const double> dw, std::span<double> out, double t) {
  const auto n = static_cast<std::size_t>(modes());
  if (u.size() != count * n || out.size() != count * n) {
    throw std::invalid_argument("step_spde_many: size mismatch");
  }
  if (cfg_.cutoff_radius || cfg_.linear) {
    // theta differs per member; fall back to single steps
    for (std::size_t j = 0; j < count; ++j) {
      step_spde(u.subspan(j * n, n), dw, out.subspan(j * n, n), t);
    }
    return;
  }
  const auto& K = simd::kernels();
  const auto g = static_cast<std::size_t>(domain_->grid_size());
  batch_grid_.resize(count * g);
  batch_f_.resize(count * n);
  domain_->synthesize_many(u, count, batch_grid_);
  K.cube(batch_grid_.data(), batch_grid_.data(), batch_grid_.size());
  domain_->analyze_many(batch_grid_, count, batch_f_);
  for (std::size_t j = 0; j < count; ++j) {
    double* f = batch_f_.data() + j * n;
    K.scale(-1.0, f, n);
    K.diagonal_step(decay_.data(), gain_.data(), u.data() + j * n,
                    dw.empty() ? nullptr : dw.data(), f, out.data() + j * n, n);
    check_state(out.subspan(j * n, n), t + cfg_.dt);
  }
}

void Integrator::step_random_pde(std::span<const double> ut, std::span<const double> z,
                                 std::span<double> out, double t) {
  const std::size_t n = ut.size();
  for (std::size_t i = 0; i < n; ++i) w_[i] = ut[i] + z[i];
  nonlinearity(w_, f_);
  simd::kernels().diagonal_step(decay_.data(), gain_.data(), ut.data(), nullptr, f_.data(),
                                out.data(), n);
  check_state(out, t + cfg_.dt);
}

void Integrator::set_base(std::span<const double> u_base) {
  const auto& K = simd::kernels();
  base_has_correction_ = false;
  base_is_zero_ = cfg_.linear;
  if (cfg_.linear) return;
  double theta = 1.0;
  double r = 0.0;
  if (cfg_.cutoff_radius) {
    r = v_norm(u_base, *domain_) / *cfg_.cutoff_radius;
    theta = cutoff_theta(r);
  }
  domain_->synthesize(u_base, grid_);
  K.scaled_square(grid_.data(), 3.0 * theta, multiplier_.data(), grid_.size());
  const double dtheta = cfg_.cutoff_radius ? cutoff_theta_prime(r) : 0.0;
  if (dtheta != 0.0) {
    // d/du [theta(|u|_V/R) u^3] v = theta 3u^2 v + theta'(r)/R <u,v>_V/|u|_V u^3
    const double vn = v_norm(u_base, *domain_);
    K.cube(grid_.data(), grid_.data(), grid_.size());
    domain_->analyze(grid_, base_cube_);
    const auto lambda = domain_->eigenvalues();
    for (int k = 0; k < modes(); ++k) {
      base_grad_[k] = dtheta / *cfg_.cutoff_radius * lambda[k] * u_base[k] / vn;
    }
    base_has_correction_ = true;
  }
  base_is_zero_ = theta == 0.0 && !base_has_correction_;
}

void Integrator::step_variational(std::span<const double> v, std::span<double> out, double t) {
  const auto& K = simd::kernels();
  const std::size_t n = v.size();
  if (base_is_zero_) {
    std::fill(f_.begin(), f_.end(), 0.0);
  } else {
    domain_->synthesize(v, grid_);
    K.mul(multiplier_.data(), grid_.data(), grid_.data(), grid_.size());
    domain_->analyze(grid_, f_);
    if (base_has_correction_) {
      const double c = K.dot(base_grad_.data(), v.data(), n);
      K.axpy(c, base_cube_.data(), f_.data(), n);
    }
    K.scale(-1.0, f_.data(), n);
  }
  K.diagonal_step(decay_.data(), gain_.data(), v.data(), nullptr, f_.data(), out.data(), n);
  check_state(out, t + cfg_.dt);
}

void Integrator::step_variational_many(std::span<const double> v, std::size_t count,
                                       std::span<double> out, double t) {
  const auto n = static_cast<std::size_t>(modes());
  if (v.size() != count * n || out.size() != count * n) {
    throw std::invalid_argument("step_variational_many: size mismatch");
  }
  if (base_is_zero_) {
    for (std::size_t j = 0; j < count; ++j) {
      step_variational(v.subspan(j * n, n), out.subspan(j * n, n), t);
    }
    return;
  }
  const auto& K = simd::kernels();
  const auto g = static_cast<std::size_t>(domain_->grid_size());
  batch_grid_.resize(count * g);
  batch_f_.resize(count * n);
  domain_->synthesize_many(v, count, batch_grid_);
  for (std::size_t j = 0; j < count; ++j) {
    double* x = batch_grid_.data() + j * g;
    K.mul(multiplier_.data(), x, x, g);
  }
  domain_->analyze_many(batch_grid_, count, batch_f_);
  for (std::size_t j = 0; j < count; ++j) {
    double* f = batch_f_.data() + j * n;
    const double* vj = v.data() + j * n;
    if (base_has_correction_) {
      const double c = K.dot(base_grad_.data(), vj, n);
      K.axpy(c, base_cube_.data(), f, n);
    }
    K.scale(-1.0, f, n);
    K.diagonal_step(decay_.data(), gain_.data(), vj, nullptr, f, out.data() + j * n, n);
    check_state(out.subspan(j * n, n), t + cfg_.dt);
  }
}

// ---------------------------------------------------------------------------

SpectralField step_spde(const SpectralField& u, std::span<const double> dw, const SolverConfig& cfg) {
  Integrator it(u.domain_ptr(), cfg);
  SpectralField out(u.domain_ptr());
  it.step_spde(u.coeffs(), dw, out.coeffs(), 0.0);
  return out;
}

SpectralField step_random_pde(const SpectralField& ut, const OuState& z, const SolverConfig& cfg) {
  Integrator it(ut.domain_ptr(), cfg);
  SpectralField out(ut.domain_ptr());
  it.step_random_pde(ut.coeffs(), z.z.coeffs(), out.coeffs(), 0.0);
  return out;
}

SpectralField step_variational(const SpectralField& v, const SpectralField& u_base,
                               const SolverConfig& cfg) {
  Integrator it(v.domain_ptr(), cfg);
  it.set_base(u_base.coeffs());
  SpectralField out(v.domain_ptr());
  it.step_variational(v.coeffs(), out.coeffs(), 0.0);
  return out;
}

namespace {

struct StepRange {
  std::int64_t first;
  std::int64_t end;
};

StepRange step_range(const NoisePath& path, double t0, double t1, const SolverConfig& cfg) {
  if (std::abs(path.dt() - cfg.dt) > 1e-12 * cfg.dt) {
    throw ConfigError("noise path dt does not match solver dt");
  }
  if (t1 < t0) throw std::invalid_argument("integrate: t1 < t0");
  StepRange r{path.step_of(t0), path.step_of(t1)};
  if (r.end > r.first && (!path.contains(r.first) || !path.contains(r.end - 1))) {
    throw std::out_of_range("integration window exceeds the noise path");
  }
  return r;
}

}  // namespace

TrajectoryRecord integrate(const SpectralField& u0, const NoisePath& path, double t0, double t1,
                           const SolverConfig& cfg, int record_every) {
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  const StepRange r = step_range(path, t0, t1, cfg);
  Integrator it(u0.domain_ptr(), cfg);
  TrajectoryRecord rec;
  rec.domain = u0.domain_ptr();
  rec.dt = cfg.dt;
  const std::int64_t steps = r.end - r.first;
  rec.times.reserve(static_cast<std::size_t>(steps / record_every + 2));
  rec.states.reserve(rec.times.capacity());
  rec.v_norms.reserve(rec.times.capacity());

  std::vector<double> u(u0.values());
  std::vector<double> next(u.size());
  auto push = [&](std::int64_t i) {
    rec.times.push_back(t0 + static_cast<double>(i) * cfg.dt);
    rec.states.push_back(u);
    rec.v_norms.push_back(v_norm(u, *rec.domain));
  };
  push(0);
  for (std::int64_t i = 0; i < steps; ++i) {
    const double t = t0 + static_cast<double>(i) * cfg.dt;
    it.step_spde(u, path.increment(r.first + i), next, t);
    u.swap(next);
    if ((i + 1) % record_every == 0 || i + 1 == steps) push(i + 1);
  }
  return rec;
}

SpectralField integrate_final(const SpectralField& u0, const NoisePath& path, double t0, double t1,
                              const SolverConfig& cfg) {
  const StepRange r = step_range(path, t0, t1, cfg);
  Integrator it(u0.domain_ptr(), cfg);
  std::vector<double> u(u0.values());
  std::vector<double> next(u.size());
  for (std::int64_t i = r.first; i < r.end; ++i) {
    it.step_spde(u, path.increment(i), next, t0 + static_cast<double>(i - r.first) * cfg.dt);
    u.swap(next);
  }
  return SpectralField(u0.domain_ptr(), std::move(u));
}

std::vector<std::vector<double>> integrate_ensemble_final(
    Integrator& integrator, const std::vector<std::vector<double>>& u0, const NoisePath& path,
    std::int64_t first_step, std::int64_t end_step) {
  const auto n = static_cast<std::size_t>(integrator.modes());
  const std::size_t count = u0.size();
  std::vector<double> u(count * n);
  for (std::size_t j = 0; j < count; ++j) {
    if (u0[j].size() != n) throw std::invalid_argument("ensemble member size mismatch");
    std::copy(u0[j].begin(), u0[j].end(), u.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  std::vector<double> next(u.size());
  const double dt = integrator.config().dt;
  for (std::int64_t i = first_step; i < end_step; ++i) {
    integrator.step_spde_many(u, count, path.increment(i), next, static_cast<double>(i) * dt);
    u.swap(next);
  }
  std::vector<std::vector<double>> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    out[j].assign(u.begin() + static_cast<std::ptrdiff_t>(j * n),
                  u.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
  }
  return out;
}

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& out,
                          const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "time,mode,coefficient\n";
  char buf[96];
  for (std::size_t i = 0; i < rec.size(); ++i) {
    for (std::size_t k = 0; k < rec.states[i].size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g\n", rec.times[i], k + 1, rec.states[i][k]);
      out << buf;
    }
  }
}

// Layout: magic "CHAFTR01", int32 modes, int64 records, double dt, then per
// record: double time followed by `modes` doubles.
void write_trajectory_binary(const TrajectoryRecord& rec, std::ostream& out,
                             const std::string& header) {
  static constexpr char magic[8] = {'C', 'H', 'A', 'F', 'T', 'R', '0', '2'};
  out.write(magic, sizeof magic);
  const auto length = static_cast<std::uint32_t>(header.size());
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const std::int32_t modes = rec.domain ? rec.domain->modes() : 0;
  const std::int64_t records = static_cast<std::int64_t>(rec.size());
  out.write(reinterpret_cast<const char*>(&modes), sizeof modes);
  out.write(reinterpret_cast<const char*>(&records), sizeof records);
  out.write(reinterpret_cast<const char*>(&rec.dt), sizeof rec.dt);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    out.write(reinterpret_cast<const char*>(&rec.times[i]), sizeof(double));
    out.write(reinterpret_cast<const char*>(rec.states[i].data()),
              static_cast<std::streamsize>(rec.states[i].size() * sizeof(double)));
  }
}

}  // namespace chafee

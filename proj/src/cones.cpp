#include "chafee/cones.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "chafee/errors.hpp"

namespace chafee {

ConeParams ConeParams::coupled(double epsilon, double M) {
  if (!(epsilon > 0.0)) throw ConfigError("cone epsilon must be positive");
  ConeParams p;
  p.delta = std::sqrt(epsilon);
  p.epsilon = epsilon;
  p.M = M;
  return p;
}

double q_delta(std::span<const double> v, double delta) {
  if (v.empty()) return 0.0;
  double rest = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) rest += v[i] * v[i];
  return delta * v[0] * v[0] - rest;
}

double q_delta(const SpectralField& v, double delta) { return q_delta(v.coeffs(), delta); }

double q_delta_k(const WedgeVector& v, double delta, int k) {
  if (v.grade() != k) throw std::invalid_argument("q_delta_k: grade mismatch");
  // i0 = (1..k) has lexicographic rank 0
  const auto c = v.coeffs();
  double rest = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) rest += c[i] * c[i];
  return delta * c[0] * c[0] - rest;
}

std::optional<double> admissible_delta(double alpha, int k, double epsilon, const Domain& domain) {
  if (k < 1 || k > domain.modes()) throw std::invalid_argument("admissible_delta: k out of range");
  if (!(alpha > domain.eigenvalue(k))) {
    throw DomainError("admissible_delta needs alpha > lambda_k");
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("admissible_delta: epsilon must be >= 0");
  if (k == domain.modes()) return 1.0;
  const double gap = domain.eigenvalue(k + 1) - domain.eigenvalue(k);
  double delta = 1.0;
  for (int j = 0; j <= 52; ++j, delta *= 0.5) {
    const double lhs = epsilon * (1.0 + delta) * k;
    if (lhs <= gap - lhs / delta) return delta;
  }
  return std::nullopt;
}

double cone_rate(double alpha, const Domain& domain, const ConeParams& params) {
  if (params.k == 1) return alpha - domain.eigenvalue(1) - 2.0 * params.delta;
  double lam = 0.0;
  for (int i = 1; i <= params.k; ++i) lam += alpha - domain.eigenvalue(i);
  return lam - (1.0 + params.delta) * params.k * params.epsilon / params.delta;
}

std::string_view status_name(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::Certified: return "certified";
    case CertificateStatus::Failed: return "failed";
    case CertificateStatus::PreconditionFailed: return "precondition-failed";
    case CertificateStatus::InitialConeViolation: return "initial-cone-violation";
  }
  return "unknown";
}

namespace {

void check_params(const ConeParams& p, const Domain& domain) {
  if (!(p.delta > 0.0)) throw ConfigError("cone delta must be positive");
  if (!(p.M > 1.0)) throw ConfigError("cone safety factor M must exceed 1");
  if (p.k < 1 || p.k > domain.modes()) throw ConfigError("cone grade k out of range");
  if (!(p.epsilon >= 0.0)) throw ConfigError("cone epsilon must be >= 0");
}

// Derivative of a uniformly sampled series: centered inside, second-order
// one-sided at the ends.
std::vector<double> derivative(const std::vector<double>& q, double h) {
  const std::size_t n = q.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) {
    if (n == 2) d[0] = d[1] = (q[1] - q[0]) / h;
    return d;
  }
  d[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
  d[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (q[i + 1] - q[i - 1]) / (2.0 * h);
  return d;
}

}  // namespace

ConeCertificate certify_cone_growth(const TrajectoryRecord& base, const SpectralField& v0,
                                    const ConeParams& params, const SolverConfig& cfg) {
  ConeParams p = params;
  p.k = 1;
  return certify_cone_growth(base, std::vector<SpectralField>{v0}, p, cfg);
}

ConeCertificate certify_cone_growth(const TrajectoryRecord& base,
                                    const std::vector<SpectralField>& frame0,
                                    const ConeParams& params, const SolverConfig& cfg) {
  if (!base.domain || base.size() < 2) throw std::invalid_argument("certificate: base too short");
  const Domain& domain = *base.domain;
  check_params(params, domain);
  if (static_cast<int>(frame0.size()) != params.k) {
    throw std::invalid_argument("certificate: frame size must equal k");
  }
  if (std::abs(base.dt - cfg.dt) > 1e-12 * cfg.dt ||
      std::abs(base.times[1] - base.times[0] - cfg.dt) > 1e-9 * cfg.dt) {
    throw std::invalid_argument("certificate: base must be recorded at every solver step");
  }
  const int n = domain.modes();
  const int k = params.k;

  ConeCertificate c;
  c.params = params;
  c.rate = cone_rate(cfg.alpha, domain, params);
  c.prefactor = (params.M - 1.0) / (params.M + params.delta);
  for (const auto& u : base.states) {
    c.measured_sup_b = std::max(c.measured_sup_b, square_v_norm(SpectralField(base.domain, u), 3.0));
  }
  if (c.measured_sup_b > params.epsilon) {
    c.status = CertificateStatus::PreconditionFailed;
    return c;
  }

  Eigen::MatrixXd cols(n, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) cols(i, j) = frame0[j].coeffs()[i];
  }
  const WedgeVector w0 = blade(cols);
  c.q0 = q_delta_k(w0, params.delta, k);
  c.in_narrow_cone = q_delta_k(w0, params.delta / params.M, k) >= 0.0;
  if (!(c.q0 > 0.0)) {
    c.status = CertificateStatus::InitialConeViolation;
    return c;
  }
  const double norm0_sq = w0.norm() * w0.norm();

  // Frame stored back to back; reorthonormalized every step with the
  // accumulated log-determinant carrying the scale of the blade.
  Integrator it(base.domain, cfg);
  std::vector<double> buf(static_cast<std::size_t>(n * k));
  for (int j = 0; j < k; ++j) {
    std::copy(frame0[j].coeffs().begin(), frame0[j].coeffs().end(), buf.begin() + j * n);
  }
  std::vector<double> next(buf.size());
  double log_det = 0.0;
  std::vector<double> norms_sq;
  auto record = [&](double t) {
    Eigen::Map<const Eigen::MatrixXd> m(buf.data(), n, k);
    const WedgeVector w = blade(Eigen::MatrixXd(m));
    const double scale = std::exp(2.0 * log_det);
    c.times.push_back(t);
    c.q_values.push_back(scale * q_delta_k(w, params.delta, k));
    norms_sq.push_back(scale * w.norm() * w.norm());
  };
  auto normalize = [&] {
    Eigen::Map<Eigen::MatrixXd> m(buf.data(), n, k);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(m)};
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    for (int j = 0; j < k; ++j) {
      const double r = qr.matrixQR()(j, j);
      if (!(std::abs(r) >= 1e-300)) throw DegenerateFrameError("certificate frame lost rank");
      log_det += std::log(std::abs(r));
      // keep the orientation so that the blade is a positive multiple
      if (r < 0.0) q.col(j) *= -1.0;
    }
    m = q;
  };
  const double t0 = base.times.front();
  record(0.0);
  for (std::size_t i = 0; i + 1 < base.size(); ++i) {
    it.set_base(base.states[i]);
    it.step_variational_many(buf, static_cast<std::size_t>(k), next, base.times[i]);
    buf.swap(next);
    normalize();
    record(base.times[i + 1] - t0);
  }

  const std::vector<double> dq = derivative(c.q_values, cfg.dt);
  c.residuals.resize(c.q_values.size());
  c.norm_ratios.resize(c.q_values.size());
  c.min_residual = std::numeric_limits<double>::infinity();
  c.min_norm_ratio = std::numeric_limits<double>::infinity();
  c.min_growth_margin = std::numeric_limits<double>::infinity();
  c.q_positive = true;
  for (std::size_t i = 0; i < c.q_values.size(); ++i) {
    const double growth = std::exp(2.0 * c.times[i] * c.rate);
    c.residuals[i] = 0.5 * dq[i] - c.rate * c.q_values[i];
    c.norm_ratios[i] = norms_sq[i] / (c.prefactor * growth * norm0_sq);
    c.min_residual = std::min(c.min_residual, c.residuals[i]);
    c.min_norm_ratio = std::min(c.min_norm_ratio, c.norm_ratios[i]);
    c.min_growth_margin = std::min(c.min_growth_margin, (c.q_values[i] - c.q0 * growth) / c.q0);
    c.q_positive = c.q_positive && c.q_values[i] > 0.0;
  }
  c.status = (c.q_positive && c.min_residual >= -params.residual_tol)
                 ? CertificateStatus::Certified
                 : CertificateStatus::Failed;
  return c;
}

void write_certificate_csv(const ConeCertificate& cert, std::ostream& out,
                           const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "t,Q,residual,norm_ratio\n";
  char buf[128];
  for (std::size_t i = 0; i < cert.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", cert.times[i], cert.q_values[i],
                  cert.residuals[i], cert.norm_ratios[i]);
    out << buf;
  }
}

std::string certificate_summary_json(const ConeCertificate& cert, const std::string& config_hash,
                                     const std::string& version) {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["status"] = std::string(status_name(cert.status));
  j["pass"] = cert.certified();
  j["k"] = cert.params.k;
  j["delta"] = cert.params.delta;
  j["epsilon"] = cert.params.epsilon;
  j["M"] = cert.params.M;
  j["rate"] = cert.rate;
  j["measured_sup_b"] = cert.measured_sup_b;
  j["q0"] = cert.q0;
  if (!cert.times.empty()) {
    j["min_residual"] = cert.min_residual;
    j["min_norm_ratio"] = cert.min_norm_ratio;
    j["min_growth_margin"] = cert.min_growth_margin;
    j["in_narrow_cone"] = cert.in_narrow_cone;
  }
  return j.dump(2);
}

}  // namespace chafee

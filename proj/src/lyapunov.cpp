#include "chafee/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "chafee/errors.hpp"

namespace chafee {

namespace {

using ColMap = Eigen::Map<Eigen::MatrixXd>;

// QR of the N x k column block in `buf` (column j at offset j N). Overwrites
// buf with Q and returns R, both with a positive diagonal.
Eigen::MatrixXd qr_in_place(std::vector<double>& buf, int n, int k) {
  ColMap a(buf.data(), n, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) *= -1.0;
      q.col(j) *= -1.0;
    }
  }
  a = q;
  return r;
}

void fold(TangentFrame& frame, const Eigen::MatrixXd& r) {
  const int k = frame.size();
  for (int j = 0; j < k; ++j) {
    if (!(r(j, j) >= 1e-300)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "tangent frame lost rank in direction %d (r = %.3g)", j + 1,
                    r(j, j));
      throw DegenerateFrameError(buf);
    }
    frame.log_r[j] += std::log(r(j, j));
  }
  frame.log_volume = 0.0;
  for (double x : frame.log_r) frame.log_volume += x;
  frame.stretch = r * frame.stretch;
  const double m = frame.stretch.cwiseAbs().maxCoeff();
  if (m > 0.0 && std::isfinite(m)) {
    frame.stretch /= m;
    frame.log_stretch_scale += std::log(m);
  }
}

std::vector<double> pack(const TangentFrame& frame) {
  const auto n = static_cast<std::size_t>(frame.domain->modes());
  std::vector<double> buf(n * frame.vectors.size());
  for (std::size_t j = 0; j < frame.vectors.size(); ++j) {
    std::copy(frame.vectors[j].begin(), frame.vectors[j].end(), buf.begin() + j * n);
  }
  return buf;
}

void unpack(const std::vector<double>& buf, TangentFrame& frame) {
  const auto n = static_cast<std::size_t>(frame.domain->modes());
  for (std::size_t j = 0; j < frame.vectors.size(); ++j) {
    frame.vectors[j].assign(buf.begin() + j * n, buf.begin() + (j + 1) * n);
  }
}

std::size_t base_index(const TrajectoryRecord& base, double t) {
  if (base.size() < 2 || base.dt <= 0.0) throw std::invalid_argument("base trajectory too short");
  const double step = base.times[1] - base.times[0];
  if (std::abs(step - base.dt) > 1e-9 * base.dt) {
    throw std::invalid_argument("base trajectory must be recorded at every step");
  }
  const double x = (t - base.times[0]) / base.dt;
  const auto i = static_cast<long long>(std::llround(x));
  if (i < 0 || static_cast<std::size_t>(i) >= base.size() || std::abs(x - i) > 1e-6) {
    throw std::out_of_range("time is not on the base trajectory grid");
  }
  return static_cast<std::size_t>(i);
}

void check_grid(const std::vector<double>& t_grid, const TrajectoryRecord& base) {
  double prev = base.times.front();
  for (double t : t_grid) {
    if (!(t > prev)) throw std::invalid_argument("t_grid must be increasing and after the start");
    prev = t;
  }
}

}  // namespace

TangentFrame TangentFrame::leading(std::shared_ptr<const Domain> domain, int k) {
  if (!domain) throw std::invalid_argument("TangentFrame: null domain");
  if (k < 1 || k > domain->modes()) throw std::invalid_argument("frame size must be in 1..N");
  std::vector<std::vector<double>> v(static_cast<std::size_t>(k),
                                     std::vector<double>(domain->modes(), 0.0));
  for (int j = 0; j < k; ++j) v[j][j] = 1.0;
  TangentFrame f;
  f.domain = std::move(domain);
  f.vectors = std::move(v);
  f.log_r.assign(static_cast<std::size_t>(k), 0.0);
  f.stretch = Eigen::MatrixXd::Identity(k, k);
  return f;
}

TangentFrame TangentFrame::from_vectors(std::shared_ptr<const Domain> domain,
                                        std::vector<std::vector<double>> vectors) {
  if (!domain) throw std::invalid_argument("TangentFrame: null domain");
  const int k = static_cast<int>(vectors.size());
  const int n = domain->modes();
  if (k < 1 || k > n) throw std::invalid_argument("frame size must be in 1..N");
  for (const auto& v : vectors) {
    if (static_cast<int>(v.size()) != n) throw std::invalid_argument("frame vector size mismatch");
  }
  TangentFrame f;
  f.domain = std::move(domain);
  f.vectors = std::move(vectors);
  f.log_r.assign(static_cast<std::size_t>(k), 0.0);
  f.stretch = Eigen::MatrixXd::Identity(k, k);
  std::vector<double> buf = pack(f);
  const Eigen::MatrixXd r = qr_in_place(buf, n, k);
  for (int j = 0; j < k; ++j) {
    if (!(r(j, j) >= 1e-300)) throw DegenerateFrameError("initial frame vectors are dependent");
  }
  unpack(buf, f);
  return f;
}

double TangentFrame::log_top_singular_value(int j) const {
  const int k = size();
  if (j <= 0 || j > k) j = k;
  const Eigen::MatrixXd block = stretch.topLeftCorner(j, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
  return std::log(svd.singularValues()(0)) + log_stretch_scale;
}

double TangentFrame::orthonormality_defect() const {
  double d = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      double s = 0.0;
      for (std::size_t m = 0; m < vectors[i].size(); ++m) s += vectors[i][m] * vectors[j][m];
      d = std::max(d, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return d;
}

void reorthonormalize(TangentFrame& frame) {
  std::vector<double> buf = pack(frame);
  const Eigen::MatrixXd r = qr_in_place(buf, frame.domain->modes(), frame.size());
  fold(frame, r);
  unpack(buf, frame);
}

TangentFrame propagate_frame(TangentFrame frame, const TrajectoryRecord& base, double t0,
                             double t1, const SolverConfig& cfg, int reorth_every) {
  if (reorth_every < 1) throw std::invalid_argument("reorth_every must be >= 1");
  if (!frame.domain) throw std::invalid_argument("propagate_frame: empty frame");
  if (std::abs(base.dt - cfg.dt) > 1e-12 * cfg.dt) {
    throw ConfigError("base trajectory dt does not match solver dt");
  }
  const std::size_t i0 = base_index(base, t0);
  const std::size_t i1 = base_index(base, t1);
  if (i1 < i0) throw std::invalid_argument("propagate_frame: t1 < t0");
  const int n = frame.domain->modes();
  const int k = frame.size();
  Integrator it(frame.domain, cfg);
  std::vector<double> buf = pack(frame);
  std::vector<double> next(buf.size());
  for (std::size_t i = i0; i < i1; ++i) {
    it.set_base(base.states[i]);
    it.step_variational_many(buf, static_cast<std::size_t>(k), next, base.times[i]);
    buf.swap(next);
    const std::size_t done = i + 1 - i0;
    if (done % static_cast<std::size_t>(reorth_every) == 0 || i + 1 == i1) {
      fold(frame, qr_in_place(buf, n, k));
    }
  }
  unpack(buf, frame);
  frame.t_elapsed += static_cast<double>(i1 - i0) * cfg.dt;
  return frame;
}

double FtleReport::max_volume_violation(int j) const {
  if (j < 1 || j > static_cast<int>(volume_bounds.size())) {
    throw std::out_of_range("volume index out of range");
  }
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& row : v) m = std::max(m, row[j - 1] - volume_bounds[j - 1]);
  return m;
}

double FtleReport::max_lambda1_violation() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& row : lambda) m = std::max(m, row[0] - lambda_bounds[0]);
  return m;
}

namespace {

FtleReport empty_report(const Domain& domain, const SolverConfig& cfg, int k,
                        const FtleOptions& opts) {
  FtleReport r;
  r.base_tag = opts.base_tag;
  r.alpha = cfg.alpha;
  r.k = k;
  double sum = 0.0;
  for (int i = 1; i <= k; ++i) {
    r.lambda_bounds.push_back(cfg.alpha - domain.eigenvalue(i));
    sum += r.lambda_bounds.back();
    r.volume_bounds.push_back(sum);
  }
  return r;
}

}  // namespace

FtleReport ftle_top_along(const TrajectoryRecord& base, const std::vector<double>& t_grid,
                          const SolverConfig& cfg, const FtleOptions& opts) {
  if (!base.domain) throw std::invalid_argument("ftle_top: empty base trajectory");
  check_grid(t_grid, base);
  const int n = base.domain->modes();
  const int narrow = std::clamp(opts.k_probe, 1, n);
  const int wide = std::min(2 * narrow, n);
  FtleReport r = empty_report(*base.domain, cfg, 1, opts);
  TangentFrame frame = TangentFrame::leading(base.domain, wide);
  double t_prev = base.times.front();
  for (double t : t_grid) {
    frame = propagate_frame(std::move(frame), base, t_prev, t, cfg, opts.reorth_every);
    const double elapsed = t - base.times.front();
    const double l1 = frame.log_top_singular_value(narrow) / elapsed;
    const double lw = frame.log_top_singular_value(wide) / elapsed;
    r.times.push_back(elapsed);
    r.lambda.push_back({l1});
    r.v.push_back({l1});
    r.lambda_wide.push_back(lw);
    r.probe_gap = std::max(r.probe_gap, std::abs(lw - l1));
    t_prev = t;
  }
  r.probe_converged = r.probe_gap <= opts.probe_tol;
  return r;
}

FtleReport ftle_top(const NoisePath& path, const SpectralField& u0,
                    const std::vector<double>& t_grid, const SolverConfig& cfg,
                    const FtleOptions& opts) {
  if (t_grid.empty()) return empty_report(u0.domain(), cfg, 1, opts);
  const TrajectoryRecord base = integrate(u0, path, 0.0, t_grid.back(), cfg, 1);
  return ftle_top_along(base, t_grid, cfg, opts);
}

FtleReport volume_growth_along(const TrajectoryRecord& base, int k,
                               const std::vector<double>& t_grid, const SolverConfig& cfg,
                               const FtleOptions& opts) {
  if (!base.domain) throw std::invalid_argument("volume_growth: empty base trajectory");
  if (k < 1 || k > base.domain->modes()) throw std::invalid_argument("volume grade must be in 1..N");
  check_grid(t_grid, base);
  FtleReport r = empty_report(*base.domain, cfg, k, opts);
  TangentFrame frame = TangentFrame::leading(base.domain, k);
  double t_prev = base.times.front();
  for (double t : t_grid) {
    frame = propagate_frame(std::move(frame), base, t_prev, t, cfg, opts.reorth_every);
    const double elapsed = t - base.times.front();
    std::vector<double> lam(static_cast<std::size_t>(k));
    std::vector<double> vol(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      lam[i] = frame.log_r[i] / elapsed;
      sum += frame.log_r[i];
      vol[i] = sum / elapsed;
    }
    r.times.push_back(elapsed);
    r.lambda.push_back(std::move(lam));
    r.v.push_back(std::move(vol));
    t_prev = t;
  }
  return r;
}

FtleReport volume_growth(const NoisePath& path, const SpectralField& u0, int k,
                         const std::vector<double>& t_grid, const SolverConfig& cfg,
                         const FtleOptions& opts) {
  if (t_grid.empty()) return empty_report(u0.domain(), cfg, k, opts);
  const TrajectoryRecord base = integrate(u0, path, 0.0, t_grid.back(), cfg, 1);
  return volume_growth_along(base, k, t_grid, cfg, opts);
}

void write_ftle_csv(const FtleReport& report, std::ostream& out,
                    const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "# base=" << report.base_tag << '\n';
  out << "t,k,lambda_k,v_k,bound_k\n";
  char buf[160];
  for (std::size_t i = 0; i < report.times.size(); ++i) {
    for (std::size_t j = 0; j < report.lambda[i].size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g\n", report.times[i], j + 1,
                    report.lambda[i][j], report.v[i][j], report.volume_bounds[j]);
      out << buf;
    }
  }
}

}  // namespace chafee

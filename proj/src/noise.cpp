#include "chafee/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "chafee/errors.hpp"

namespace chafee {

CovarianceSpec CovarianceSpec::power_law(const Domain& domain, double gamma, double amplitude) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("noise gamma must be >= 0");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw ConfigError("noise amplitude must be >= 0");
  }
  CovarianceSpec c;
  c.gamma = gamma;
  c.amplitude = amplitude;
  c.q.resize(static_cast<std::size_t>(domain.modes()));
  for (int k = 1; k <= domain.modes(); ++k) {
    c.q[k - 1] = amplitude * std::pow(domain.eigenvalue(k), -gamma);
  }
  return c;
}

CovarianceSpec CovarianceSpec::explicit_values(std::vector<double> q) {
  CovarianceSpec c;
  c.q = std::move(q);
  c.gamma = 0.0;
  c.amplitude = 1.0;
  return c;
}

CovarianceSpec CovarianceSpec::zero(const Domain& domain) {
  return explicit_values(std::vector<double>(static_cast<std::size_t>(domain.modes()), 0.0));
}

bool CovarianceSpec::is_zero() const {
  return std::all_of(q.begin(), q.end(), [](double v) { return v == 0.0; });
}

TraceCheck trace_check(const CovarianceSpec& cov, const Domain& domain, double epsilon,
                       double tail_fraction) {
  TraceCheck r;
  const int n = domain.modes();
  for (int k = 1; k <= n && k <= static_cast<int>(cov.q.size()); ++k) {
    const double term = cov.q[k - 1] * std::pow(domain.eigenvalue(k), epsilon);
    r.total += term;
    if (2 * k > n) r.tail += term;
  }
  r.ratio = r.total > 0.0 ? r.tail / r.total : 0.0;
  r.ok = std::isfinite(r.total) && r.ratio <= tail_fraction;
  return r;
}

void validate_covariance(const CovarianceSpec& cov, const Domain& domain, double epsilon) {
  if (cov.q.size() != static_cast<std::size_t>(domain.modes())) {
    throw ConfigError("covariance has " + std::to_string(cov.q.size()) + " eigenvalues, expected " +
                      std::to_string(domain.modes()));
  }
  for (double v : cov.q) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("covariance eigenvalues must be finite and nonnegative");
    }
  }
  const TraceCheck t = trace_check(cov, domain, epsilon);
  if (!t.ok) {
    throw ConfigError("covariance fails the discrete trace condition: tail fraction " +
                      std::to_string(t.ratio) + " > 0.01");
  }
}

// ---------------------------------------------------------------------------

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + index);
}

namespace {

// Uniform in (0, 1]: never returns 0, so log() is safe.
double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

namespace {

// Normal pair for modes (2j-1, 2j) at one step: Marsaglia's polar method fed
// by successive counter hashes.
std::pair<double, double> normal_pair(std::uint64_t seed, int pair, std::int64_t step) {
  const std::uint64_t stream = step < 0 ? 0xa0761d6478bd642fULL : 0xe7037ed1a0b428dbULL;
  std::uint64_t h = mix64(seed ^ stream);
  h = mix64(h ^ static_cast<std::uint64_t>(pair));
  h = mix64(h ^ static_cast<std::uint64_t>(step));
  for (std::uint64_t j = 0;; j += 2) {
    const double u = 2.0 * to_unit(mix64(h ^ (j + 1))) - 1.0;
    const double v = 2.0 * to_unit(mix64(h ^ (j + 2))) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      const double f = std::sqrt(-2.0 * std::log(s) / s);
      return {u * f, v * f};
    }
  }
}

}  // namespace

double counter_normal(std::uint64_t seed, int mode, std::int64_t step) {
  const auto [c, s] = normal_pair(seed, (mode + 1) / 2, step);
  return mode % 2 == 1 ? c : s;
}

// ---------------------------------------------------------------------------

NoisePath::NoisePath(int modes, double dt, std::int64_t first_step, std::int64_t steps,
                     std::uint64_t seed, std::vector<double> increments)
    : modes_(modes), dt_(dt), first_step_(first_step), steps_(steps), seed_(seed), row_offset_(0) {
  if (modes < 1) throw ConfigError("noise path needs at least one mode");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("noise dt must be positive");
  if (steps < 0) throw ConfigError("noise path step count must be nonnegative");
  if (increments.size() != static_cast<std::size_t>(steps) * static_cast<std::size_t>(modes)) {
    throw ConfigError("noise path increment table has the wrong size");
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(increments));
}

std::span<const double> NoisePath::increment(std::int64_t step) const {
  if (!contains(step)) {
    throw std::out_of_range("noise step " + std::to_string(step) + " outside path window [" +
                            std::to_string(first_step_) + ", " + std::to_string(end_step()) + ")");
  }
  const std::size_t row = static_cast<std::size_t>(step - first_step_ + row_offset_);
  return {data_->data() + row * static_cast<std::size_t>(modes_), static_cast<std::size_t>(modes_)};
}

NoisePath NoisePath::shifted(std::int64_t steps) const {
  NoisePath p = *this;
  p.first_step_ = first_step_ - steps;
  return p;
}

NoisePath NoisePath::slice(std::int64_t first, std::int64_t end) const {
  if (first > end || first < first_step_ || end > end_step()) {
    throw std::out_of_range("slice outside the noise path window");
  }
  NoisePath p = *this;
  p.row_offset_ = row_offset_ + (first - first_step_);
  p.first_step_ = first;
  p.steps_ = end - first;
  return p;
}

NoisePath NoisePath::coarsen(int factor) const {
  if (factor < 1) throw std::invalid_argument("coarsen factor must be >= 1");
  if (factor == 1) return *this;
  if (first_step_ % factor != 0 || steps_ % factor != 0) {
    throw std::invalid_argument("coarsen: window not aligned to factor");
  }
  const std::int64_t coarse_steps = steps_ / factor;
  std::vector<double> inc(static_cast<std::size_t>(coarse_steps) * modes_, 0.0);
  for (std::int64_t j = 0; j < coarse_steps; ++j) {
    double* row = inc.data() + static_cast<std::size_t>(j) * modes_;
    for (int f = 0; f < factor; ++f) {
      const auto fine = increment(first_step_ + j * factor + f);
      for (int k = 0; k < modes_; ++k) row[k] += fine[k];
    }
  }
  return NoisePath(modes_, dt_ * factor, first_step_ / factor, coarse_steps, seed_, std::move(inc));
}

NoisePath refine(const NoisePath& path, const CovarianceSpec& cov) {
  const int n = path.modes();
  if (static_cast<int>(cov.q.size()) != n) throw ConfigError("refine: covariance size mismatch");
  const std::uint64_t bridge_seed = mix64(path.seed() ^ 0x6272696467655f31ULL);
  const std::int64_t steps = path.steps();
  std::vector<double> inc(static_cast<std::size_t>(2 * steps) * n);
  std::vector<double> sd(n);
  for (int k = 0; k < n; ++k) sd[k] = 0.5 * std::sqrt(cov.q[k] * path.dt());
  for (std::int64_t j = 0; j < steps; ++j) {
    const std::int64_t step = path.first_step() + j;
    const auto coarse = path.increment(step);
    double* a = inc.data() + static_cast<std::size_t>(2 * j) * n;
    double* b = a + n;
    for (int k = 0; k < n; ++k) {
      const double x = sd[k] * counter_normal(bridge_seed, k + 1, step);
      const double half = 0.5 * coarse[k];
      a[k] = half + x;
      b[k] = half - x;
    }
  }
  return NoisePath(n, 0.5 * path.dt(), 2 * path.first_step(), 2 * steps, path.seed(),
                   std::move(inc));
}

std::int64_t NoisePath::step_of(double t) const {
  const double s = t / dt_;
  const double r = std::nearbyint(s);
  if (std::abs(s - r) > 1e-9 * std::max(1.0, std::abs(s))) {
    throw std::invalid_argument("time " + std::to_string(t) + " is not a multiple of dt");
  }
  return static_cast<std::int64_t>(r);
}

bool operator==(const NoisePath& a, const NoisePath& b) {
  if (a.modes_ != b.modes_ || a.dt_ != b.dt_ || a.first_step_ != b.first_step_ ||
      a.steps_ != b.steps_) {
    return false;
  }
  for (std::int64_t i = a.first_step_; i < a.end_step(); ++i) {
    const auto x = a.increment(i);
    const auto y = b.increment(i);
    if (!std::equal(x.begin(), x.end(), y.begin())) return false;
  }
  return true;
}

NoisePath sample_path(const CovarianceSpec& cov, double dt, double t_min, double t_max,
                      std::uint64_t seed) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("noise dt must be positive");
  if (!(t_min <= 0.0) || !(t_max >= 0.0)) throw ConfigError("noise window must contain t = 0");
  const int n = static_cast<int>(cov.q.size());
  if (n < 1) throw ConfigError("covariance has no modes");
  for (double v : cov.q) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("covariance eigenvalues must be finite and nonnegative");
    }
  }
  const auto first = static_cast<std::int64_t>(std::floor(t_min / dt + 1e-9));
  const auto last = static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9));
  const std::int64_t steps = last - first;
  std::vector<double> sd(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) sd[k] = std::sqrt(cov.q[k] * dt);

  std::vector<double> inc(static_cast<std::size_t>(steps) * n, 0.0);
  for (std::int64_t i = 0; i < steps; ++i) {
    double* row = inc.data() + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < n; k += 2) {
      const bool has_second = k + 1 < n && sd[k + 1] != 0.0;
      if (sd[k] == 0.0 && !has_second) continue;
      const auto [c, s] = normal_pair(seed, k / 2 + 1, first + i);
      row[k] = sd[k] * c;
      if (k + 1 < n) row[k + 1] = sd[k + 1] * s;
    }
  }
  return NoisePath(n, dt, first, steps, seed, std::move(inc));
}

NoisePath wiener_shift(const NoisePath& path, double t) {
  const std::int64_t s = path.step_of(t);
  if (s < path.first_step() || s > path.end_step()) {
    throw std::out_of_range("wiener shift by " + std::to_string(t) + " leaves the path window");
  }
  return path.shifted(s);
}

double wiener_difference(const NoisePath& path, int k, double t0, double t1) {
  if (k < 1 || k > path.modes()) throw std::out_of_range("wiener_difference: mode out of range");
  std::int64_t a = path.step_of(t0);
  std::int64_t b = path.step_of(t1);
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  double s = 0.0;
  for (std::int64_t i = a; i < b; ++i) s += path.increment(i)[k - 1];
  return sign * s;
}

// ---------------------------------------------------------------------------

void write_path_csv(const NoisePath& path, std::ostream& out, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "# dt=" << path.dt() << " seed=" << path.seed() << '\n';
  out << "step,mode,increment\n";
  char buf[64];
  for (std::int64_t i = path.first_step(); i < path.end_step(); ++i) {
    const auto row = path.increment(i);
    for (int k = 0; k < path.modes(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      out << i << ',' << (k + 1) << ',' << buf << '\n';
    }
  }
}

namespace {

constexpr char kPathMagic[8] = {'C', 'H', 'A', 'F', 'N', 'P', '0', '2'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated noise path file");
  return v;
}

}  // namespace

// Layout (little-endian host order): magic, uint32 header length, header
// bytes, int32 modes, double dt, int64 first_step, int64 steps, uint64 seed,
// then steps*modes doubles.
void write_path_binary(const NoisePath& path, std::ostream& out, const std::string& header) {
  out.write(kPathMagic, sizeof kPathMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<std::int32_t>(out, path.modes());
  put<double>(out, path.dt());
  put<std::int64_t>(out, path.first_step());
  put<std::int64_t>(out, path.steps());
  put<std::uint64_t>(out, path.seed());
  for (std::int64_t i = path.first_step(); i < path.end_step(); ++i) {
    const auto row = path.increment(i);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

NoisePath read_path_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kPathMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a noise path file");
  }
  in.ignore(get<std::uint32_t>(in));
  const auto modes = get<std::int32_t>(in);
  const auto dt = get<double>(in);
  const auto first = get<std::int64_t>(in);
  const auto steps = get<std::int64_t>(in);
  const auto seed = get<std::uint64_t>(in);
  if (modes < 1 || steps < 0) throw std::runtime_error("corrupt noise path header");
  std::vector<double> inc(static_cast<std::size_t>(steps) * static_cast<std::size_t>(modes));
  in.read(reinterpret_cast<char*>(inc.data()),
          static_cast<std::streamsize>(inc.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated noise path file");
  return NoisePath(modes, dt, first, steps, seed, std::move(inc));
}

// ---------------------------------------------------------------------------

double ou_increment_scale(double a, double dt, OuVariant variant) {
  if (variant == OuVariant::LeftPoint) return 1.0;
  const double x = 2.0 * a * dt;
  if (x == 0.0) return 1.0;
  // (1 - e^{-x}) / x = -expm1(-x) / x
  return std::sqrt(-std::expm1(-x) / x);
}

OuState ou_step(const OuState& state, std::span<const double> dw, double dt, double alpha,
                OuVariant variant) {
  const Domain& d = state.z.domain();
  if (dw.size() != static_cast<std::size_t>(d.modes())) {
    throw std::invalid_argument("ou_step: increment size mismatch");
  }
  OuState next{state.z, alpha};
  for (int k = 1; k <= d.modes(); ++k) {
    const double a = alpha - d.eigenvalue(k);
    const double c = ou_increment_scale(a, dt, variant);
    next.z.coeff(k) = std::exp(a * dt) * (state.z.coeff(k) + c * dw[k - 1]);
  }
  return next;
}

}  // namespace chafee

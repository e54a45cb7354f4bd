#include "chafee/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "chafee/errors.hpp"

namespace chafee {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x)) {
    throw ConfigError("expected a finite number, got '" + std::string(v) + "'");
  }
  return x;
}

template <typename Int>
Int parse_int(std::string_view v) {
  Int x = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) {
    throw ConfigError("expected an integer, got '" + std::string(v) + "'");
  }
  return x;
}

bool parse_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

std::vector<double> parse_list(std::string_view v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = v.find(',', start);
    out.push_back(parse_double(trim(v.substr(start, comma - start))));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  return s;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  bool hashed = true;
};

#define CHAFEE_DOUBLE(member)                                                          \
  Field {                                                                              \
    [](ExperimentConfig& c, std::string_view v) { c.member = parse_double(v); },       \
        [](const ExperimentConfig& c) { return fmt(c.member); }                        \
  }
#define CHAFEE_INT(member, type)                                                       \
  Field {                                                                              \
    [](ExperimentConfig& c, std::string_view v) { c.member = parse_int<type>(v); },    \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }             \
  }
#define CHAFEE_BOOL(member)                                                            \
  Field {                                                                              \
    [](ExperimentConfig& c, std::string_view v) { c.member = parse_bool(v); },         \
        [](const ExperimentConfig& c) { return fmt_bool(c.member); }                   \
  }
#define CHAFEE_LIST(member)                                                            \
  Field {                                                                              \
    [](ExperimentConfig& c, std::string_view v) { c.member = parse_list(v); },         \
        [](const ExperimentConfig& c) { return fmt_list(c.member); }                   \
  }

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"domain.length", CHAFEE_DOUBLE(domain.length)},
      {"domain.modes", CHAFEE_INT(domain.modes, int)},
      {"domain.basis",
       {[](ExperimentConfig& c, std::string_view v) {
          if (v == "two-pi") c.domain.basis = BasisConvention::PaperTwoPi;
          else if (v == "standard") c.domain.basis = BasisConvention::StandardDirichlet;
          else throw ConfigError("domain.basis must be two-pi or standard");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.domain.basis == BasisConvention::PaperTwoPi ? "two-pi" : "standard");
        }}},
      {"solver.dt", CHAFEE_DOUBLE(solver.dt)},
      {"solver.alpha", CHAFEE_DOUBLE(solver.alpha)},
      {"solver.scheme",
       {[](ExperimentConfig& c, std::string_view v) {
          if (v == "exponential") c.solver.scheme = Scheme::ExponentialEuler;
          else if (v == "semi-implicit") c.solver.scheme = Scheme::SemiImplicitEuler;
          else throw ConfigError("solver.scheme must be exponential or semi-implicit");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.solver.scheme == Scheme::ExponentialEuler ? "exponential"
                                                                         : "semi-implicit");
        }}},
      {"solver.cutoff_radius",
       {[](ExperimentConfig& c, std::string_view v) {
          if (v == "none") c.solver.cutoff_radius.reset();
          else c.solver.cutoff_radius = parse_double(v);
        },
        [](const ExperimentConfig& c) {
          return c.solver.cutoff_radius ? fmt(*c.solver.cutoff_radius) : std::string("none");
        }}},
      {"solver.linear", CHAFEE_BOOL(solver.linear)},
      {"solver.ou_variant",
       {[](ExperimentConfig& c, std::string_view v) {
          if (v == "left-point") c.solver.ou_variant = OuVariant::LeftPoint;
          else if (v == "variance-exact") c.solver.ou_variant = OuVariant::VarianceExact;
          else throw ConfigError("solver.ou_variant must be left-point or variance-exact");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.solver.ou_variant == OuVariant::LeftPoint ? "left-point"
                                                                         : "variance-exact");
        }}},
      {"solver.blowup_threshold", CHAFEE_DOUBLE(solver.blowup_threshold)},
      {"noise.gamma", CHAFEE_DOUBLE(noise.gamma)},
      {"noise.amplitude", CHAFEE_DOUBLE(noise.amplitude)},
      {"noise.q", CHAFEE_LIST(noise.q)},
      {"noise.seed", CHAFEE_INT(noise.seed, std::uint64_t)},
      {"noise.ensemble_size", CHAFEE_INT(noise.ensemble_size, int)},
      {"pullback.spread", CHAFEE_DOUBLE(pullback.spread)},
      {"pullback.tol", CHAFEE_DOUBLE(pullback.tol)},
      {"pullback.initial_depth", CHAFEE_DOUBLE(pullback.initial_depth)},
      {"pullback.max_depth", CHAFEE_DOUBLE(pullback.max_depth)},
      {"analysis.k_max", CHAFEE_INT(analysis.k_max, int)},
      {"analysis.T", CHAFEE_DOUBLE(analysis.T)},
      {"analysis.record_dt", CHAFEE_DOUBLE(analysis.record_dt)},
      {"analysis.epsilons", CHAFEE_LIST(analysis.epsilons)},
      {"analysis.epsilon",
       {[](ExperimentConfig& c, std::string_view v) {
          if (v == "auto") c.analysis.epsilon.reset();
          else c.analysis.epsilon = parse_double(v);
        },
        [](const ExperimentConfig& c) {
          return c.analysis.epsilon ? fmt(*c.analysis.epsilon) : std::string("auto");
        }}},
      {"analysis.delta", CHAFEE_DOUBLE(analysis.delta)},
      {"analysis.M", CHAFEE_DOUBLE(analysis.M)},
      {"analysis.t_floor", CHAFEE_DOUBLE(analysis.t_floor)},
      {"analysis.max_trials", CHAFEE_INT(analysis.max_trials, long)},
      {"analysis.events", CHAFEE_INT(analysis.events, int)},
      {"analysis.event_k", CHAFEE_INT(analysis.event_k, int)},
      {"analysis.probability_trials", CHAFEE_INT(analysis.probability_trials, long)},
      {"analysis.alpha_grid", CHAFEE_LIST(analysis.alpha_grid)},
      {"analysis.k_probe", CHAFEE_INT(analysis.k_probe, int)},
      {"analysis.reorth_every", CHAFEE_INT(analysis.reorth_every, int)},
      {"analysis.tol_disc", CHAFEE_DOUBLE(analysis.tol_disc)},
      {"analysis.failure_fraction", CHAFEE_DOUBLE(analysis.failure_fraction)},
      {"analysis.residual_tol", CHAFEE_DOUBLE(analysis.residual_tol)},
      {"output.directory",
       {[](ExperimentConfig& c, std::string_view v) { c.output.directory = std::string(v); },
        [](const ExperimentConfig& c) { return c.output.directory; }, false}},
      {"output.csv", CHAFEE_BOOL(output.csv)},
      {"output.binary", CHAFEE_BOOL(output.binary)},
      {"run.workers",
       {[](ExperimentConfig& c, std::string_view v) { c.workers = parse_int<int>(v); },
        [](const ExperimentConfig& c) { return std::to_string(c.workers); }, false}},
      {"run.dt_refine", CHAFEE_BOOL(dt_refine)},
  };
  return table;
}

#undef CHAFEE_DOUBLE
#undef CHAFEE_INT
#undef CHAFEE_BOOL
#undef CHAFEE_LIST

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool is_multiple(double x, double step) {
  const double r = x / step;
  return std::abs(r - std::nearbyint(r)) <= 1e-9 * std::max(1.0, r);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(where + "repeated key '" + std::string(key) + "'");
    }
    try {
      it->second.set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  require(cfg.domain.length > 0.0, "domain.length must be positive");
  require(cfg.domain.modes >= 1 && cfg.domain.modes <= 4096, "domain.modes must be in 1..4096");
  const auto domain = make_domain(cfg);
  validate(cfg.solver, *domain);
  validate_covariance(make_covariance(cfg, *domain), *domain);
  require(cfg.noise.ensemble_size >= 1, "noise.ensemble_size must be >= 1");
  require(cfg.pullback.spread >= 0.0, "pullback.spread must be >= 0");
  require(cfg.pullback.tol > 0.0, "pullback.tol must be positive");
  require(cfg.pullback.initial_depth > 0.0 && cfg.pullback.max_depth >= cfg.pullback.initial_depth,
          "pullback depths must satisfy 0 < initial_depth <= max_depth");
  const auto& a = cfg.analysis;
  require(a.k_max >= 1 && a.k_max <= cfg.domain.modes, "analysis.k_max must be in 1..N");
  require(a.T > 0.0 && is_multiple(a.T, cfg.solver.dt), "analysis.T must be a positive multiple of dt");
  require(a.record_dt > 0.0 && is_multiple(a.record_dt, cfg.solver.dt),
          "analysis.record_dt must be a positive multiple of dt");
  require(!a.epsilons.empty(), "analysis.epsilons must not be empty");
  for (double e : a.epsilons) require(e > 0.0, "analysis.epsilons must be positive");
  require(!a.epsilon || *a.epsilon > 0.0, "analysis.epsilon must be positive or auto");
  require(a.delta > 0.0, "analysis.delta must be positive");
  require(a.M > 1.0, "analysis.M must exceed 1");
  require(a.t_floor >= 0.0 && a.t_floor < a.T, "analysis.t_floor must be in [0, T)");
  require(a.max_trials >= 1, "analysis.max_trials must be >= 1");
  require(a.events >= 1, "analysis.events must be >= 1");
  require(a.event_k >= 1 && a.event_k <= cfg.domain.modes, "analysis.event_k must be in 1..N");
  require(a.probability_trials >= 0, "analysis.probability_trials must be >= 0");
  require(a.k_probe >= 1, "analysis.k_probe must be >= 1");
  require(a.reorth_every >= 1, "analysis.reorth_every must be >= 1");
  require(a.tol_disc > 0.0, "analysis.tol_disc must be positive");
  require(a.failure_fraction > 0.0 && a.failure_fraction <= 1.0,
          "analysis.failure_fraction must be in (0, 1]");
  require(a.residual_tol >= 0.0, "analysis.residual_tol must be >= 0");
  require(!cfg.output.directory.empty(), "output.directory must not be empty");
  require(cfg.workers >= 1, "run.workers must be >= 1");
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& [key, f] : fields()) s += key + " = " + f.get(cfg) + "\n";
  return s;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& [key, f] : fields()) {
    if (f.hashed) s += key + " = " + f.get(cfg) + "\n";
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

std::shared_ptr<const Domain> make_domain(const ExperimentConfig& cfg) {
  return Domain::make(cfg.domain);
}

CovarianceSpec make_covariance(const ExperimentConfig& cfg, const Domain& domain) {
  if (!cfg.noise.q.empty()) return CovarianceSpec::explicit_values(cfg.noise.q);
  return CovarianceSpec::power_law(domain, cfg.noise.gamma, cfg.noise.amplitude);
}

}  // namespace chafee

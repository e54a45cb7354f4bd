#include <doctest.h>

#include <string>

#include "chafee/config.hpp"
#include "chafee/errors.hpp"

using namespace chafee;

namespace {

std::string error_of(const std::string& text) {
  try {
    validate(parse_config(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults are valid") {
    const ExperimentConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    CHECK(cfg.domain.modes == 64);
    CHECK(cfg.solver.dt == 1e-3);
  }

  TEST_CASE("parsing") {
    const ExperimentConfig cfg = parse_config(
        "# a comment\n"
        "domain.modes = 32\n"
        "\n"
        "solver.alpha = 2.5   # trailing comment\n"
        "solver.cutoff_radius = 1.5\n"
        "solver.scheme = semi-implicit\n"
        "noise.seed = 18446744073709551615\n"
        "analysis.epsilons = 0.3, 0.2\n"
        "analysis.epsilon = 0.25\n"
        "output.binary = true\n"
        "run.workers = 4\n");
    CHECK(cfg.domain.modes == 32);
    CHECK(cfg.solver.alpha == 2.5);
    CHECK(cfg.solver.cutoff_radius == 1.5);
    CHECK(cfg.solver.scheme == Scheme::SemiImplicitEuler);
    CHECK(cfg.noise.seed == 18446744073709551615ULL);
    CHECK(cfg.analysis.epsilons == std::vector<double>{0.3, 0.2});
    CHECK(cfg.analysis.epsilon == 0.25);
    CHECK(cfg.output.binary);
    CHECK(cfg.workers == 4);
  }

  TEST_CASE("errors carry line numbers") {
    CHECK(error_of("domain.modes = 8\nnoise.bogus = 1\n").find("line 2") != std::string::npos);
    CHECK(error_of("domain.modes = 8\ndomain.modes = 9\n").find("repeated") != std::string::npos);
    CHECK(error_of("solver.dt\n").find("line 1") != std::string::npos);
    CHECK(error_of("solver.dt = fast\n").find("solver.dt") != std::string::npos);
    CHECK(error_of("solver.scheme = rk4\n").find("solver.scheme") != std::string::npos);
    CHECK_FALSE(error_of("solver.dt = -1\n").empty());
    CHECK_FALSE(error_of("analysis.T = 1.0005\n").empty());
    CHECK_FALSE(error_of("noise.gamma = 0\n").empty());  // trace condition
    CHECK_FALSE(error_of("run.workers = 0\n").empty());
  }

  TEST_CASE("canonical text round trip and hash") {
    ExperimentConfig cfg;
    cfg.solver.alpha = 1.25;
    cfg.analysis.alpha_grid = {0.5, 1.5};
    const std::string text = canonical_text(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(canonical_text(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_hash(cfg).size() == 16);

    ExperimentConfig other = cfg;
    other.workers = 7;
    other.output.directory = "elsewhere";
    CHECK(config_hash(other) == config_hash(cfg));
    other.noise.seed = 99;
    CHECK(config_hash(other) != config_hash(cfg));
  }

  TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  }
}

#include <random>
#include <sstream>

#include "doctest.h"
#include "sns/config.hpp"
#include "sns/csv.hpp"

using namespace sns;

TEST_CASE("empty config yields the documented defaults") {
  RunConfig cfg = parse_config("");
  CHECK(cfg.mesh_n == 8);
  CHECK(cfg.M == 64);
  CHECK(cfg.T == 1.0);
  CHECK(cfg.mu == 1.0);
  CHECK(cfg.formulation == RunFormulation::both);
  CHECK(cfg.convection);
  CHECK(cfg.solver == SchemeOptions::Solver::automatic);
  CHECK(cfg.j_max == 4);
  CHECK(cfg.decay_r == 4.5);
  CHECK(cfg.scale == 0.5);
  CHECK(cfg.seed == 42);
  CHECK(cfg.ladder_mode == LadderMode::time);
  CHECK(cfg.ladder_levels == 4);
  CHECK(cfg.ladder_samples == 32);
  CHECK(cfg.ladder_alpha == 0.9);
  CHECK(cfg.stopping_r_ladder.size() == 4);
  CHECK(!cfg.stopping_track);
}

TEST_CASE("decay_r at or below 4 is rejected with the line number") {
  try {
    parse_config("# comment\nnoise.decay_r = 3.0\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("requires r > 4") != std::string::npos);
    CHECK(std::string(e.what()).find("config line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("noise.decay_r = 4.0\n"), ConfigError);
}

TEST_CASE("unknown keys and malformed lines carry their line number") {
  try {
    parse_config("run.mu = 1\n\nrun.bogus = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.mu = \n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.mu = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.M = -2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.formulation = z\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("stopping.r_ladder = 2.0,1.0\n"), ConfigError);
}

TEST_CASE("comments, blank lines, and whitespace are tolerated") {
  RunConfig cfg = parse_config("# header\n\n  run.mesh_n   =   12  \n#trailer\nrun.T=2.5\n");
  CHECK(cfg.mesh_n == 12);
  CHECK(cfg.T == 2.5);
}

TEST_CASE("serialise(parse(x)) is idempotent after one normalisation") {
  std::string text = "run.mu = 0.05\nnoise.scale = 2\nladder.mode = joint\n";
  RunConfig cfg = parse_config(text);
  std::string norm = serialize_config(cfg);
  RunConfig cfg2 = parse_config(norm);
  CHECK(serialize_config(cfg2) == norm);
  CHECK(cfg2.mu == cfg.mu);
  CHECK(cfg2.ladder_mode == LadderMode::joint);
}

TEST_CASE("round-trip fuzz over random valid configs") {
  std::mt19937_64 rng(777);
  auto pick = [&](std::initializer_list<const char*> xs) {
    std::vector<const char*> v(xs);
    return v[rng() % v.size()];
  };
  std::uniform_real_distribution<double> unit(0.01, 8.0);
  for (int iter = 0; iter < 100; ++iter) {
    std::ostringstream text;
    if (rng() % 2) text << "run.mesh_n = " << (1 + int(rng() % 30)) << "\n";
    if (rng() % 2) text << "run.M = " << (1 + int(rng() % 200)) << "\n";
    if (rng() % 2) text << "run.T = " << format_double(unit(rng)) << "\n";
    if (rng() % 2) text << "run.mu = " << format_double(unit(rng)) << "\n";
    if (rng() % 2) text << "run.formulation = " << pick({"u", "y", "both"}) << "\n";
    if (rng() % 2) text << "run.convection = " << pick({"on", "off"}) << "\n";
    if (rng() % 2) text << "run.solver = " << pick({"automatic", "direct", "krylov"}) << "\n";
    if (rng() % 2) text << "noise.j_max = " << (1 + int(rng() % 6)) << "\n";
    if (rng() % 2) text << "noise.decay_r = " << format_double(4.0 + unit(rng)) << "\n";
    if (rng() % 2) text << "noise.scale = " << format_double(unit(rng)) << "\n";
    if (rng() % 2) text << "noise.seed = " << rng() % 100000 << "\n";
    if (rng() % 2) text << "ladder.mode = " << pick({"time", "space", "joint"}) << "\n";
    if (rng() % 2) text << "ladder.samples = " << (1 + int(rng() % 64)) << "\n";
    if (rng() % 2) text << "ladder.alpha = " << format_double(0.1 + 0.2 * unit(rng) / 8) << "\n";
    if (rng() % 2) text << "ladder.formulation = " << pick({"u", "y", "stokes"}) << "\n";
    if (rng() % 2) {
      double a = unit(rng);
      text << "stopping.r_ladder = " << format_double(a) << "," << format_double(a + 0.5) << ","
           << format_double(a + 1.5) << "\n";
    }
    if (rng() % 2) text << "stopping.track = " << pick({"on", "off"}) << "\n";
    CAPTURE(text.str());
    RunConfig cfg = parse_config(text.str());
    std::string norm = serialize_config(cfg);
    CHECK(serialize_config(parse_config(norm)) == norm);
  }
}

TEST_CASE("config bridges preserve the numerical parameters") {
  RunConfig cfg = parse_config(
      "run.mu = 0.25\nnoise.j_max = 2\nnoise.decay_r = 6\nnoise.scale = 1.5\n"
      "ladder.mode = space\nladder.base_n = 4\nladder.ref_n = 32\nladder.base_m = 16\n"
      "ladder.ref_m = 16\nstopping.r1 = 2.5\nstopping.samples = 7\n");
  NoiseModel noise = config_noise(cfg);
  CHECK(noise.j_max == 2);
  CHECK(noise.num_modes == 4);
  SchemeOptions opt = config_scheme_options(cfg);
  CHECK(opt.mu == 0.25);
  LadderSpec spec = config_ladder(cfg);
  CHECK(spec.mode == LadderMode::space);
  CHECK(spec.ref_n == 32);
  CHECK(config_stopping(cfg).r1 == 2.5);
  CHECK(config_decay_params(cfg).samples == 7);
}

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sns/experiments.hpp"
#include "sns/schemes.hpp"
#include "sns/stopping.hpp"

namespace sns {

struct ConfigError : std::runtime_error {
  ConfigError(int line_, const std::string& what_)
      : std::runtime_error(line_ > 0 ? "config line " + std::to_string(line_) + ": " + what_
                                     : "config: " + what_),
        line(line_) {}
  int line;
};

enum class RunFormulation { velocity, transformed, both };

// Line-oriented "section.key = value" file, '#' starts a comment line.
// Unknown keys and malformed values are hard errors carrying the line number.
struct RunConfig {
  // run.*
  int mesh_n = 8;
  int M = 64;
  double T = 1.0;
  double mu = 1.0;
  RunFormulation formulation = RunFormulation::both;
  bool convection = true;
  ConvectionForm convection_form = ConvectionForm::stabilized;
  SchemeOptions::Solver solver = SchemeOptions::Solver::automatic;

  // noise.*
  int j_max = 4;
  double decay_r = 4.5;
  double scale = 0.5;
  std::uint64_t seed = 42;

  // ladder.*
  LadderMode ladder_mode = LadderMode::time;
  int ladder_levels = 4;
  int ladder_base_n = 16;
  int ladder_base_m = 16;
  int ladder_ref_n = 16;
  int ladder_ref_m = 1024;
  int ladder_samples = 32;
  StudyFormulation ladder_formulation = StudyFormulation::transformed;
  double ladder_alpha = 0.9;
  double ladder_xi = 0.0;  // <= 0 calibrates from the coarsest level

  // stopping.*
  double stopping_r1 = 1.0;
  double stopping_r2 = 1.0;
  double stopping_k = 1.0;
  std::vector<double> stopping_r_ladder = {1.3, 1.6, 1.9, 2.2};
  int stopping_samples = 100;
  bool stopping_track = false;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
// Normalised emission: every key, fixed order, %.17g doubles.
// parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& cfg);

// Bridges into the numerical layers.
NoiseModel config_noise(const RunConfig& cfg);
SchemeOptions config_scheme_options(const RunConfig& cfg);
LadderSpec config_ladder(const RunConfig& cfg);
StoppingConfig config_stopping(const RunConfig& cfg);
DecayStudyParams config_decay_params(const RunConfig& cfg);

const char* to_string(RunFormulation f);
const char* to_string(LadderMode m);
const char* to_string(StudyFormulation f);

}  // namespace sns

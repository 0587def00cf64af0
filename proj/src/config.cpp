#include "sns/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <sstream>

#include "sns/csv.hpp"
#include "sns/io.hpp"

namespace sns {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double want_double(const std::string& value, int line) {
  try {
    return parse_double(value);
  } catch (const std::invalid_argument&) {
    throw ConfigError(line, "expected a number, got '" + value + "'");
  }
}

long long want_int(const std::string& value, int line) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || value.empty() || errno == ERANGE)
    throw ConfigError(line, "expected an integer, got '" + value + "'");
  return v;
}

std::uint64_t want_uint(const std::string& value, int line) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || value.empty() || errno == ERANGE ||
      (!value.empty() && value[0] == '-'))
    throw ConfigError(line, "expected a non-negative integer, got '" + value + "'");
  return v;
}

bool want_on_off(const std::string& value, int line) {
  if (value == "on") return true;
  if (value == "off") return false;
  throw ConfigError(line, "expected on|off, got '" + value + "'");
}

std::vector<double> want_double_list(const std::string& value, int line) {
  std::vector<double> out;
  std::string item;
  std::istringstream iss(value);
  while (std::getline(iss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(line, "empty entry in list '" + value + "'");
    out.push_back(want_double(item, line));
  }
  if (out.empty()) throw ConfigError(line, "expected a comma-separated list, got '" + value + "'");
  return out;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
  if (key == "run.mesh_n") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "run.mesh_n must be >= 1");
    cfg.mesh_n = static_cast<int>(v);
  } else if (key == "run.M") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "run.M must be >= 1");
    cfg.M = static_cast<int>(v);
  } else if (key == "run.T") {
    double v = want_double(value, line);
    if (!(v > 0)) throw ConfigError(line, "run.T must be positive");
    cfg.T = v;
  } else if (key == "run.mu") {
    double v = want_double(value, line);
    if (!(v > 0)) throw ConfigError(line, "run.mu must be positive");
    cfg.mu = v;
  } else if (key == "run.formulation") {
    if (value == "u")
      cfg.formulation = RunFormulation::velocity;
    else if (value == "y")
      cfg.formulation = RunFormulation::transformed;
    else if (value == "both")
      cfg.formulation = RunFormulation::both;
    else
      throw ConfigError(line, "run.formulation must be u|y|both, got '" + value + "'");
  } else if (key == "run.convection") {
    cfg.convection = want_on_off(value, line);
  } else if (key == "run.convection_form") {
    if (value == "stabilized")
      cfg.convection_form = ConvectionForm::stabilized;
    else if (value == "tensor")
      cfg.convection_form = ConvectionForm::tensor;
    else
      throw ConfigError(line, "run.convection_form must be stabilized|tensor");
  } else if (key == "run.solver") {
    if (value == "automatic")
      cfg.solver = SchemeOptions::Solver::automatic;
    else if (value == "direct")
      cfg.solver = SchemeOptions::Solver::direct;
    else if (value == "krylov")
      cfg.solver = SchemeOptions::Solver::krylov;
    else
      throw ConfigError(line, "run.solver must be automatic|direct|krylov");
  } else if (key == "noise.j_max") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "noise.j_max must be >= 1");
    cfg.j_max = static_cast<int>(v);
  } else if (key == "noise.decay_r") {
    double v = want_double(value, line);
    if (!(v > 4.0))
      throw ConfigError(line, "noise.decay_r = " + value +
                                  " requires r > 4 for W^{3,2} summability");
    cfg.decay_r = v;
  } else if (key == "noise.scale") {
    double v = want_double(value, line);
    if (!(v > 0)) throw ConfigError(line, "noise.scale must be positive");
    cfg.scale = v;
  } else if (key == "noise.seed") {
    cfg.seed = want_uint(value, line);
  } else if (key == "ladder.mode") {
    if (value == "time")
      cfg.ladder_mode = LadderMode::time;
    else if (value == "space")
      cfg.ladder_mode = LadderMode::space;
    else if (value == "joint")
      cfg.ladder_mode = LadderMode::joint;
    else
      throw ConfigError(line, "ladder.mode must be time|space|joint");
  } else if (key == "ladder.levels") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "ladder.levels must be >= 1");
    cfg.ladder_levels = static_cast<int>(v);
  } else if (key == "ladder.base_n") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "ladder.base_n must be >= 1");
    cfg.ladder_base_n = static_cast<int>(v);
  } else if (key == "ladder.base_m") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "ladder.base_m must be >= 1");
    cfg.ladder_base_m = static_cast<int>(v);
  } else if (key == "ladder.ref_n") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "ladder.ref_n must be >= 1");
    cfg.ladder_ref_n = static_cast<int>(v);
  } else if (key == "ladder.ref_m") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "ladder.ref_m must be >= 1");
    cfg.ladder_ref_m = static_cast<int>(v);
  } else if (key == "ladder.samples") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "ladder.samples must be >= 1");
    cfg.ladder_samples = static_cast<int>(v);
  } else if (key == "ladder.formulation") {
    if (value == "u")
      cfg.ladder_formulation = StudyFormulation::velocity;
    else if (value == "y")
      cfg.ladder_formulation = StudyFormulation::transformed;
    else if (value == "stokes")
      cfg.ladder_formulation = StudyFormulation::stokes;
    else
      throw ConfigError(line, "ladder.formulation must be u|y|stokes");
  } else if (key == "ladder.alpha") {
    double v = want_double(value, line);
    if (!(v > 0) || v >= 2.0) throw ConfigError(line, "ladder.alpha must lie in (0, 2)");
    cfg.ladder_alpha = v;
  } else if (key == "ladder.xi") {
    cfg.ladder_xi = want_double(value, line);
  } else if (key == "stopping.r1") {
    double v = want_double(value, line);
    if (!(v > 0)) throw ConfigError(line, "stopping.r1 must be positive");
    cfg.stopping_r1 = v;
  } else if (key == "stopping.r2") {
    double v = want_double(value, line);
    if (!(v > 0)) throw ConfigError(line, "stopping.r2 must be positive");
    cfg.stopping_r2 = v;
  } else if (key == "stopping.k") {
    double v = want_double(value, line);
    if (!(v > 0)) throw ConfigError(line, "stopping.k must be positive");
    cfg.stopping_k = v;
  } else if (key == "stopping.r_ladder") {
    auto v = want_double_list(value, line);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0)) throw ConfigError(line, "stopping.r_ladder entries must be positive");
      if (i && !(v[i] > v[i - 1]))
        throw ConfigError(line, "stopping.r_ladder must be strictly increasing");
    }
    cfg.stopping_r_ladder = std::move(v);
  } else if (key == "stopping.samples") {
    long long v = want_int(value, line);
    if (v < 1) throw ConfigError(line, "stopping.samples must be >= 1");
    cfg.stopping_samples = static_cast<int>(v);
  } else if (key == "stopping.track") {
    cfg.stopping_track = want_on_off(value, line);
  } else {
    throw ConfigError(line, "unknown key '" + key + "'");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream iss(text);
  std::string raw;
  int line = 0;
  while (std::getline(iss, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "expected 'section.key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "empty key");
    if (value.empty()) throw ConfigError(line, "empty value for '" + key + "'");
    apply_key(cfg, key, value, line);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(0, e.what());
  }
  return parse_config(text);
}

const char* to_string(RunFormulation f) {
  switch (f) {
    case RunFormulation::velocity: return "u";
    case RunFormulation::transformed: return "y";
    default: return "both";
  }
}

const char* to_string(LadderMode m) {
  switch (m) {
    case LadderMode::time: return "time";
    case LadderMode::space: return "space";
    default: return "joint";
  }
}

const char* to_string(StudyFormulation f) {
  switch (f) {
    case StudyFormulation::velocity: return "u";
    case StudyFormulation::transformed: return "y";
    default: return "stokes";
  }
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "run.mesh_n = " << cfg.mesh_n << "\n";
  out << "run.M = " << cfg.M << "\n";
  out << "run.T = " << format_double(cfg.T) << "\n";
  out << "run.mu = " << format_double(cfg.mu) << "\n";
  out << "run.formulation = " << to_string(cfg.formulation) << "\n";
  out << "run.convection = " << (cfg.convection ? "on" : "off") << "\n";
  out << "run.convection_form = "
      << (cfg.convection_form == ConvectionForm::stabilized ? "stabilized" : "tensor") << "\n";
  const char* solver = cfg.solver == SchemeOptions::Solver::automatic ? "automatic"
                       : cfg.solver == SchemeOptions::Solver::direct  ? "direct"
                                                                      : "krylov";
  out << "run.solver = " << solver << "\n";
  out << "noise.j_max = " << cfg.j_max << "\n";
  out << "noise.decay_r = " << format_double(cfg.decay_r) << "\n";
  out << "noise.scale = " << format_double(cfg.scale) << "\n";
  out << "noise.seed = " << cfg.seed << "\n";
  out << "ladder.mode = " << to_string(cfg.ladder_mode) << "\n";
  out << "ladder.levels = " << cfg.ladder_levels << "\n";
  out << "ladder.base_n = " << cfg.ladder_base_n << "\n";
  out << "ladder.base_m = " << cfg.ladder_base_m << "\n";
  out << "ladder.ref_n = " << cfg.ladder_ref_n << "\n";
  out << "ladder.ref_m = " << cfg.ladder_ref_m << "\n";
  out << "ladder.samples = " << cfg.ladder_samples << "\n";
  out << "ladder.formulation = " << to_string(cfg.ladder_formulation) << "\n";
  out << "ladder.alpha = " << format_double(cfg.ladder_alpha) << "\n";
  out << "ladder.xi = " << format_double(cfg.ladder_xi) << "\n";
  out << "stopping.r1 = " << format_double(cfg.stopping_r1) << "\n";
  out << "stopping.r2 = " << format_double(cfg.stopping_r2) << "\n";
  out << "stopping.k = " << format_double(cfg.stopping_k) << "\n";
  out << "stopping.r_ladder = ";
  for (std::size_t i = 0; i < cfg.stopping_r_ladder.size(); ++i) {
    if (i) out << ",";
    out << format_double(cfg.stopping_r_ladder[i]);
  }
  out << "\n";
  out << "stopping.samples = " << cfg.stopping_samples << "\n";
  out << "stopping.track = " << (cfg.stopping_track ? "on" : "off") << "\n";
  return out.str();
}

NoiseModel config_noise(const RunConfig& cfg) {
  return build_noise(cfg.j_max, cfg.decay_r, cfg.scale);
}

SchemeOptions config_scheme_options(const RunConfig& cfg) {
  SchemeOptions opt;
  opt.mu = cfg.mu;
  opt.convection = cfg.convection;
  opt.convection_form = cfg.convection_form;
  opt.solver = cfg.solver;
  return opt;
}

LadderSpec config_ladder(const RunConfig& cfg) {
  LadderSpec spec;
  spec.mode = cfg.ladder_mode;
  spec.levels = cfg.ladder_levels;
  spec.base_n = cfg.ladder_base_n;
  spec.base_m = cfg.ladder_base_m;
  spec.ref_n = cfg.ladder_ref_n;
  spec.ref_m = cfg.ladder_ref_m;
  spec.samples = cfg.ladder_samples;
  spec.master_seed = cfg.seed;
  spec.formulation = cfg.ladder_formulation;
  return spec;
}

StoppingConfig config_stopping(const RunConfig& cfg) {
  StoppingConfig stop;
  stop.r1 = cfg.stopping_r1;
  stop.r2 = cfg.stopping_r2;
  stop.k = cfg.stopping_k;
  return stop;
}

DecayStudyParams config_decay_params(const RunConfig& cfg) {
  DecayStudyParams params;
  params.r_ladder = cfg.stopping_r_ladder;
  params.samples = cfg.stopping_samples;
  params.master_seed = cfg.seed;
  return params;
}

}  // namespace sns

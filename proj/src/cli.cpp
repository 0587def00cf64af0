#include "sns/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sns/config.hpp"
#include "sns/csv.hpp"
#include "sns/experiments.hpp"
#include "sns/io.hpp"
#include "sns/manifest.hpp"
#include "sns/mesh.hpp"
#include "sns/noise.hpp"
#include "sns/rng.hpp"
#include "sns/schemes.hpp"
#include "sns/stopping.hpp"
#include "sns/svg.hpp"
#include "sns/version.hpp"

namespace sns {

namespace {

constexpr const char* kDiagnosticsHeader =
    "m,t,energy,enstrophy,div_residual,energy_identity_residual,transform_gap";
constexpr const char* kAccumulatorHeader = "m,t,energy,enstrophy,stokes_norm2,noise_w22";

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

RunConfig resolve_config(const GlobalArgs& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config_file(g.config_path);
  if (g.seed_set) cfg.seed = g.seed;
  return cfg;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty() || dir == ".") return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty() || dir == ".") return file;
  return dir + "/" + file;
}

RunManifest start_manifest(const std::string& command, const RunConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.code_version = kVersion;
  m.config_text = serialize_config(cfg);
  m.config_hash = hex64(fnv1a_bytes(m.config_text));
  m.master_seed = cfg.seed;
  return m;
}

void finish_manifest(RunManifest& m, const GlobalArgs& g,
                     const std::vector<std::string>& files,
                     std::chrono::steady_clock::time_point t0) {
  for (const auto& f : files) manifest_add_output(m, g.out_dir, f);
  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(join_path(g.out_dir, "manifest.json"), manifest_to_json(m));
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& steps) {
  std::string out = kDiagnosticsHeader;
  out += "\n";
  for (const auto& d : steps) {
    out += std::to_string(d.m);
    out += ",";
    out += format_double(d.t);
    out += ",";
    out += format_double(d.energy);
    out += ",";
    out += format_double(d.enstrophy);
    out += ",";
    out += format_double(d.div_residual);
    out += ",";
    out += format_double(d.energy_residual);
    out += ",";
    out += format_double(d.transform_gap);
    out += "\n";
  }
  return out;
}

std::string accumulators_csv(const std::vector<StepDiagnostics>& steps) {
  std::string out = kAccumulatorHeader;
  out += "\n";
  for (const auto& d : steps) {
    out += std::to_string(d.m);
    out += ",";
    out += format_double(d.t);
    out += ",";
    out += format_double(d.energy);
    out += ",";
    out += format_double(d.enstrophy);
    out += ",";
    out += format_double(d.stokes_norm2);
    out += ",";
    out += format_double(d.noise_w22);
    out += "\n";
  }
  return out;
}

std::string rates_csv(const RateStudyResult& study) {
  std::string out = "level,tau,h,mean_E,q50,q90,N\n";
  for (const auto& lv : study.levels) {
    out += std::to_string(lv.level);
    out += ",";
    out += format_double(lv.tau);
    out += ",";
    out += format_double(lv.h);
    out += ",";
    out += format_double(lv.mean_e);
    out += ",";
    out += format_double(lv.q50);
    out += ",";
    out += format_double(lv.q90);
    out += ",";
    out += std::to_string(lv.errors.size());
    out += "\n";
  }
  return out;
}

std::string fit_csv(const RateStudyResult& study) {
  auto row = [](const char* name, const FitResult& fit) {
    std::string r = name;
    r += ",";
    r += format_double(fit.slope);
    r += ",";
    r += format_double(fit.intercept);
    r += ",";
    r += format_double(fit.r2);
    r += "\n";
    return r;
  };
  std::string out = "statistic,slope,intercept,r2\n";
  out += row("mean_E", study.fit_mean);
  out += row("q90", study.fit_q90);
  out += row("mean_E_dropped", study.fit_mean_dropped);
  return out;
}

std::string tail_csv(const TailReport& tail) {
  std::string out = "level,threshold,exceed,frequency,ci_low,ci_high\n";
  for (const auto& row : tail.rows) {
    out += std::to_string(row.level);
    out += ",";
    out += format_double(row.threshold);
    out += ",";
    out += std::to_string(row.exceed);
    out += ",";
    out += format_double(row.frequency);
    out += ",";
    out += format_double(row.ci_low);
    out += ",";
    out += format_double(row.ci_high);
    out += "\n";
  }
  return out;
}

std::string stopping_csv(const DecayStudy& study) {
  std::string out = "R,frequency,ci_low,ci_high\n";
  for (const auto& row : study.rows) {
    out += format_double(row.r);
    out += ",";
    out += format_double(row.frequency);
    out += ",";
    out += format_double(row.ci_low);
    out += ",";
    out += format_double(row.ci_high);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_mesh_info(const GlobalArgs& g, int n_override, const std::string& dump_path) {
  RunConfig cfg = resolve_config(g);
  int n = n_override > 0 ? n_override : cfg.mesh_n;
  Mesh mesh = build_mesh(n);
  std::printf("n=%d vertices=%d triangles=%d edges=%d h=%s\n", mesh.n, mesh.num_vertices(),
              mesh.num_triangles(), mesh.num_edges(), format_double(mesh.mesh_size).c_str());
  if (!dump_path.empty()) {
    std::ostringstream os;
    write_mesh_dump(mesh, os);
    write_file(dump_path, os.str());
    std::printf("dump written to %s\n", dump_path.c_str());
  }
  return 0;
}

int cmd_infsup(const GlobalArgs& g, const std::vector<int>& levels, int pressure_degree,
               const std::string& out_file) {
  std::string out = "n,velocity_dofs,pressure_dofs,beta_h\n";
  for (int n : levels) {
    Mesh mesh = build_mesh(n);
    FemSystem fem = assemble(mesh, 2, pressure_degree);
    double beta = infsup_constant(fem);
    out += std::to_string(n);
    out += ",";
    out += std::to_string(fem.nu);
    out += ",";
    out += std::to_string(fem.np);
    out += ",";
    out += format_double(beta);
    out += "\n";
  }
  if (out_file.empty()) {
    std::fputs(out.c_str(), stdout);
  } else {
    write_file(out_file, out);
    std::printf("written to %s\n", out_file.c_str());
  }
  return 0;
}

int cmd_simulate(const GlobalArgs& g) {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = resolve_config(g);
  ensure_dir(g.out_dir);

  Mesh mesh = build_mesh(cfg.mesh_n);
  FemSystem fem = assemble(mesh);
  FemSolvers solvers(fem);
  NoiseModel noise = config_noise(cfg);
  NoiseProjection proj = project_noise_modes(fem, solvers, noise);
  TimeGrid grid = make_time_grid(cfg.T, cfg.M);

  SchemeOptions opt = config_scheme_options(cfg);
  if (cfg.stopping_track) {
    opt.track_stokes_norm = true;
    opt.track_noise_norm = true;
  }
  StepContext ctx(fem, solvers, grid, opt);
  Vec u0 = make_initial_datum(fem, solvers);
  BrownianPath path = sample_path(noise, cfg.M, cfg.T, cfg.seed);

  std::vector<StepDiagnostics> rows;
  double max_gap = 0.0;
  int fallbacks = 0;
  if (cfg.formulation == RunFormulation::both) {
    PairResult pr = run_both(ctx, proj, u0, path);
    rows = pr.velocity.steps;
    max_gap = pr.max_transform_gap;
    fallbacks = pr.velocity.krylov_fallbacks + pr.transformed.krylov_fallbacks;
  } else {
    TrajectoryInputs in;
    in.formulation = cfg.formulation == RunFormulation::velocity ? Formulation::velocity
                                                                 : Formulation::transformed;
    in.u0 = u0;
    in.path = &path;
    TrajectoryResult traj = run_trajectory(ctx, proj, in);
    rows = traj.steps;
    fallbacks = traj.krylov_fallbacks;
  }

  std::vector<std::string> outputs;
  write_file(join_path(g.out_dir, "diagnostics.csv"), diagnostics_csv(rows));
  outputs.push_back("diagnostics.csv");
  if (cfg.stopping_track) {
    write_file(join_path(g.out_dir, "stopping_accumulators.csv"), accumulators_csv(rows));
    outputs.push_back("stopping_accumulators.csv");
  }

  RunManifest manifest = start_manifest("simulate", cfg);
  manifest.sample_seeds = {cfg.seed};
  manifest.path_checksums = {hex64(path_checksum(path))};
  finish_manifest(manifest, g, outputs, t0);

  const auto& last = rows.back();
  std::printf("simulate: n=%d M=%d T=%s mu=%s formulation=%s\n", cfg.mesh_n, cfg.M,
              format_double(cfg.T).c_str(), format_double(cfg.mu).c_str(),
              to_string(cfg.formulation));
  std::printf("noise: %d modes, HS sums L2=%s W12=%s W22=%s W32=%s\n", noise.num_modes,
              format_double(noise.hs_l2).c_str(), format_double(noise.hs_w1).c_str(),
              format_double(noise.hs_w2).c_str(), format_double(noise.hs_w3).c_str());
  std::printf("final: energy=%s enstrophy=%s div_residual=%s\n",
              format_double(last.energy).c_str(), format_double(last.enstrophy).c_str(),
              format_double(last.div_residual).c_str());
  if (cfg.formulation == RunFormulation::both)
    std::printf("max transform gap: %s\n", format_double(max_gap).c_str());
  if (fallbacks > 0) std::printf("krylov fallbacks: %d\n", fallbacks);
  std::printf("outputs in %s: diagnostics.csv%s manifest.json\n", g.out_dir.c_str(),
              cfg.stopping_track ? " stopping_accumulators.csv" : "");
  return 0;
}

int run_convergence(const GlobalArgs& g, RunConfig cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ensure_dir(g.out_dir);

  LadderSpec spec = config_ladder(cfg);
  validate_ladder(spec);
  NoiseModel noise = config_noise(cfg);
  StudyOptions opt;
  opt.mu = cfg.mu;
  opt.T = cfg.T;
  opt.solver = cfg.solver;
  opt.threads = g.threads;

  RateStudyResult study = rate_study(spec, noise, opt);
  TailReport tail = probability_tail_report(study, cfg.ladder_xi, cfg.ladder_alpha);

  std::string rates = rates_csv(study);
  write_file(join_path(g.out_dir, "rates.csv"), rates);
  write_file(join_path(g.out_dir, "fit.csv"), fit_csv(study));
  write_file(join_path(g.out_dir, "tail.csv"), tail_csv(tail));
  write_file(join_path(g.out_dir, "plot.svg"), plot_rates_table(parse_csv(rates)));

  RunManifest manifest = start_manifest("convergence", cfg);
  manifest.sample_seeds = study.sample_seeds;
  for (auto c : study.path_checksums) manifest.path_checksums.push_back(hex64(c));
  finish_manifest(manifest, g, {"rates.csv", "fit.csv", "tail.csv", "plot.svg"}, t0);

  std::printf("convergence: mode=%s formulation=%s levels=%d samples=%d seed=%llu\n",
              to_string(spec.mode), to_string(spec.formulation), spec.levels, spec.samples,
              static_cast<unsigned long long>(spec.master_seed));
  for (const auto& lv : study.levels) {
    std::printf("  level %d: n=%d M=%d tau=%.3g h=%.3g mean_E=%.6g q50=%.6g q90=%.6g\n", lv.level,
                lv.mesh_n, lv.steps, lv.tau, lv.h, lv.mean_e, lv.q50, lv.q90);
  }
  std::printf("fit: mean slope=%.4f (r2=%.4f), q90 slope=%.4f, dropped-coarsest slope=%.4f\n",
              study.fit_mean.slope, study.fit_mean.r2, study.fit_q90.slope,
              study.fit_mean_dropped.slope);
  std::printf("tail (xi=%.6g, alpha=%.3g):", tail.xi, tail.alpha);
  for (const auto& row : tail.rows) std::printf(" %d/%zu", row.exceed, study.sample_seeds.size());
  std::printf("  strictly_decreasing=%s to_zero=%s\n", tail.strictly_decreasing ? "yes" : "no",
              tail.decreasing_to_zero ? "yes" : "no");
  if (study.krylov_fallbacks > 0)
    std::printf("krylov fallbacks: %d\n", study.krylov_fallbacks);
  std::printf("outputs in %s: rates.csv fit.csv tail.csv plot.svg manifest.json\n",
              g.out_dir.c_str());
  return 0;
}

int cmd_stopping_stats(const GlobalArgs& g, const std::vector<std::string>& inputs) {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = resolve_config(g);
  ensure_dir(g.out_dir);

  DecayStudy study;
  RunManifest manifest = start_manifest("stopping-stats", cfg);

  if (!inputs.empty()) {
    // post-hoc mode over recorded accumulator CSVs, one trajectory per file
    for (const auto& path : inputs) {
      CsvTable table = parse_csv(read_file(path));
      std::size_t c_t = column_index(table, "t");
      std::size_t c_energy = column_index(table, "energy");
      std::size_t c_enstrophy = column_index(table, "enstrophy");
      std::size_t c_stokes = column_index(table, "stokes_norm2");
      std::size_t c_noise = column_index(table, "noise_w22");
      if (table.rows.size() < 2)
        throw std::runtime_error(path + ": need at least two steps");
      std::vector<double> energy, enstrophy, stokes, noise_w22;
      for (const auto& row : table.rows) {
        energy.push_back(parse_double(row[c_energy]));
        enstrophy.push_back(parse_double(row[c_enstrophy]));
        stokes.push_back(parse_double(row[c_stokes]));
        noise_w22.push_back(parse_double(row[c_noise]));
      }
      double tau = parse_double(table.rows[1][c_t]) - parse_double(table.rows[0][c_t]);
      auto acc = build_accumulators(energy, enstrophy, stokes, noise_w22, tau);
      study.s_finals.push_back(acc.s_accum.back());
    }
    int n = static_cast<int>(study.s_finals.size());
    for (double r : cfg.stopping_r_ladder) {
      DecayRow row;
      row.r = r;
      double threshold = r * r * r * r;
      for (double s : study.s_finals)
        if (s >= threshold) ++row.hits;
      row.frequency = static_cast<double>(row.hits) / n;
      auto ci = wilson_interval(row.hits, n);
      row.ci_low = ci.low;
      row.ci_high = ci.high;
      study.rows.push_back(row);
    }
  } else {
    // self-running mode: one decay study on the configured problem
    Mesh mesh = build_mesh(cfg.mesh_n);
    FemSystem fem = assemble(mesh);
    FemSolvers solvers(fem);
    NoiseModel noise = config_noise(cfg);
    NoiseProjection proj = project_noise_modes(fem, solvers, noise);
    TimeGrid grid = make_time_grid(cfg.T, cfg.M);
    SchemeOptions opt = config_scheme_options(cfg);
    opt.track_stokes_norm = true;
    opt.track_noise_norm = true;
    StepContext ctx(fem, solvers, grid, opt);
    Vec u0 = make_initial_datum(fem, solvers);
    DecayStudyParams params = config_decay_params(cfg);
    params.threads = g.threads;
    study = stopping_decay_study(ctx, proj, u0, params);
    manifest.sample_seeds.reserve(params.samples);
    for (int i = 0; i < params.samples; ++i)
      manifest.sample_seeds.push_back(sample_seed(params.master_seed, i));
  }

  std::string csv = stopping_csv(study);
  write_file(join_path(g.out_dir, "stopping.csv"), csv);
  finish_manifest(manifest, g, {"stopping.csv"}, t0);

  std::fputs(csv.c_str(), stdout);
  if (study.slope_points >= 2)
    std::printf("log-log decay slope over %d ladder points: %.4f\n", study.slope_points,
                study.log_slope);
  return 0;
}

int cmd_plot(const GlobalArgs& g, const std::string& input) {
  ensure_dir(g.out_dir);
  std::string in_path = input.empty() ? join_path(g.out_dir, "rates.csv") : input;
  CsvTable rates = parse_csv(read_file(in_path));
  std::string svg = plot_rates_table(rates);
  std::string out_path = join_path(g.out_dir, "plot.svg");
  write_file(out_path, svg);
  std::printf("plot written to %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"finite element study of a stochastic incompressible flow"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "configuration file (section.key = value lines)");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed override");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--threads", g.threads, "worker threads for sample loops")
      ->check(CLI::PositiveNumber);

  auto* mesh_info = app.add_subcommand("mesh-info", "mesh entity counts");
  int mesh_n = 0;
  std::string dump_path;
  mesh_info->add_option("--n", mesh_n, "cells per side (default from config)");
  mesh_info->add_option("--dump", dump_path, "write full entity dump to this file");

  auto* infsup = app.add_subcommand("infsup", "discrete inf-sup constants");
  std::vector<int> infsup_levels = {4, 8, 16};
  int pressure_degree = 1;
  infsup->add_option("--levels", infsup_levels, "mesh resolutions");
  infsup->add_option("--pressure-degree", pressure_degree, "1 (stable) or 2 (equal order)")
      ->check(CLI::Range(1, 2));
  std::string infsup_out;
  infsup->add_option("--out-file", infsup_out, "write CSV here instead of stdout");

  app.add_subcommand("simulate", "one trajectory with per-step diagnostics");

  auto* convergence = app.add_subcommand("convergence", "Monte-Carlo self-convergence study");
  std::string mode_arg, formulation_arg;
  convergence->add_option("--mode", mode_arg, "time|space|joint")
      ->check(CLI::IsMember({"time", "space", "joint"}));
  convergence->add_option("--formulation", formulation_arg, "u|y|stokes")
      ->check(CLI::IsMember({"u", "y", "stokes"}));

  auto* stokes_rate = app.add_subcommand("stokes-rate", "convergence with convection off");

  auto* stopping = app.add_subcommand("stopping-stats", "stopping-time decay frequencies");
  std::vector<std::string> stopping_inputs;
  stopping->add_option("files", stopping_inputs, "recorded accumulator CSVs (else self-run)");

  auto* plot = app.add_subcommand("plot", "log-log SVG from a rates.csv");
  std::string plot_input;
  plot->add_option("input", plot_input, "rates.csv path (default <out>/rates.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (mesh_info->parsed()) return cmd_mesh_info(g, mesh_n, dump_path);
    if (infsup->parsed()) return cmd_infsup(g, infsup_levels, pressure_degree, infsup_out);
    if (app.get_subcommand("simulate")->parsed()) return cmd_simulate(g);
    if (convergence->parsed() || stokes_rate->parsed()) {
      RunConfig cfg = resolve_config(g);
      if (!mode_arg.empty()) {
        cfg.ladder_mode = mode_arg == "time"    ? LadderMode::time
                          : mode_arg == "space" ? LadderMode::space
                                                : LadderMode::joint;
      }
      if (!formulation_arg.empty()) {
        cfg.ladder_formulation = formulation_arg == "u"   ? StudyFormulation::velocity
                                 : formulation_arg == "y" ? StudyFormulation::transformed
                                                          : StudyFormulation::stokes;
      }
      if (stokes_rate->parsed()) cfg.ladder_formulation = StudyFormulation::stokes;
      return run_convergence(g, cfg);
    }
    if (stopping->parsed()) return cmd_stopping_stats(g, stopping_inputs);
    if (plot->parsed()) return cmd_plot(g, plot_input);
    std::fprintf(stderr, "no subcommand\n");
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace sns

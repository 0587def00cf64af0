// End-to-end acceptance checks. Each case prints exactly one verdict line
// ("criterion N: PASS ..." or "criterion N: FAIL ...") computed from the
// same booleans it then asserts, so the printed verdict and the test result
// cannot disagree. Tolerances are pinned here as named constants.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "sns/cli.hpp"
#include "sns/experiments.hpp"
#include "sns/fem.hpp"
#include "sns/io.hpp"
#include "sns/mesh.hpp"
#include "sns/noise.hpp"
#include "sns/rng.hpp"
#include "sns/schemes.hpp"
#include "sns/stopping.hpp"

using namespace sns;
namespace fs = std::filesystem;

namespace {

struct Problem {
  FemSystem fem;
  std::unique_ptr<FemSolvers> solvers;
  NoiseModel noise;
  NoiseProjection proj;
  Vec u0;
};

std::unique_ptr<Problem> make_problem(int n, int j_max, double decay,
                                      double scale) {
  auto p = std::make_unique<Problem>();
  p->fem = assemble(build_mesh(n));
  p->solvers = std::make_unique<FemSolvers>(p->fem);
  p->noise = build_noise(j_max, decay, scale);
  p->proj = project_noise_modes(p->fem, *p->solvers, p->noise);
  p->u0 = make_initial_datum(p->fem, *p->solvers);
  return p;
}

// shared configuration of the paired-formulation checks (criteria 1 to 3)
constexpr int kPairMeshN = 4;
constexpr int kPairSteps = 16;
constexpr int kPairSeeds = 10;
constexpr std::uint64_t kMasterSeed = 42;

std::unique_ptr<Problem> pair_problem() { return make_problem(kPairMeshN, 4, 4.5, 0.5); }

// noise and options of the Monte-Carlo rate studies (criteria 5 to 7)
NoiseModel study_noise() { return build_noise(4, 8.0, 2.0); }

StudyOptions study_options() {
  StudyOptions opt;
  opt.mu = 0.05;
  opt.T = 1.0;
  opt.threads = 1;
  return opt;
}

LadderSpec temporal_spec(StudyFormulation formulation) {
  LadderSpec spec;
  spec.mode = LadderMode::time;
  spec.levels = 4;
  spec.base_n = 16;
  spec.base_m = 16;
  spec.ref_n = 16;
  spec.ref_m = 1024;
  spec.samples = 32;
  spec.master_seed = kMasterSeed;
  spec.formulation = formulation;
  return spec;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("sns");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("criterion 1: transform substitution stays within solver accuracy") {
  constexpr double kGapBound = 1e-8;
  auto p = pair_problem();
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, kPairSteps),
                  SchemeOptions{});

  double max_gap = 0.0;
  for (int i = 0; i < kPairSeeds; ++i) {
    BrownianPath path =
        sample_path(p->noise, kPairSteps, 1.0, sample_seed(kMasterSeed, i));
    PairResult pair = run_both(ctx, p->proj, p->u0, path);
    max_gap = std::max(max_gap, pair.max_transform_gap);
  }

  const bool ok = max_gap <= kGapBound;
  std::printf("criterion 1: %s (max transform gap %.3e over %d paths, bound %.0e)\n",
              ok ? "PASS" : "FAIL", max_gap, kPairSeeds, kGapBound);
  CHECK(ok);
}

TEST_CASE("criterion 2: discrete energy identity holds at every step") {
  constexpr double kResidualBound = 1e-9;
  auto p = pair_problem();
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, kPairSteps),
                  SchemeOptions{});

  double worst = 0.0;
  for (int i = 0; i < kPairSeeds; ++i) {
    BrownianPath path =
        sample_path(p->noise, kPairSteps, 1.0, sample_seed(kMasterSeed, i));
    TrajectoryInputs in{Formulation::velocity, p->u0, &path};
    TrajectoryResult res = run_trajectory(ctx, p->proj, in);
    for (const StepDiagnostics& d : res.steps)
      worst = std::max(worst,
                       std::abs(d.energy_residual) / std::max(1.0, d.energy));
  }

  const bool ok = worst <= kResidualBound;
  std::printf("criterion 2: %s (max relative energy defect %.3e over %d paths, bound %.0e)\n",
              ok ? "PASS" : "FAIL", worst, kPairSeeds, kResidualBound);
  CHECK(ok);
}

TEST_CASE("criterion 3: transformed iterates are discretely divergence free") {
  constexpr double kDivBound = 1e-9;
  auto p = pair_problem();
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, kPairSteps),
                  SchemeOptions{});

  double worst = 0.0;
  for (int i = 0; i < kPairSeeds; ++i) {
    BrownianPath path =
        sample_path(p->noise, kPairSteps, 1.0, sample_seed(kMasterSeed, i));
    TrajectoryInputs in{Formulation::transformed, p->u0, &path};
    run_trajectory(ctx, p->proj, in,
                   [&](int, const Vec& y, const Vec&, const StepDiagnostics&) {
                     worst = std::max(worst, divergence_residual(p->fem, y));
                   });
  }

  const bool ok = worst <= kDivBound;
  std::printf("criterion 3: %s (max normalised divergence pairing %.3e, bound %.0e)\n",
              ok ? "PASS" : "FAIL", worst, kDivBound);
  CHECK(ok);
}

TEST_CASE("criterion 4: inf-sup constant is mesh-robust, equal order is not") {
  constexpr double kVariationBound = 0.10;
  constexpr double kEqualOrderFactor = 0.5;

  std::vector<double> beta;
  for (int n : {4, 8, 16})
    beta.push_back(infsup_constant(assemble(build_mesh(n), 2, 1)));
  const double lo = *std::min_element(beta.begin(), beta.end());
  const double hi = *std::max_element(beta.begin(), beta.end());
  const double variation = (hi - lo) / lo;

  const double equal_order = infsup_constant(assemble(build_mesh(8), 2, 2));
  const double stable8 = beta[1];

  const bool ok_var = variation < kVariationBound;
  const bool ok_degen = equal_order < kEqualOrderFactor * stable8;
  const bool ok = ok_var && ok_degen;
  std::printf(
      "criterion 4: %s (beta_h %.4f/%.4f/%.4f, variation %.3f vs %.2f; equal-order %.2e vs %.4f)\n",
      ok ? "PASS" : "FAIL", beta[0], beta[1], beta[2], variation,
      kVariationBound, equal_order, kEqualOrderFactor * stable8);
  CHECK(ok_var);
  CHECK(ok_degen);
}

TEST_CASE("criterion 5: temporal rate of the linearised scheme is near one in time") {
  constexpr double kSlopeLo = 1.5;  // slopes of the squared error functional
  constexpr double kSlopeHi = 2.5;
  constexpr double kDroppedTol = 0.3;

  RateStudyResult study =
      rate_study(temporal_spec(StudyFormulation::stokes), study_noise(),
                 study_options());

  const double slope = study.fit_mean.slope;
  const double dropped = study.fit_mean_dropped.slope;
  const bool ok_band = slope >= kSlopeLo && slope <= kSlopeHi;
  const bool ok_stable = std::abs(slope - dropped) < kDroppedTol;
  const bool ok = ok_band && ok_stable;
  std::printf(
      "criterion 5: %s (mean-E slope %.3f in [%.1f, %.1f], dropped-coarsest %.3f, r2 %.3f)\n",
      ok ? "PASS" : "FAIL", slope, kSlopeLo, kSlopeHi, dropped,
      study.fit_mean.r2);
  CHECK(ok_band);
  CHECK(ok_stable);
}

TEST_CASE("criterion 6: convective scheme keeps the temporal rate in probability") {
  constexpr double kSlopeLo = 1.4;
  constexpr double kSlopeHi = 2.6;
  constexpr double kTailAlpha = 0.9;

  RateStudyResult study =
      rate_study(temporal_spec(StudyFormulation::transformed), study_noise(),
                 study_options());
  TailReport tail = probability_tail_report(study, 0.0, kTailAlpha);

  const double slope = study.fit_q90.slope;
  const bool ok_band = slope >= kSlopeLo && slope <= kSlopeHi;
  const bool ok_tail = tail.strictly_decreasing;
  const bool ok = ok_band && ok_tail;

  std::string counts;
  for (const TailRow& row : tail.rows) {
    if (!counts.empty()) counts += "/";
    counts += std::to_string(row.exceed);
  }
  std::printf(
      "criterion 6: %s (q90 slope %.3f in [%.1f, %.1f]; tail exceedances %s of %d at alpha %.1f)\n",
      ok ? "PASS" : "FAIL", slope, kSlopeLo, kSlopeHi, counts.c_str(),
      study.spec.samples, kTailAlpha);
  CHECK(ok_band);
  CHECK(ok_tail);
}

TEST_CASE("criterion 7: spatial refinement converges at least quadratically in error") {
  constexpr double kSlopeLo = 1.5;  // squared functional, so h^2 overall

  LadderSpec spec;
  spec.mode = LadderMode::space;
  spec.levels = 3;
  spec.base_n = 4;
  spec.base_m = 512;
  spec.ref_n = 32;
  spec.ref_m = 512;
  spec.samples = 20;
  spec.master_seed = kMasterSeed;
  spec.formulation = StudyFormulation::transformed;

  RateStudyResult study = rate_study(spec, study_noise(), study_options());

  const double slope = study.fit_mean.slope;
  const bool ok = slope >= kSlopeLo;
  std::printf("criterion 7: %s (mean-E slope in h %.3f, lower bound %.1f, r2 %.3f)\n",
              ok ? "PASS" : "FAIL", slope, kSlopeLo, study.fit_mean.r2);
  CHECK(ok);
}

TEST_CASE("criterion 8: stopping frequencies decay along the threshold ladder") {
  constexpr double kSlopeCeiling = -2.0;

  auto p = make_problem(8, 4, 6.0, 4.0);
  SchemeOptions opt;
  opt.mu = 0.05;
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 64), opt);

  DecayStudyParams params;
  params.r_ladder = {1.3, 1.6, 1.9, 2.2};
  params.samples = 100;
  params.master_seed = kMasterSeed;
  params.threads = 1;
  DecayStudy study = stopping_decay_study(ctx, p->proj, p->u0, params);

  bool monotone = true;
  for (size_t i = 1; i < study.rows.size(); ++i)
    if (study.rows[i].frequency > study.rows[i - 1].frequency) monotone = false;
  const bool vanishes = study.rows.back().frequency == 0.0;
  const bool steep =
      study.slope_points < 2 || study.log_slope <= kSlopeCeiling;
  const bool ok = monotone && vanishes && steep;

  std::string freqs;
  for (const DecayRow& row : study.rows) {
    if (!freqs.empty()) freqs += "/";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", row.frequency);
    freqs += buf;
  }
  std::printf(
      "criterion 8: %s (frequencies %s over R ladder, log-log slope %.2f from %d points)\n",
      ok ? "PASS" : "FAIL", freqs.c_str(), study.log_slope,
      study.slope_points);
  CHECK(monotone);
  CHECK(vanishes);
  CHECK(steep);
}

TEST_CASE("criterion 9: study outputs are independent of the thread count") {
  fs::path base = fs::temp_directory_path() / "sns_acceptance_threads";
  fs::remove_all(base);
  fs::create_directories(base);
  fs::path cfg = base / "study.cfg";
  write_file(cfg.string(),
             "run.mu = 0.05\n"
             "noise.j_max = 4\n"
             "noise.decay_r = 8.0\n"
             "noise.scale = 2.0\n"
             "noise.seed = 42\n"
             "ladder.mode = time\n"
             "ladder.levels = 4\n"
             "ladder.base_n = 16\n"
             "ladder.base_m = 16\n"
             "ladder.ref_n = 16\n"
             "ladder.ref_m = 1024\n"
             "ladder.samples = 32\n"
             "ladder.formulation = stokes\n");
  fs::path d1 = base / "t1";
  fs::path d2 = base / "t2";

  const int rc1 = run_cli({"--config", cfg.string(), "--out", d1.string(),
                           "--threads", "1", "convergence"});
  const int rc2 = run_cli({"--config", cfg.string(), "--out", d2.string(),
                           "--threads", "2", "convergence"});

  bool identical = false;
  std::string h1, h2;
  if (rc1 == 0 && rc2 == 0) {
    std::string a = read_file((d1 / "rates.csv").string());
    std::string b = read_file((d2 / "rates.csv").string());
    identical = a == b;
    h1 = hex64(fnv1a_bytes(a));
    h2 = hex64(fnv1a_bytes(b));
  }
  const bool ok = rc1 == 0 && rc2 == 0 && identical;
  std::printf(
      "criterion 9: %s (exit codes %d/%d, rates.csv hashes %s vs %s)\n",
      ok ? "PASS" : "FAIL", rc1, rc2, h1.c_str(), h2.c_str());
  CHECK(rc1 == 0);
  CHECK(rc2 == 0);
  CHECK(identical);
}

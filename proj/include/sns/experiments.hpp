#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sns/schemes.hpp"
#include "sns/stopping.hpp"

namespace sns {

enum class LadderMode {
  time,   // refine tau, mesh fixed
  space,  // refine h, tau fixed (very fine)
  joint,  // refine both together
};

enum class StudyFormulation {
  velocity,     // compare U iterates
  transformed,  // compare Y iterates (the analysed functional)
  stokes,       // transformed iterates with convection off
};

// Dyadic refinement ladder.  Tested level l in [0, levels) uses
//   time:  (base_n,        base_m << l)
//   space: (base_n << l,   base_m)
//   joint: (base_n << l,   base_m << l)
// and the reference level is (ref_n, ref_m), strictly finer in every
// coordinate that the mode refines.
struct LadderSpec {
  LadderMode mode = LadderMode::time;
  int levels = 4;
  int base_n = 16;
  int base_m = 16;
  int ref_n = 16;
  int ref_m = 1024;
  int samples = 32;
  std::uint64_t master_seed = 42;
  StudyFormulation formulation = StudyFormulation::transformed;
};

// Throws std::invalid_argument describing the first violated constraint:
// at least 3 levels, dyadic nesting, reference strictly finer.
void validate_ladder(const LadderSpec& spec);

int level_mesh_n(const LadderSpec& spec, int level);  // level==levels -> ref
int level_steps(const LadderSpec& spec, int level);

struct LevelErrors {
  int level = 0;
  int mesh_n = 0;
  int steps = 0;
  double tau = 0.0;
  double h = 0.0;
  std::vector<double> errors;  // per sample, index = sample id
  double mean_e = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares fit of log(y) against log(x); entries with y <= 0 are
// rejected (throws) since the statistics are squared errors.
FitResult fit_loglog(const std::vector<double>& x,
                     const std::vector<double>& y);

struct RateStudyResult {
  LadderSpec spec;
  double mu = 0.0;
  double T = 0.0;
  std::vector<LevelErrors> levels;               // coarsest first
  std::vector<std::uint64_t> sample_seeds;       // per sample
  std::vector<std::uint64_t> path_checksums;     // per sample, ref resolution
  FitResult fit_mean;          // log mean-E vs log tau (or log h in space mode)
  FitResult fit_q90;
  FitResult fit_mean_dropped;  // coarsest level excluded
  int krylov_fallbacks = 0;

  // Refinement variable per level: tau for time/joint ladders, h for space.
  std::vector<double> fit_abscissae() const;
};

struct StudyOptions {
  double mu = 1.0;
  double T = 1.0;
  SchemeOptions::Solver solver = SchemeOptions::Solver::automatic;
  int threads = 1;
  bool parallel_assembly = false;
};

// Velocity states of one fine trajectory, kept at a fixed stride of time
// indices so coarse grids can be compared at exactly matching times.
struct ReferenceTrajectory {
  int mesh_n = 0;
  int steps = 0;
  double tau = 0.0;
  int stride = 1;
  std::vector<Vec> states;  // states[j] at time index j*stride; j=0 is t=0

  const Vec& at_time_index(int time_index) const;
};

ReferenceTrajectory reference_solve(const StepContext& ctx,
                                    const NoiseProjection& proj, const Vec& u0,
                                    const BrownianPath& path, int store_stride,
                                    StudyFormulation formulation);

// The squared error functional
//   E = max_m [ ||d_m||_{L2}^2 + sum_{n<=m} tau ||grad d_n||^2 ],
// d_m the difference at coarse time t_m, measured on the reference mesh
// (prolong maps coarse velocity dofs there; pass nullptr when meshes agree).
// Norms use the reference level's mass and stiffness forms.
double error_against_reference(const StepContext& coarse_ctx,
                               const NoiseProjection& coarse_proj,
                               const Vec& coarse_u0, const BrownianPath& path,
                               StudyFormulation formulation,
                               const SpMat* prolong,
                               const FemSystem& ref_fem,
                               const ReferenceTrajectory& ref,
                               int* fallbacks = nullptr);

// Full Monte-Carlo self-convergence study over the ladder: per sample, one
// Brownian path at reference resolution drives the reference and every
// tested level; per-level squared errors are reduced to mean / q50 / q90 and
// log-log rate fits.
RateStudyResult rate_study(const LadderSpec& spec, const NoiseModel& noise,
                           const StudyOptions& opt);

struct TailRow {
  int level = 0;
  double threshold = 0.0;
  int exceed = 0;
  double frequency = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
};

struct TailReport {
  double xi = 0.0;
  double alpha = 0.0;
  std::vector<TailRow> rows;       // coarsest first
  bool strictly_decreasing = false;
  bool decreasing_to_zero = false;  // finest upper CI < coarsest frequency
};

// Empirical P[E > xi * (tau^{2 alpha} + h^{2 alpha})], with the threshold
// restricted to the coordinate(s) the ladder refines.  xi <= 0 requests
// calibration to the coarsest level's median error.
TailReport probability_tail_report(const RateStudyResult& study, double xi,
                                   double alpha);

}  // namespace sns

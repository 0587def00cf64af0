#include "sns/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "sns/parallel.hpp"
#include "sns/rng.hpp"

namespace sns {

namespace {

int finest_tested_steps(const LadderSpec& spec) {
  return spec.mode == LadderMode::space ? spec.base_m
                                        : spec.base_m << (spec.levels - 1);
}

int finest_tested_mesh(const LadderSpec& spec) {
  return spec.mode == LadderMode::time ? spec.base_n
                                       : spec.base_n << (spec.levels - 1);
}

double quantile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const int n = static_cast<int>(sorted.size());
  int idx = static_cast<int>(std::ceil(q * n)) - 1;
  idx = std::max(0, std::min(n - 1, idx));
  return sorted[idx];
}

}  // namespace

void validate_ladder(const LadderSpec& spec) {
  if (spec.levels < 3)
    throw std::invalid_argument("ladder: need at least 3 levels for a fit");
  if (spec.base_n < 1 || spec.base_m < 1)
    throw std::invalid_argument("ladder: base levels must be >= 1");
  if (spec.samples < 1)
    throw std::invalid_argument("ladder: need at least one sample");

  const int fm = finest_tested_steps(spec);
  const int fn = finest_tested_mesh(spec);

  const bool refines_time = spec.mode != LadderMode::space;
  const bool refines_space = spec.mode != LadderMode::time;

  if (refines_time) {
    if (spec.ref_m <= fm || spec.ref_m % fm != 0)
      throw std::invalid_argument(
          "ladder: reference step count must be a strictly finer dyadic "
          "refinement of the finest tested level");
  } else if (spec.ref_m != spec.base_m) {
    throw std::invalid_argument(
        "ladder: space mode fixes the time grid; ref_m must equal base_m");
  }

  if (refines_space) {
    if (spec.ref_n <= fn || spec.ref_n % fn != 0)
      throw std::invalid_argument(
          "ladder: reference mesh must be a strictly finer nested refinement "
          "of the finest tested level");
  } else if (spec.ref_n != spec.base_n) {
    throw std::invalid_argument(
        "ladder: time mode fixes the mesh; ref_n must equal base_n");
  }
}

int level_mesh_n(const LadderSpec& spec, int level) {
  if (level == spec.levels) return spec.ref_n;
  return spec.mode == LadderMode::time ? spec.base_n : spec.base_n << level;
}

int level_steps(const LadderSpec& spec, int level) {
  if (level == spec.levels) return spec.ref_m;
  return spec.mode == LadderMode::space ? spec.base_m : spec.base_m << level;
}

FitResult fit_loglog(const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_loglog: need matching series, >= 2 pts");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog: values must be positive");
    const double lx = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx;
    sy += ly[i];
    sxx += lx * lx;
    sxy += lx * ly[i];
  }
  FitResult fit;
  const double det = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (int i = 0; i < n; ++i) {
    const double pred = fit.slope * std::log(x[i]) + fit.intercept;
    ss_res += (ly[i] - pred) * (ly[i] - pred);
    ss_tot += (ly[i] - ybar) * (ly[i] - ybar);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<double> RateStudyResult::fit_abscissae() const {
  std::vector<double> x;
  for (const LevelErrors& le : levels)
    x.push_back(spec.mode == LadderMode::space ? le.h : le.tau);
  return x;
}

const Vec& ReferenceTrajectory::at_time_index(int time_index) const {
  if (time_index % stride != 0)
    throw std::invalid_argument(
        "reference trajectory: time index off the stored stride");
  return states.at(static_cast<size_t>(time_index / stride));
}

ReferenceTrajectory reference_solve(const StepContext& ctx,
                                    const NoiseProjection& proj, const Vec& u0,
                                    const BrownianPath& path, int store_stride,
                                    StudyFormulation formulation) {
  const int M = ctx.grid().M;
  if (store_stride < 1 || M % store_stride != 0)
    throw std::invalid_argument("reference_solve: stride must divide M");

  ReferenceTrajectory ref;
  ref.mesh_n = ctx.fem().mesh.n;
  ref.steps = M;
  ref.tau = ctx.grid().tau;
  ref.stride = store_stride;
  ref.states.resize(static_cast<size_t>(M / store_stride) + 1);

  TrajectoryInputs in;
  in.formulation = formulation == StudyFormulation::velocity
                       ? Formulation::velocity
                       : Formulation::transformed;
  in.u0 = u0;
  in.path = &path;

  run_trajectory(ctx, proj, in,
                 [&](int m, const Vec& iterate, const Vec&,
                     const StepDiagnostics&) {
                   if (m % store_stride == 0)
                     ref.states[m / store_stride] = iterate;
                 });
  return ref;
}

double error_against_reference(const StepContext& coarse_ctx,
                               const NoiseProjection& coarse_proj,
                               const Vec& coarse_u0, const BrownianPath& path,
                               StudyFormulation formulation,
                               const SpMat* prolong, const FemSystem& ref_fem,
                               const ReferenceTrajectory& ref,
                               int* fallbacks) {
  const int M = coarse_ctx.grid().M;
  if (ref.steps % M != 0)
    throw std::invalid_argument(
        "error_against_reference: time grids are not nested");
  const int ratio = ref.steps / M;
  const double tau = coarse_ctx.grid().tau;

  TrajectoryInputs in;
  in.formulation = formulation == StudyFormulation::velocity
                       ? Formulation::velocity
                       : Formulation::transformed;
  in.u0 = coarse_u0;
  in.path = &path;

  double err = 0.0;
  double grad_sum = 0.0;
  Vec d;
  const TrajectoryResult traj = run_trajectory(
      coarse_ctx, coarse_proj, in,
      [&](int m, const Vec& iterate, const Vec&, const StepDiagnostics&) {
        if (m == 0) return;
        if (prolong)
          d = (*prolong) * iterate;
        else
          d = iterate;
        d -= ref.at_time_index(m * ratio);
        grad_sum += tau * d.dot(ref_fem.K * d);
        err = std::max(err, d.dot(ref_fem.M * d) + grad_sum);
      });
  if (fallbacks) *fallbacks += traj.krylov_fallbacks;
  return err;
}

RateStudyResult rate_study(const LadderSpec& spec, const NoiseModel& noise,
                           const StudyOptions& opt) {
  validate_ladder(spec);

  struct MeshKit {
    std::shared_ptr<FemSystem> fem;
    std::shared_ptr<FemSolvers> solvers;
    std::shared_ptr<NoiseProjection> proj;
    std::shared_ptr<SpMat> prolong;  // to the reference mesh; null if same
    Vec u0;
  };

  // One kit per distinct mesh (time ladders reuse a single one).
  std::map<int, MeshKit> kits;
  for (int l = 0; l <= spec.levels; ++l) {
    const int n = level_mesh_n(spec, l);
    if (kits.count(n)) continue;
    MeshKit kit;
    kit.fem = std::make_shared<FemSystem>(assemble(build_mesh(n), 2, 1));
    kit.solvers = std::make_shared<FemSolvers>(*kit.fem);
    kit.proj = std::make_shared<NoiseProjection>(
        project_noise_modes(*kit.fem, *kit.solvers, noise));
    kit.u0 = make_initial_datum(*kit.fem, *kit.solvers);
    kits.emplace(n, std::move(kit));
  }
  const MeshKit& ref_kit = kits.at(spec.ref_n);
  for (auto& [n, kit] : kits) {
    if (n != spec.ref_n)
      kit.prolong = std::make_shared<SpMat>(
          build_velocity_prolongation(*kit.fem, *ref_kit.fem));
  }

  SchemeOptions base_opt;
  base_opt.mu = opt.mu;
  base_opt.convection = spec.formulation != StudyFormulation::stokes;
  base_opt.solver = opt.solver;
  base_opt.parallel_assembly = opt.parallel_assembly;

  // Step contexts, one per (mesh, time grid) pair, shared across samples.
  std::vector<std::shared_ptr<StepContext>> contexts(spec.levels + 1);
  for (int l = 0; l <= spec.levels; ++l) {
    const MeshKit& kit = kits.at(level_mesh_n(spec, l));
    contexts[l] = std::make_shared<StepContext>(
        *kit.fem, *kit.solvers, make_time_grid(opt.T, level_steps(spec, l)),
        base_opt);
  }

  RateStudyResult res;
  res.spec = spec;
  res.mu = opt.mu;
  res.T = opt.T;
  res.levels.resize(spec.levels);
  for (int l = 0; l < spec.levels; ++l) {
    LevelErrors& le = res.levels[l];
    le.level = l;
    le.mesh_n = level_mesh_n(spec, l);
    le.steps = level_steps(spec, l);
    le.tau = opt.T / le.steps;
    le.h = kits.at(le.mesh_n).fem->mesh.mesh_size;
    le.errors.assign(spec.samples, 0.0);
  }
  res.sample_seeds.resize(spec.samples);
  res.path_checksums.resize(spec.samples);

  const int store_stride = spec.ref_m / finest_tested_steps(spec);
  std::vector<int> fallback_counts(spec.samples, 0);

  for_each_sample(spec.samples, opt.threads, [&](int i) {
    const std::uint64_t seed = sample_seed(spec.master_seed, i);
    res.sample_seeds[i] = seed;
    const BrownianPath path = sample_path(noise, spec.ref_m, opt.T, seed);
    res.path_checksums[i] = path_checksum(path);

    const ReferenceTrajectory ref =
        reference_solve(*contexts[spec.levels], *ref_kit.proj, ref_kit.u0,
                        path, store_stride, spec.formulation);

    int fb = 0;
    for (int l = 0; l < spec.levels; ++l) {
      const MeshKit& kit = kits.at(level_mesh_n(spec, l));
      res.levels[l].errors[i] = error_against_reference(
          *contexts[l], *kit.proj, kit.u0, path, spec.formulation,
          kit.prolong.get(), *ref_kit.fem, ref, &fb);
    }
    fallback_counts[i] = fb;
  });

  for (int i = 0; i < spec.samples; ++i)
    res.krylov_fallbacks += fallback_counts[i];

  std::vector<double> mean_series, q90_series;
  for (LevelErrors& le : res.levels) {
    double sum = 0.0;
    for (double e : le.errors) sum += e;
    le.mean_e = sum / spec.samples;
    le.q50 = quantile(le.errors, 0.5);
    le.q90 = quantile(le.errors, 0.9);
    mean_series.push_back(le.mean_e);
    q90_series.push_back(le.q90);
  }

  const std::vector<double> x = res.fit_abscissae();
  res.fit_mean = fit_loglog(x, mean_series);
  res.fit_q90 = fit_loglog(x, q90_series);
  res.fit_mean_dropped = fit_loglog(
      std::vector<double>(x.begin() + 1, x.end()),
      std::vector<double>(mean_series.begin() + 1, mean_series.end()));
  return res;
}

TailReport probability_tail_report(const RateStudyResult& study, double xi,
                                   double alpha) {
  const LadderSpec& spec = study.spec;
  auto denom = [&](const LevelErrors& le) {
    switch (spec.mode) {
      case LadderMode::time:
        return std::pow(le.tau, 2.0 * alpha);
      case LadderMode::space:
        return std::pow(le.h, 2.0 * alpha);
      case LadderMode::joint:
      default:
        return std::pow(le.tau, 2.0 * alpha) + std::pow(le.h, 2.0 * alpha);
    }
  };

  TailReport rep;
  rep.alpha = alpha;
  if (xi <= 0.0) {
    // Calibrate so the coarsest level's threshold sits at its median error.
    const LevelErrors& coarse = study.levels.front();
    xi = coarse.q50 / denom(coarse);
  }
  rep.xi = xi;

  const int N = static_cast<int>(study.levels.front().errors.size());
  for (const LevelErrors& le : study.levels) {
    TailRow row;
    row.level = le.level;
    row.threshold = xi * denom(le);
    for (double e : le.errors)
      if (e > row.threshold) ++row.exceed;
    row.frequency = static_cast<double>(row.exceed) / N;
    const WilsonInterval ci = wilson_interval(row.exceed, N);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    rep.rows.push_back(row);
  }

  rep.strictly_decreasing = true;
  for (size_t i = 1; i < rep.rows.size(); ++i)
    if (!(rep.rows[i].frequency < rep.rows[i - 1].frequency))
      rep.strictly_decreasing = false;
  rep.decreasing_to_zero =
      rep.rows.back().ci_high < rep.rows.front().frequency;
  return rep;
}

}  // namespace sns

// Timing harness for the two parallel kernels against their serial
// reference paths: per-element convection assembly inside a trajectory, and
// the across-samples loop of a small rate study.  Both lanes must agree
// bitwise; the table reports wall time per configuration.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "sns/experiments.hpp"
#include "sns/fem.hpp"
#include "sns/mesh.hpp"
#include "sns/noise.hpp"
#include "sns/schemes.hpp"

using namespace sns;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec trajectory_final(int n, int M, bool parallel_assembly, double* wall) {
  Mesh mesh = build_mesh(n);
  FemSystem fem = assemble(mesh);
  FemSolvers solvers(fem);
  NoiseModel noise = build_noise(4, 4.5, 0.5);
  NoiseProjection proj = project_noise_modes(fem, solvers, noise);
  SchemeOptions opt;
  opt.mu = 1.0;
  opt.parallel_assembly = parallel_assembly;
  StepContext ctx(fem, solvers, make_time_grid(1.0, M), opt);
  TrajectoryInputs in;
  in.formulation = Formulation::velocity;
  in.u0 = make_initial_datum(fem, solvers);
  BrownianPath path = sample_path(noise, M, 1.0, 7);
  in.path = &path;
  auto t0 = std::chrono::steady_clock::now();
  TrajectoryResult traj = run_trajectory(ctx, proj, in);
  *wall = seconds_since(t0);
  return traj.final_velocity;
}

RateStudyResult tiny_study(int threads, double* wall) {
  LadderSpec spec;
  spec.mode = LadderMode::time;
  spec.levels = 3;
  spec.base_n = 4;
  spec.base_m = 8;
  spec.ref_n = 4;
  spec.ref_m = 128;
  spec.samples = 8;
  spec.master_seed = 42;
  spec.formulation = StudyFormulation::stokes;
  NoiseModel noise = build_noise(4, 4.5, 0.5);
  StudyOptions opt;
  opt.mu = 1.0;
  opt.threads = threads;
  auto t0 = std::chrono::steady_clock::now();
  RateStudyResult study = rate_study(spec, noise, opt);
  *wall = seconds_since(t0);
  return study;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 2;
  int n = 24, M = 12;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) threads = std::atoi(argv[++i]);
    if (!std::strcmp(argv[i], "--n") && i + 1 < argc) n = std::atoi(argv[++i]);
    if (!std::strcmp(argv[i], "--steps") && i + 1 < argc) M = std::atoi(argv[++i]);
  }

  std::printf("kernel                        serial      parallel    identical\n");

  {
    double t_serial = 0, t_parallel = 0;
    Vec a = trajectory_final(n, M, false, &t_serial);
    Vec b = trajectory_final(n, M, true, &t_parallel);
    bool same = a.size() == b.size() &&
                std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
    std::printf("convection assembly (n=%d)   %8.3fs   %8.3fs   %s\n", n, t_serial, t_parallel,
                same ? "yes" : "NO");
    if (!same) return 1;
  }

  {
    double t_serial = 0, t_parallel = 0;
    RateStudyResult a = tiny_study(1, &t_serial);
    RateStudyResult b = tiny_study(threads, &t_parallel);
    bool same = true;
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
      const auto& ea = a.levels[l].errors;
      const auto& eb = b.levels[l].errors;
      same = same && ea.size() == eb.size() &&
             std::memcmp(ea.data(), eb.data(), sizeof(double) * ea.size()) == 0;
    }
    std::printf("sample loop (%d threads)      %8.3fs   %8.3fs   %s\n", threads, t_serial,
                t_parallel, same ? "yes" : "NO");
    if (!same) return 1;
  }

  return 0;
}

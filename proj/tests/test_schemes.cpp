#include <stdexcept>
#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "doctest.h"
#include "sns/fem.hpp"
#include "sns/mesh.hpp"
#include "sns/noise.hpp"
#include "sns/schemes.hpp"

using namespace sns;

namespace {

struct Problem {
  FemSystem fem;
  std::unique_ptr<FemSolvers> solvers;
  NoiseModel noise;
  NoiseProjection proj;
  Vec u0;
};

std::unique_ptr<Problem> make_problem(int n, int j_max = 2, double decay = 4.5,
                                      double scale = 0.5) {
  auto p = std::make_unique<Problem>();
  p->fem = assemble(build_mesh(n));
  p->solvers = std::make_unique<FemSolvers>(p->fem);
  p->noise = build_noise(j_max, decay, scale);
  p->proj = project_noise_modes(p->fem, *p->solvers, p->noise);
  p->u0 = make_initial_datum(p->fem, *p->solvers);
  return p;
}

double mass_energy(const FemSystem& fem, const Vec& u) { return u.dot(fem.M * u); }

}  // namespace

TEST_CASE("zero forcing with zero datum keeps both formulations at zero") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 8, 1.0, 1);
  path.increments.setZero();
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 8), SchemeOptions{});

  PairResult pair = run_both(ctx, p->proj, Vec::Zero(p->fem.nu), path);
  CHECK(pair.velocity.final_velocity.norm() == 0.0);
  CHECK(pair.transformed.final_velocity.norm() == 0.0);
  CHECK(pair.velocity.final_pressure.norm() == 0.0);
  CHECK(pair.max_transform_gap == 0.0);
  for (const StepDiagnostics& d : pair.velocity.steps) {
    CHECK(d.energy == 0.0);
    CHECK(d.enstrophy == 0.0);
  }
}

TEST_CASE("without forcing the energy decays and the formulations coincide") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 8, 1.0, 2);
  path.increments.setZero();
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 8), SchemeOptions{});

  PairResult pair = run_both(ctx, p->proj, p->u0, path);
  const auto& steps = pair.velocity.steps;
  REQUIRE(steps.size() == 9);
  CHECK(steps[0].energy > 0.0);
  for (size_t m = 1; m < steps.size(); ++m) {
    CHECK(steps[m].energy < steps[m - 1].energy);
    CHECK(std::abs(steps[m].energy_residual) <=
          1e-9 * std::max(1.0, steps[m].energy));
  }
  // W = 0 makes the substitution the identity, so Y tracks U to solver noise
  CHECK(pair.max_transform_gap <= 1e-12);
  CHECK((pair.velocity.final_velocity - pair.transformed.final_velocity).norm() <=
        1e-12);
}

TEST_CASE("the observer sees the initial datum and a pinned time grid") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 8, 1.0, 3);
  TimeGrid grid = make_time_grid(1.0, 8);
  StepContext ctx(p->fem, *p->solvers, grid, SchemeOptions{});

  int calls = 0;
  Vec first;
  TrajectoryInputs in{Formulation::velocity, p->u0, &path};
  TrajectoryResult res = run_trajectory(
      ctx, p->proj, in,
      [&](int m, const Vec& iterate, const Vec& pressure, const StepDiagnostics& d) {
        if (m == 0) {
          first = iterate;
          CHECK(pressure.norm() == 0.0);
          CHECK(d.t == 0.0);
        }
        CHECK(d.m == m);
        CHECK(d.t == doctest::Approx(m * grid.tau).epsilon(1e-15));
        ++calls;
      });
  CHECK(calls == 9);
  REQUIRE(first.size() == p->u0.size());
  CHECK(std::memcmp(first.data(), p->u0.data(), sizeof(double) * first.size()) == 0);
  CHECK(res.steps.size() == 9);
  CHECK(res.steps[0].energy == doctest::Approx(mass_energy(p->fem, p->u0)).epsilon(1e-13));
}

TEST_CASE("one implicit step reproduces a dense saddle solve") {
  auto p = make_problem(2, 2, 4.5, 1.0);
  const double T = 0.25, mu = 0.7, tau = 0.25;
  BrownianPath path = sample_path(p->noise, 1, T, 99);

  SchemeOptions opt;
  opt.mu = mu;
  opt.solver = SchemeOptions::Solver::direct;
  StepContext ctx(p->fem, *p->solvers, make_time_grid(T, 1), opt);
  TrajectoryInputs in{Formulation::velocity, p->u0, &path};
  TrajectoryResult res = run_trajectory(ctx, p->proj, in);

  PhiWEvaluator ev(p->proj, path);
  Vec load = ev.load_increment(1);
  SpMat C = assemble_convection(p->fem, p->u0, ConvectionForm::stabilized);
  SpMat A = p->fem.M + mu * tau * p->fem.K + tau * C;
  Eigen::MatrixXd S = Eigen::MatrixXd(build_saddle(p->fem, A));

  const int nu = p->fem.nu, np = p->fem.np;
  Vec rhs = Vec::Zero(S.rows());
  rhs.head(nu) = p->fem.M * p->u0 + load;
  Vec sol = S.fullPivLu().solve(rhs);
  Vec u_oracle = sol.head(nu);
  Vec p_oracle = -sol.segment(nu, np) / tau;

  CHECK((res.final_velocity - u_oracle).norm() <=
        1e-10 * std::max(1.0, u_oracle.norm()));
  CHECK((res.final_pressure - p_oracle).norm() <=
        1e-10 * std::max(1.0, p_oracle.norm()));
}

TEST_CASE("the constant-matrix scheme matches the modal recursion") {
  auto p = make_problem(2, 1, 5.0, 1.0);
  const int M = 64;
  const double mu = 0.6;
  BrownianPath path = sample_path(p->noise, M, 1.0, 31);

  SchemeOptions opt;
  opt.mu = mu;
  opt.convection = false;
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, M), opt);
  TrajectoryInputs in{Formulation::velocity, p->u0, &path};
  TrajectoryResult res = run_trajectory(ctx, p->proj, in);

  // modal oracle: eigenpairs of the discrete Stokes pencil on ker B
  Eigen::MatrixXd Bd = Eigen::MatrixXd(p->fem.B);
  Eigen::MatrixXd Z = Eigen::FullPivLU<Eigen::MatrixXd>(Bd).kernel();
  Eigen::MatrixXd G = Z.transpose() * p->fem.M * Z;
  Eigen::MatrixXd Kz = Z.transpose() * p->fem.K * Z;
  G = 0.5 * (G + G.transpose());
  Kz = 0.5 * (Kz + Kz.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Kz, G);
  REQUIRE(ges.info() == Eigen::Success);
  Eigen::MatrixXd W = Z * ges.eigenvectors();  // M-orthonormal modes
  Eigen::VectorXd lambda = ges.eigenvalues();

  PhiWEvaluator ev(p->proj, path);
  const double tau = 1.0 / M;
  Eigen::VectorXd a = W.transpose() * (p->fem.M * p->u0);
  for (int m = 1; m <= M; ++m) {
    Eigen::VectorXd d = W.transpose() * ev.load_increment(m);
    a = (a + d).array() / (1.0 + mu * tau * lambda.array());
  }
  Vec u_oracle = W * a;

  CHECK((res.final_velocity - u_oracle).norm() <=
        1e-8 * std::max(1.0, u_oracle.norm()));
}

TEST_CASE("velocity and transformed trajectories agree on one path") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 8, 1.0, 5);
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 8), SchemeOptions{});
  PairResult pair = run_both(ctx, p->proj, p->u0, path);

  CHECK(pair.max_transform_gap <= 1e-9);
  for (size_t m = 0; m < pair.velocity.steps.size(); ++m) {
    CHECK(pair.velocity.steps[m].transform_gap <= 1e-9);
    CHECK(pair.transformed.steps[m].transform_gap ==
          pair.velocity.steps[m].transform_gap);
  }
}

TEST_CASE("energy identity holds for the stabilised form, not the plain one") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 16, 1.0, 6);

  auto max_residual = [&](ConvectionForm form) {
    SchemeOptions opt;
    opt.convection_form = form;
    StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 16), opt);
    TrajectoryInputs in{Formulation::velocity, p->u0, &path};
    TrajectoryResult res = run_trajectory(ctx, p->proj, in);
    double worst = 0.0;
    for (const auto& d : res.steps)
      worst = std::max(worst,
                       std::abs(d.energy_residual) / std::max(1.0, d.energy));
    return worst;
  };

  CHECK(max_residual(ConvectionForm::stabilized) <= 1e-9);
  // the plain tensor form leaks 1/2 <(div w) u, u> into the balance
  CHECK(max_residual(ConvectionForm::tensor) > 1e-9);
}

TEST_CASE("pathwise energy bound: forcing work dominates the energy gain") {
  auto p = make_problem(4);
  const int M = 16;
  BrownianPath path = sample_path(p->noise, M, 1.0, 11);
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, M), SchemeOptions{});

  std::vector<Vec> iterates;
  TrajectoryInputs in{Formulation::velocity, p->u0, &path};
  run_trajectory(ctx, p->proj, in,
                 [&](int, const Vec& u, const Vec&, const StepDiagnostics&) {
                   iterates.push_back(u);
                 });
  REQUIRE(iterates.size() == size_t(M + 1));

  PhiWEvaluator ev(p->proj, path);
  const double e0 = mass_energy(p->fem, iterates[0]);
  double work = 0.0;
  for (int m = 1; m <= M; ++m) {
    work += ev.load_increment(m).dot(iterates[m]);
    double em = mass_energy(p->fem, iterates[m]);
    CHECK(e0 + 2.0 * work - em >= -1e-9 * std::max(1.0, em));
  }
}

TEST_CASE("pressure iterates have zero mean") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 8, 1.0, 13);
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 8), SchemeOptions{});
  TrajectoryInputs in{Formulation::velocity, p->u0, &path};
  run_trajectory(ctx, p->proj, in,
                 [&](int m, const Vec&, const Vec& pr, const StepDiagnostics&) {
                   if (m == 0) return;
                   double mean = p->fem.pressure_area.dot(pr);
                   CHECK(std::abs(mean) <=
                         1e-12 * std::max(1.0, pressure_l2(p->fem, pr)));
                 });
}

TEST_CASE("accumulated pressure gradient is stable under time refinement") {
  auto p = make_problem(4);
  BrownianPath fine = sample_path(p->noise, 32, 1.0, 21);
  BrownianPath coarse = coarsen(fine, 16);

  auto accum = [&](int M, const BrownianPath& path) {
    StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, M), SchemeOptions{});
    TrajectoryInputs in{Formulation::velocity, p->u0, &path};
    return run_trajectory(ctx, p->proj, in).pressure_grad_accum;
  };
  double a16 = accum(16, coarse);
  double a32 = accum(32, fine);
  CHECK(a16 > 0.0);
  CHECK(a32 > 0.0);
  CHECK(a16 / a32 >= 0.5);
  CHECK(a16 / a32 <= 2.0);
}

TEST_CASE("stepping is bitwise deterministic and assembly-order invariant") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 8, 1.0, 7);

  auto final_velocity = [&](bool parallel_assembly) {
    SchemeOptions opt;
    opt.parallel_assembly = parallel_assembly;
    StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 8), opt);
    TrajectoryInputs in{Formulation::velocity, p->u0, &path};
    return run_trajectory(ctx, p->proj, in).final_velocity;
  };

  Vec a = final_velocity(false);
  Vec b = final_velocity(false);
  Vec c = final_velocity(true);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == c.size());
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  CHECK(std::memcmp(a.data(), c.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("krylov and refactorising direct solves agree") {
  auto p = make_problem(4);
  BrownianPath path = sample_path(p->noise, 8, 1.0, 9);

  auto run_with = [&](SchemeOptions::Solver s) {
    SchemeOptions opt;
    opt.solver = s;
    StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 8), opt);
    TrajectoryInputs in{Formulation::velocity, p->u0, &path};
    return run_trajectory(ctx, p->proj, in);
  };
  TrajectoryResult direct = run_with(SchemeOptions::Solver::direct);
  TrajectoryResult krylov = run_with(SchemeOptions::Solver::krylov);

  CHECK(krylov.krylov_fallbacks == 0);
  CHECK((direct.final_velocity - krylov.final_velocity).norm() <=
        1e-9 * std::max(1.0, direct.final_velocity.norm()));
  CHECK((direct.final_pressure - krylov.final_pressure).norm() <=
        1e-9 * std::max(1.0, direct.final_pressure.norm()));
}

TEST_CASE("trajectories reject unusable paths") {
  auto p = make_problem(2);
  StepContext ctx(p->fem, *p->solvers, make_time_grid(1.0, 8), SchemeOptions{});

  TrajectoryInputs missing{Formulation::velocity, p->u0, nullptr};
  CHECK_THROWS_AS(run_trajectory(ctx, p->proj, missing), std::invalid_argument);

  BrownianPath bad = sample_path(p->noise, 12, 1.0, 4);
  TrajectoryInputs misaligned{Formulation::velocity, p->u0, &bad};
  CHECK_THROWS_AS(run_trajectory(ctx, p->proj, misaligned), std::invalid_argument);

  BrownianPath fine = sample_path(p->noise, 16, 1.0, 4);
  TrajectoryInputs ok{Formulation::velocity, p->u0, &fine};
  CHECK_NOTHROW(run_trajectory(ctx, p->proj, ok));
}

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sns/fem.hpp"
#include "sns/noise.hpp"

namespace sns {

struct TimeGrid {
  double T = 1.0;
  int M = 1;
  double tau = 1.0;  // T / M, computed once
};
TimeGrid make_time_grid(double T, int M);

enum class Formulation {
  velocity,     // semi-implicit scheme for the velocity iterate U_m
  transformed,  // scheme for Y_m = U_m - Pi_h[Phi W(t_m)]
};

struct SchemeOptions {
  double mu = 1.0;
  bool convection = true;
  ConvectionForm convection_form = ConvectionForm::stabilized;
  enum class Solver {
    automatic,  // constant-matrix solve without convection, else krylov
    direct,     // sparse LU refactorised every step
    krylov,     // GMRES preconditioned by the constant viscous saddle LU
  } solver = Solver::automatic;
  double krylov_tol = 1e-12;
  int krylov_restart = 30;
  int krylov_max_iterations = 400;
  bool parallel_assembly = false;
  bool track_stokes_norm = false;  // ||A_h U_m||^2 per step (extra solve)
  bool track_noise_norm = false;   // ||Phi W(t_m)||_{W^{2,2}} per step
};

struct StepDiagnostics {
  int m = 0;
  double t = 0.0;
  double energy = 0.0;       // ||U_m||_{L2}^2
  double enstrophy = 0.0;    // ||grad U_m||^2
  double div_residual = 0.0;
  // Defect of 1/2(||U_m||^2 - ||U_{m-1}||^2 + ||U_m - U_{m-1}||^2)
  //   + mu tau ||grad U_m||^2 - <Phi dW_m, U_m> = 0,
  // which holds when the convective term cancels exactly.
  double energy_residual = 0.0;
  double transform_gap = 0.0;  // ||U_m - Y_m - Pi_h Phi W(t_m)||, paired runs
  double pressure_grad2 = 0.0;  // ||grad P_m||^2
  double stokes_norm2 = 0.0;    // when tracked
  double noise_w22 = 0.0;       // when tracked
};

struct StepError : std::runtime_error {
  StepError(int step_, const std::string& what_)
      : std::runtime_error("step " + std::to_string(step_) + ": " + what_),
        step(step_) {}
  int step;
};

struct StepOutput {
  Vec velocity;  // new iterate (U_m or Y_m)
  Vec pressure;  // physical pressure, mean zero
  double solver_residual = 0.0;
  bool used_fallback = false;
};

// Shared per-(mesh, time grid) stepping data: the constant viscous saddle
// factorization and the convection sparsity pattern.  Immutable after
// construction; concurrent samples each carry their own Workspace.
class StepContext {
 public:
  StepContext(const FemSystem& fem, const FemSolvers& solvers,
              const TimeGrid& grid, const SchemeOptions& opt);

  const FemSystem& fem() const { return *fem_; }
  const FemSolvers& solvers() const { return *solvers_; }
  const TimeGrid& grid() const { return grid_; }
  const SchemeOptions& options() const { return opt_; }

  struct Workspace {
    SpMat C;                     // convection values on the shared pattern
    std::vector<double> blocks;  // per-element 6x6 buffers
  };
  Workspace make_workspace() const;

  // One implicit Euler step of the velocity scheme:
  //   <U_m - U_{m-1}, phi> + mu tau <grad U_m, grad phi>
  //     + tau b(U_{m-1}; U_m, phi) - tau <P_m, div phi> = <Phi dW_m, phi>.
  StepOutput step_velocity(Workspace& ws, int m, const Vec& u_prev,
                           const Vec& noise_load) const;

  // The same step after the exact substitution U = Y + Pi_h[Phi W]; the
  // linear system is identical under the change of variables, so paired
  // trajectories agree to solver accuracy.
  StepOutput step_transformed(Workspace& ws, int m, const Vec& y_prev,
                              const Vec& z_prev, const Vec& z_cur,
                              const Vec& noise_load_increment) const;

 private:
  StepOutput solve_momentum(Workspace& ws, int m, bool with_convection,
                            const Vec& rhs_u) const;
  void fill_convection(Workspace& ws, const Vec& transport) const;

  const FemSystem* fem_;
  const FemSolvers* solvers_;
  TimeGrid grid_;
  SchemeOptions opt_;
  SpMat Aconst_;  // M + mu tau K
  SpMat Bt_;
  SaddleLU const_lu_;
  std::vector<std::int64_t> slots_;  // element block -> CSC value offsets
};

struct TrajectoryInputs {
  Formulation formulation = Formulation::velocity;
  Vec u0;  // discretely divergence-free initial datum
  const BrownianPath* path = nullptr;  // resolution must be a multiple of M
};

using StepObserver = std::function<void(int m, const Vec& iterate,
                                        const Vec& pressure,
                                        const StepDiagnostics&)>;

struct TrajectoryResult {
  Formulation formulation = Formulation::velocity;
  std::vector<StepDiagnostics> steps;  // entries 0..M
  Vec final_velocity;
  Vec final_pressure;
  double pressure_grad_accum = 0.0;  // sum_m tau ||grad P_m||^2
  int krylov_fallbacks = 0;
};

TrajectoryResult run_trajectory(const StepContext& ctx,
                                const NoiseProjection& proj,
                                const TrajectoryInputs& in,
                                const StepObserver& observer = {});

// Paired run of both formulations on one path; fills transform_gap.
struct PairResult {
  TrajectoryResult velocity;
  TrajectoryResult transformed;
  double max_transform_gap = 0.0;
};
PairResult run_both(const StepContext& ctx, const NoiseProjection& proj,
                    const Vec& u0, const BrownianPath& path);

// Normalised curl of sin^2(pi x) sin^2(pi y), projected onto the discretely
// divergence-free subspace: the default initial datum.
Vec make_initial_datum(const FemSystem& fem, const FemSolvers& solvers);

}  // namespace sns

#include "sns/schemes.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sns/krylov.hpp"

namespace sns {

TimeGrid make_time_grid(double T, int M) {
  if (!(T > 0.0)) throw std::invalid_argument("make_time_grid: T must be > 0");
  if (M < 1) throw std::invalid_argument("make_time_grid: M must be >= 1");
  TimeGrid g;
  g.T = T;
  g.M = M;
  g.tau = T / M;
  return g;
}

// ===========================================================================
// StepContext
// ===========================================================================

StepContext::StepContext(const FemSystem& fem, const FemSolvers& solvers,
                         const TimeGrid& grid, const SchemeOptions& opt)
    : fem_(&fem), solvers_(&solvers), grid_(grid), opt_(opt) {
  Aconst_ = fem.M + (opt.mu * grid.tau) * fem.K;
  Aconst_.makeCompressed();
  Bt_ = SpMat(fem.B.transpose());
  Bt_.makeCompressed();
  const_lu_.factorize(fem, Aconst_);

  if (opt_.convection) {
    // Value offsets of every element block entry in the CSC arrays of
    // Aconst_'s pattern (convection lives on the same adjacency graph).
    const int nt = fem.mesh.num_triangles();
    slots_.assign(static_cast<size_t>(nt) * 72, -1);
    const int* outer = Aconst_.outerIndexPtr();
    const int* inner = Aconst_.innerIndexPtr();
    for (int t = 0; t < nt; ++t) {
      int nodes[6];
      triangle_p2_nodes(fem.mesh, t, nodes);
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          for (int c = 0; c < 2; ++c) {
            if (fem.vel_rank[nodes[a]] < 0 || fem.vel_rank[nodes[b]] < 0)
              continue;
            const int row = fem.vdof(nodes[a], c);
            const int col = fem.vdof(nodes[b], c);
            const int* begin = inner + outer[col];
            const int* end = inner + outer[col + 1];
            const int* pos = std::lower_bound(begin, end, row);
            if (pos == end || *pos != row)
              throw std::runtime_error("StepContext: pattern mismatch");
            slots_[(static_cast<size_t>(t) * 36 + 6 * a + b) * 2 + c] =
                outer[col] + (pos - begin);
          }
        }
      }
    }
  }
}

StepContext::Workspace StepContext::make_workspace() const {
  Workspace ws;
  if (opt_.convection) {
    ws.C = Aconst_;
    std::fill(ws.C.valuePtr(), ws.C.valuePtr() + ws.C.nonZeros(), 0.0);
    ws.blocks.assign(static_cast<size_t>(fem_->mesh.num_triangles()) * 36,
                     0.0);
  }
  return ws;
}

void StepContext::fill_convection(Workspace& ws, const Vec& transport) const {
  const int nt = fem_->mesh.num_triangles();
  const ConvectionForm form = opt_.convection_form;

  if (opt_.parallel_assembly) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int t = 0; t < nt; ++t)
      convection_element_block(*fem_, transport, t, form,
                               &ws.blocks[static_cast<size_t>(t) * 36]);
  } else {
    for (int t = 0; t < nt; ++t)
      convection_element_block(*fem_, transport, t, form,
                               &ws.blocks[static_cast<size_t>(t) * 36]);
  }

  double* val = ws.C.valuePtr();
  std::fill(val, val + ws.C.nonZeros(), 0.0);
  // Serial scatter in fixed element order keeps the result independent of
  // the thread count.
  for (int t = 0; t < nt; ++t) {
    const double* blk = &ws.blocks[static_cast<size_t>(t) * 36];
    const std::int64_t* slot = &slots_[static_cast<size_t>(t) * 72];
    for (int ab = 0; ab < 36; ++ab) {
      const double v = blk[ab];
      if (slot[2 * ab] >= 0) val[slot[2 * ab]] += v;
      if (slot[2 * ab + 1] >= 0) val[slot[2 * ab + 1]] += v;
    }
  }
}

StepOutput StepContext::solve_momentum(Workspace& ws, int m,
                                       bool with_convection,
                                       const Vec& rhs_u) const {
  const int nu = fem_->nu;
  const int np = fem_->np;
  const int n = nu + np + 1;
  const double tau = grid_.tau;

  StepOutput out;
  SaddleSolution sol;

  auto solver = opt_.solver;
  if (solver == SchemeOptions::Solver::automatic)
    solver = with_convection ? SchemeOptions::Solver::krylov
                             : SchemeOptions::Solver::direct;

  if (!with_convection) {
    // Constant matrix: the prefactorised viscous saddle is the exact solve.
    sol = const_lu_.solve(rhs_u);
  } else if (solver == SchemeOptions::Solver::direct) {
    SpMat Avel = Aconst_;
    const double* cv = ws.C.valuePtr();
    double* av = Avel.valuePtr();
    for (std::int64_t i = 0; i < Avel.nonZeros(); ++i) av[i] += tau * cv[i];
    SaddleLU lu;
    try {
      lu.factorize(*fem_, Avel);
    } catch (const std::runtime_error& e) {
      throw StepError(m, e.what());
    }
    sol = lu.solve(rhs_u);
  } else {
    Vec b = Vec::Zero(n);
    b.head(nu) = rhs_u;
    auto apply_A = [&](const Vec& x) {
      Vec r(n);
      const auto u = x.head(nu);
      const auto p = x.segment(nu, np);
      const double lam = x[n - 1];
      r.head(nu) = Aconst_ * u + tau * (ws.C * u) + Bt_ * p;
      r.segment(nu, np) = fem_->B * u + lam * fem_->pressure_area;
      r[n - 1] = fem_->pressure_area.dot(p);
      return r;
    };
    auto precond = [&](const Vec& v) { return const_lu_.solve_raw(v); };
    Vec x = Vec::Zero(n);
    const GmresReport rep =
        gmres(apply_A, b, precond, x, opt_.krylov_tol, opt_.krylov_restart,
              opt_.krylov_max_iterations);
    if (rep.converged) {
      out.solver_residual = rep.residual;
      sol.velocity = x.head(nu);
      sol.pressure = x.segment(nu, np);
      sol.multiplier = x[n - 1];
    } else {
      // Deterministic fallback: refactorise this step directly.
      out.used_fallback = true;
      SpMat Avel = Aconst_;
      const double* cv = ws.C.valuePtr();
      double* av = Avel.valuePtr();
      for (std::int64_t i = 0; i < Avel.nonZeros(); ++i) av[i] += tau * cv[i];
      SaddleLU lu;
      try {
        lu.factorize(*fem_, Avel);
      } catch (const std::runtime_error& e) {
        throw StepError(m, e.what());
      }
      sol = lu.solve(rhs_u);
    }
  }

  out.velocity = std::move(sol.velocity);
  // The saddle carries q = -tau * P.
  out.pressure = -sol.pressure / tau;
  return out;
}

StepOutput StepContext::step_velocity(Workspace& ws, int m, const Vec& u_prev,
                                      const Vec& noise_load) const {
  Vec rhs_u = fem_->M * u_prev + noise_load;
  if (opt_.convection) fill_convection(ws, u_prev);
  return solve_momentum(ws, m, opt_.convection, rhs_u);
}

StepOutput StepContext::step_transformed(Workspace& ws, int m,
                                         const Vec& y_prev, const Vec& z_prev,
                                         const Vec& z_cur,
                                         const Vec& noise_load_increment)
    const {
  const double tau = grid_.tau;
  // Substituting U = Y + Z into the velocity step: the noise load survives
  // reduced by the mass term of the projection increment (a discrete
  // pressure gradient), and the viscous/convective action on Z moves to the
  // right-hand side.
  Vec rhs_u = fem_->M * y_prev + noise_load_increment -
              fem_->M * (z_cur - z_prev) - (opt_.mu * tau) * (fem_->K * z_cur);
  if (opt_.convection) {
    const Vec transport = y_prev + z_prev;
    fill_convection(ws, transport);
    rhs_u -= tau * (ws.C * z_cur);
  }
  return solve_momentum(ws, m, opt_.convection, rhs_u);
}

// ===========================================================================
// trajectory drivers
// ===========================================================================

namespace {

struct DiagState {
  double e_prev = 0.0;
  Vec u_prev;
};

StepDiagnostics initial_diagnostics(const StepContext& ctx,
                                    const PhiWEvaluator& ev, const Vec& u0,
                                    DiagState& st) {
  const FemSystem& fem = ctx.fem();
  StepDiagnostics d;
  d.m = 0;
  d.t = 0.0;
  d.energy = u0.dot(fem.M * u0);
  d.enstrophy = u0.dot(fem.K * u0);
  d.div_residual = divergence_residual(fem, u0);
  if (ctx.options().track_stokes_norm) {
    const Vec w = ctx.solvers().stokes_operator(u0);
    d.stokes_norm2 = w.dot(fem.M * w);
  }
  if (ctx.options().track_noise_norm) d.noise_w22 = ev.w22_norm(0);
  st.e_prev = d.energy;
  st.u_prev = u0;
  return d;
}

StepDiagnostics step_diagnostics(const StepContext& ctx,
                                 const PhiWEvaluator& ev, int m,
                                 const Vec& u_new, const Vec& iterate,
                                 const Vec& pressure, const Vec& noise_load,
                                 DiagState& st) {
  const FemSystem& fem = ctx.fem();
  const double tau = ctx.grid().tau;
  StepDiagnostics d;
  d.m = m;
  d.t = tau * m;
  d.energy = u_new.dot(fem.M * u_new);
  d.enstrophy = u_new.dot(fem.K * u_new);
  const Vec du = u_new - st.u_prev;
  const double jump = du.dot(fem.M * du);
  d.energy_residual = 0.5 * (d.energy - st.e_prev + jump) +
                      ctx.options().mu * tau * d.enstrophy -
                      u_new.dot(noise_load);
  d.div_residual = divergence_residual(fem, iterate);
  d.pressure_grad2 = pressure.dot(fem.Kp * pressure);
  if (ctx.options().track_stokes_norm) {
    const Vec w = ctx.solvers().stokes_operator(u_new);
    d.stokes_norm2 = w.dot(fem.M * w);
  }
  if (ctx.options().track_noise_norm) d.noise_w22 = ev.w22_norm(m);
  st.e_prev = d.energy;
  st.u_prev = u_new;
  return d;
}

}  // namespace

TrajectoryResult run_trajectory(const StepContext& ctx,
                                const NoiseProjection& proj,
                                const TrajectoryInputs& in,
                                const StepObserver& observer) {
  const FemSystem& fem = ctx.fem();
  const int M = ctx.grid().M;
  if (in.path == nullptr)
    throw std::invalid_argument("run_trajectory: missing path");
  if (in.path->steps() % M != 0)
    throw std::invalid_argument(
        "run_trajectory: path resolution must be a multiple of the grid");

  BrownianPath coarse_storage;
  const BrownianPath* path = in.path;
  if (path->steps() != M) {
    coarse_storage = coarsen(*path, M);
    path = &coarse_storage;
  }
  const PhiWEvaluator ev(proj, *path);

  TrajectoryResult res;
  res.formulation = in.formulation;
  res.steps.reserve(M + 1);

  const bool transformed = in.formulation == Formulation::transformed;
  auto ws = ctx.make_workspace();
  Vec iterate = in.u0;
  Vec z_prev = ev.field(0);  // zero: W(0) = 0

  DiagState st;
  res.steps.push_back(initial_diagnostics(ctx, ev, in.u0, st));
  if (observer)
    observer(0, iterate, Vec::Zero(fem.np), res.steps.back());

  Vec pressure = Vec::Zero(fem.np);
  for (int m = 1; m <= M; ++m) {
    const Vec noise_load = ev.load_increment(m);
    StepOutput out;
    Vec u_new;
    if (transformed) {
      Vec z_cur = ev.field(m);
      out = ctx.step_transformed(ws, m, iterate, z_prev, z_cur, noise_load);
      u_new = out.velocity + z_cur;
      z_prev = std::move(z_cur);
    } else {
      out = ctx.step_velocity(ws, m, iterate, noise_load);
      u_new = out.velocity;
    }
    if (out.used_fallback) ++res.krylov_fallbacks;
    iterate = std::move(out.velocity);
    pressure = std::move(out.pressure);

    res.steps.push_back(step_diagnostics(ctx, ev, m, u_new, iterate, pressure,
                                         noise_load, st));
    res.pressure_grad_accum += ctx.grid().tau * res.steps.back().pressure_grad2;
    if (observer) observer(m, iterate, pressure, res.steps.back());
  }

  res.final_velocity = iterate;
  res.final_pressure = pressure;
  return res;
}

PairResult run_both(const StepContext& ctx, const NoiseProjection& proj,
                    const Vec& u0, const BrownianPath& path) {
  const FemSystem& fem = ctx.fem();
  const int M = ctx.grid().M;
  if (path.steps() % M != 0)
    throw std::invalid_argument(
        "run_both: path resolution must be a multiple of the grid");
  BrownianPath coarse_storage;
  const BrownianPath* p = &path;
  if (p->steps() != M) {
    coarse_storage = coarsen(path, M);
    p = &coarse_storage;
  }
  const PhiWEvaluator ev(proj, *p);

  PairResult pr;
  pr.velocity.formulation = Formulation::velocity;
  pr.transformed.formulation = Formulation::transformed;

  auto ws_u = ctx.make_workspace();
  auto ws_y = ctx.make_workspace();
  Vec U = u0, Y = u0;
  Vec z_prev = ev.field(0);

  DiagState st_u, st_y;
  pr.velocity.steps.push_back(initial_diagnostics(ctx, ev, u0, st_u));
  pr.transformed.steps.push_back(initial_diagnostics(ctx, ev, u0, st_y));

  Vec Pu = Vec::Zero(fem.np), Py = Vec::Zero(fem.np);
  for (int m = 1; m <= M; ++m) {
    const Vec noise_load = ev.load_increment(m);
    Vec z_cur = ev.field(m);

    StepOutput ou = ctx.step_velocity(ws_u, m, U, noise_load);
    StepOutput oy =
        ctx.step_transformed(ws_y, m, Y, z_prev, z_cur, noise_load);
    U = std::move(ou.velocity);
    Y = std::move(oy.velocity);
    Pu = std::move(ou.pressure);
    Py = std::move(oy.pressure);
    if (ou.used_fallback) ++pr.velocity.krylov_fallbacks;
    if (oy.used_fallback) ++pr.transformed.krylov_fallbacks;

    const double gap = velocity_l2(fem, U - Y - z_cur);
    pr.max_transform_gap = std::max(pr.max_transform_gap, gap);

    const Vec u_rec = Y + z_cur;
    pr.velocity.steps.push_back(
        step_diagnostics(ctx, ev, m, U, U, Pu, noise_load, st_u));
    pr.transformed.steps.push_back(
        step_diagnostics(ctx, ev, m, u_rec, Y, Py, noise_load, st_y));
    pr.velocity.steps.back().transform_gap = gap;
    pr.transformed.steps.back().transform_gap = gap;
    pr.velocity.pressure_grad_accum +=
        ctx.grid().tau * pr.velocity.steps.back().pressure_grad2;
    pr.transformed.pressure_grad_accum +=
        ctx.grid().tau * pr.transformed.steps.back().pressure_grad2;

    z_prev = std::move(z_cur);
  }
  pr.velocity.final_velocity = U;
  pr.velocity.final_pressure = Pu;
  pr.transformed.final_velocity = Y;
  pr.transformed.final_pressure = Py;
  return pr;
}

Vec make_initial_datum(const FemSystem& fem, const FemSolvers& solvers) {
  constexpr double kPi = 3.14159265358979323846;
  const double c = 4.0 / (std::sqrt(3.0) * kPi * std::sqrt(2.0));
  return solvers.project_div_free_fn([c](double x, double y, double out[2]) {
    const double sx = std::sin(kPi * x);
    const double sy = std::sin(kPi * y);
    out[0] = c * kPi * sx * sx * std::sin(2.0 * kPi * y);
    out[1] = -c * kPi * std::sin(2.0 * kPi * x) * sy * sy;
  });
}

}  // namespace sns

#include "sns/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sns {

// ===========================================================================
// reference element
// ===========================================================================

void p2_shape(double l0, double l1, double l2, double N[6]) {
  N[0] = l0 * (2.0 * l0 - 1.0);
  N[1] = l1 * (2.0 * l1 - 1.0);
  N[2] = l2 * (2.0 * l2 - 1.0);
  N[3] = 4.0 * l0 * l1;
  N[4] = 4.0 * l1 * l2;
  N[5] = 4.0 * l2 * l0;
}

void p2_shape_dl(double l0, double l1, double l2, double dNdl[6][3]) {
  for (int b = 0; b < 6; ++b)
    for (int i = 0; i < 3; ++i) dNdl[b][i] = 0.0;
  dNdl[0][0] = 4.0 * l0 - 1.0;
  dNdl[1][1] = 4.0 * l1 - 1.0;
  dNdl[2][2] = 4.0 * l2 - 1.0;
  dNdl[3][0] = 4.0 * l1;
  dNdl[3][1] = 4.0 * l0;
  dNdl[4][1] = 4.0 * l2;
  dNdl[4][2] = 4.0 * l1;
  dNdl[5][2] = 4.0 * l0;
  dNdl[5][0] = 4.0 * l2;
}

TriGeom triangle_geometry(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& p0 = mesh.vertices[tri[0]];
  const Vec2& p1 = mesh.vertices[tri[1]];
  const Vec2& p2 = mesh.vertices[tri[2]];
  TriGeom g;
  const double det2 =
      (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  g.area = 0.5 * det2;
  g.grad_l[0][0] = (p1.y - p2.y) / det2;
  g.grad_l[0][1] = (p2.x - p1.x) / det2;
  g.grad_l[1][0] = (p2.y - p0.y) / det2;
  g.grad_l[1][1] = (p0.x - p2.x) / det2;
  g.grad_l[2][0] = (p0.y - p1.y) / det2;
  g.grad_l[2][1] = (p1.x - p0.x) / det2;
  return g;
}

void triangle_p2_nodes(const Mesh& mesh, int t, int nodes[6]) {
  const auto& tri = mesh.triangles[t];
  const auto& te = mesh.triangle_edges[t];
  const int nv = mesh.num_vertices();
  nodes[0] = tri[0];
  nodes[1] = tri[1];
  nodes[2] = tri[2];
  nodes[3] = nv + te[0];
  nodes[4] = nv + te[1];
  nodes[5] = nv + te[2];
}

namespace {

void tri_p2_nodes(const Mesh& mesh, int t, int nodes[6]) {
  triangle_p2_nodes(mesh, t, nodes);
}

void p2_grad(const TriGeom& g, double l0, double l1, double l2,
             double gradN[6][2]) {
  double dNdl[6][3];
  p2_shape_dl(l0, l1, l2, dNdl);
  for (int b = 0; b < 6; ++b) {
    gradN[b][0] = 0.0;
    gradN[b][1] = 0.0;
    for (int i = 0; i < 3; ++i) {
      gradN[b][0] += dNdl[b][i] * g.grad_l[i][0];
      gradN[b][1] += dNdl[b][i] * g.grad_l[i][1];
    }
  }
}

// Pressure basis at a quadrature point: P1 uses the barycentric coordinates,
// P2 reuses the velocity shape set.
struct PressureBasis {
  int count = 0;
  double q[6] = {};
  double gq[6][2] = {};
  int dof[6] = {};
};

PressureBasis pressure_basis(const FemSystem& fem, const Mesh& mesh, int t,
                             const TriGeom& g, double l0, double l1,
                             double l2) {
  PressureBasis pb;
  int nodes[6];
  tri_p2_nodes(mesh, t, nodes);
  if (fem.pressure_degree == 1) {
    pb.count = 3;
    const double l[3] = {l0, l1, l2};
    for (int k = 0; k < 3; ++k) {
      pb.q[k] = l[k];
      pb.gq[k][0] = g.grad_l[k][0];
      pb.gq[k][1] = g.grad_l[k][1];
      pb.dof[k] = mesh.triangles[t][k];
    }
  } else {
    pb.count = 6;
    p2_shape(l0, l1, l2, pb.q);
    p2_grad(g, l0, l1, l2, pb.gq);
    for (int k = 0; k < 6; ++k) pb.dof[k] = nodes[k];
  }
  return pb;
}

}  // namespace

// ===========================================================================
// assembly
// ===========================================================================

FemSystem assemble(const Mesh& mesh, int velocity_degree,
                   int pressure_degree) {
  if (velocity_degree != 2 || (pressure_degree != 1 && pressure_degree != 2))
    throw std::invalid_argument("assemble: unsupported degree pair");

  FemSystem fem;
  fem.mesh = mesh;
  fem.velocity_degree = velocity_degree;
  fem.pressure_degree = pressure_degree;

  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();
  const int nn = nv + ne;
  fem.node_xy.resize(nn);
  fem.node_on_boundary.resize(nn);
  for (int v = 0; v < nv; ++v) {
    fem.node_xy[v] = mesh.vertices[v];
    fem.node_on_boundary[v] = mesh.vertex_on_boundary[v];
  }
  for (int e = 0; e < ne; ++e) {
    const Vec2& a = mesh.vertices[mesh.edges[e].a];
    const Vec2& b = mesh.vertices[mesh.edges[e].b];
    fem.node_xy[nv + e] = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    fem.node_on_boundary[nv + e] = mesh.edge_on_boundary[e];
  }

  fem.vel_rank.assign(nn, -1);
  for (int g = 0; g < nn; ++g)
    if (!fem.node_on_boundary[g]) fem.vel_rank[g] = fem.n_interior_nodes++;
  fem.nu = 2 * fem.n_interior_nodes;
  fem.np = (pressure_degree == 1) ? nv : nn;

  const TriQuadRule& rule = quad_degree6();
  using T = Eigen::Triplet<double>;
  std::vector<T> tm, tk, tb, tmp, tkp;
  fem.pressure_area = Vec::Zero(fem.np);

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriGeom g = triangle_geometry(mesh, t);
    int nodes[6];
    tri_p2_nodes(mesh, t, nodes);

    double mass[6][6] = {};
    double stiff[6][6] = {};
    double bloc[6][6][2] = {};  // [pressure][velocity][component]
    double mp[6][6] = {};
    double kp[6][6] = {};
    double parea[6] = {};
    int pcount = 0;
    int pdof[6] = {};

    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.w[q] * g.area;
      double N[6], gradN[6][2];
      p2_shape(rule.l0[q], rule.l1[q], rule.l2[q], N);
      p2_grad(g, rule.l0[q], rule.l1[q], rule.l2[q], gradN);
      const PressureBasis pb =
          pressure_basis(fem, mesh, t, g, rule.l0[q], rule.l1[q], rule.l2[q]);
      pcount = pb.count;
      for (int k = 0; k < pb.count; ++k) pdof[k] = pb.dof[k];

      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          mass[a][b] += w * N[a] * N[b];
          stiff[a][b] +=
              w * (gradN[a][0] * gradN[b][0] + gradN[a][1] * gradN[b][1]);
        }
      }
      for (int k = 0; k < pb.count; ++k) {
        parea[k] += w * pb.q[k];
        for (int b = 0; b < 6; ++b) {
          bloc[k][b][0] += w * pb.q[k] * gradN[b][0];
          bloc[k][b][1] += w * pb.q[k] * gradN[b][1];
        }
        for (int l = 0; l < pb.count; ++l) {
          mp[k][l] += w * pb.q[k] * pb.q[l];
          kp[k][l] +=
              w * (pb.gq[k][0] * pb.gq[l][0] + pb.gq[k][1] * pb.gq[l][1]);
        }
      }
    }

    for (int a = 0; a < 6; ++a) {
      if (fem.vel_rank[nodes[a]] < 0) continue;
      for (int b = 0; b < 6; ++b) {
        if (fem.vel_rank[nodes[b]] < 0) continue;
        for (int c = 0; c < 2; ++c) {
          tm.emplace_back(fem.vdof(nodes[a], c), fem.vdof(nodes[b], c),
                          mass[a][b]);
          tk.emplace_back(fem.vdof(nodes[a], c), fem.vdof(nodes[b], c),
                          stiff[a][b]);
        }
      }
    }
    for (int k = 0; k < pcount; ++k) {
      fem.pressure_area[pdof[k]] += parea[k];
      for (int b = 0; b < 6; ++b) {
        if (fem.vel_rank[nodes[b]] < 0) continue;
        for (int c = 0; c < 2; ++c)
          tb.emplace_back(pdof[k], fem.vdof(nodes[b], c), bloc[k][b][c]);
      }
      for (int l = 0; l < pcount; ++l) {
        tmp.emplace_back(pdof[k], pdof[l], mp[k][l]);
        tkp.emplace_back(pdof[k], pdof[l], kp[k][l]);
      }
    }
  }

  fem.M.resize(fem.nu, fem.nu);
  fem.K.resize(fem.nu, fem.nu);
  fem.B.resize(fem.np, fem.nu);
  fem.Mp.resize(fem.np, fem.np);
  fem.Kp.resize(fem.np, fem.np);
  fem.M.setFromTriplets(tm.begin(), tm.end());
  fem.K.setFromTriplets(tk.begin(), tk.end());
  fem.B.setFromTriplets(tb.begin(), tb.end());
  fem.Mp.setFromTriplets(tmp.begin(), tmp.end());
  fem.Kp.setFromTriplets(tkp.begin(), tkp.end());
  fem.M.makeCompressed();
  fem.K.makeCompressed();
  fem.B.makeCompressed();
  fem.Mp.makeCompressed();
  fem.Kp.makeCompressed();
  return fem;
}

// ===========================================================================
// loads, interpolation, norms
// ===========================================================================

Vec assemble_velocity_load(const FemSystem& fem, const VectorFn& f,
                           const TriQuadRule& rule) {
  const Mesh& mesh = fem.mesh;
  Vec load = Vec::Zero(fem.nu);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriGeom g = triangle_geometry(mesh, t);
    int nodes[6];
    tri_p2_nodes(mesh, t, nodes);
    const auto& tri = mesh.triangles[t];
    const Vec2& p0 = mesh.vertices[tri[0]];
    const Vec2& p1 = mesh.vertices[tri[1]];
    const Vec2& p2 = mesh.vertices[tri[2]];
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.w[q] * g.area;
      const double x =
          rule.l0[q] * p0.x + rule.l1[q] * p1.x + rule.l2[q] * p2.x;
      const double y =
          rule.l0[q] * p0.y + rule.l1[q] * p1.y + rule.l2[q] * p2.y;
      double fv[2];
      f(x, y, fv);
      double N[6];
      p2_shape(rule.l0[q], rule.l1[q], rule.l2[q], N);
      for (int a = 0; a < 6; ++a) {
        if (fem.vel_rank[nodes[a]] < 0) continue;
        load[fem.vdof(nodes[a], 0)] += w * N[a] * fv[0];
        load[fem.vdof(nodes[a], 1)] += w * N[a] * fv[1];
      }
    }
  }
  return load;
}

Vec assemble_pressure_load(const FemSystem& fem, const ScalarFn& g,
                           const TriQuadRule& rule) {
  const Mesh& mesh = fem.mesh;
  Vec load = Vec::Zero(fem.np);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriGeom geom = triangle_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    const Vec2& p0 = mesh.vertices[tri[0]];
    const Vec2& p1 = mesh.vertices[tri[1]];
    const Vec2& p2 = mesh.vertices[tri[2]];
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.w[q] * geom.area;
      const double x =
          rule.l0[q] * p0.x + rule.l1[q] * p1.x + rule.l2[q] * p2.x;
      const double y =
          rule.l0[q] * p0.y + rule.l1[q] * p1.y + rule.l2[q] * p2.y;
      const double gv = g(x, y);
      const PressureBasis pb = pressure_basis(fem, mesh, t, geom, rule.l0[q],
                                              rule.l1[q], rule.l2[q]);
      for (int k = 0; k < pb.count; ++k) load[pb.dof[k]] += w * pb.q[k] * gv;
    }
  }
  return load;
}

Vec interpolate_velocity(const FemSystem& fem, const VectorFn& f) {
  Vec u = Vec::Zero(fem.nu);
  for (int g = 0; g < fem.num_nodes(); ++g) {
    if (fem.vel_rank[g] < 0) continue;
    double fv[2];
    f(fem.node_xy[g].x, fem.node_xy[g].y, fv);
    u[fem.vdof(g, 0)] = fv[0];
    u[fem.vdof(g, 1)] = fv[1];
  }
  return u;
}

Vec interpolate_pressure(const FemSystem& fem, const ScalarFn& g) {
  Vec p = Vec::Zero(fem.np);
  const int limit = fem.np;
  for (int k = 0; k < limit; ++k)
    p[k] = g(fem.node_xy[k].x, fem.node_xy[k].y);
  return p;
}

double velocity_l2(const FemSystem& fem, const Vec& u) {
  return std::sqrt(std::max(0.0, u.dot(fem.M * u)));
}

double velocity_h1semi(const FemSystem& fem, const Vec& u) {
  return std::sqrt(std::max(0.0, u.dot(fem.K * u)));
}

double pressure_l2(const FemSystem& fem, const Vec& p) {
  return std::sqrt(std::max(0.0, p.dot(fem.Mp * p)));
}

double pressure_h1semi(const FemSystem& fem, const Vec& p) {
  return std::sqrt(std::max(0.0, p.dot(fem.Kp * p)));
}

double divergence_residual(const FemSystem& fem, const Vec& u) {
  const double unorm = velocity_l2(fem, u);
  if (unorm == 0.0) return 0.0;
  const Vec r = fem.B * u;
  double worst = 0.0;
  for (int k = 0; k < fem.np; ++k) {
    const double qnorm = std::sqrt(fem.Mp.coeff(k, k));
    worst = std::max(worst, std::abs(r[k]) / (unorm * qnorm));
  }
  return worst;
}

// ===========================================================================
// convection
// ===========================================================================

void convection_element_block(const FemSystem& fem, const Vec& w, int t,
                              ConvectionForm form, double out[36]) {
  double cloc[6][6];
  const Mesh& mesh = fem.mesh;
  const TriGeom g = triangle_geometry(mesh, t);
  int nodes[6];
  tri_p2_nodes(mesh, t, nodes);
  double wx[6], wy[6];
  for (int b = 0; b < 6; ++b) {
    if (fem.vel_rank[nodes[b]] >= 0) {
      wx[b] = w[fem.vdof(nodes[b], 0)];
      wy[b] = w[fem.vdof(nodes[b], 1)];
    } else {
      wx[b] = 0.0;
      wy[b] = 0.0;
    }
  }
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) cloc[a][b] = 0.0;

  const TriQuadRule& rule = quad_degree6();
  for (int q = 0; q < rule.size(); ++q) {
    const double wq = rule.w[q] * g.area;
    double N[6], gradN[6][2];
    p2_shape(rule.l0[q], rule.l1[q], rule.l2[q], N);
    p2_grad(g, rule.l0[q], rule.l1[q], rule.l2[q], gradN);
    double wvx = 0.0, wvy = 0.0, divw = 0.0;
    for (int b = 0; b < 6; ++b) {
      wvx += N[b] * wx[b];
      wvy += N[b] * wy[b];
      divw += gradN[b][0] * wx[b] + gradN[b][1] * wy[b];
    }
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        double v = N[a] * (wvx * gradN[b][0] + wvy * gradN[b][1]);
        if (form == ConvectionForm::stabilized)
          v += 0.5 * divw * N[a] * N[b];
        cloc[a][b] += wq * v;
      }
    }
  }
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) out[6 * a + b] = cloc[a][b];
}

SpMat assemble_convection(const FemSystem& fem, const Vec& w,
                          ConvectionForm form, bool parallel) {
  const int nt = fem.mesh.num_triangles();
  // 72 fixed slots per element (6x6 block, two components); rows/cols of
  // eliminated dofs degenerate to a zero contribution at (0,0), so the slot
  // layout, and with it the accumulation order, never depends on the thread
  // count.
  std::vector<Eigen::Triplet<double>> trips(static_cast<size_t>(nt) * 72,
                                            Eigen::Triplet<double>(0, 0, 0.0));

  auto work = [&](int t) {
    double cloc[36];
    convection_element_block(fem, w, t, form, cloc);
    int nodes[6];
    tri_p2_nodes(fem.mesh, t, nodes);
    size_t slot = static_cast<size_t>(t) * 72;
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        for (int c = 0; c < 2; ++c, ++slot) {
          if (fem.vel_rank[nodes[a]] >= 0 && fem.vel_rank[nodes[b]] >= 0) {
            trips[slot] = Eigen::Triplet<double>(
                fem.vdof(nodes[a], c), fem.vdof(nodes[b], c), cloc[6 * a + b]);
          }
        }
      }
    }
  };

  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int t = 0; t < nt; ++t) work(t);
  } else {
    for (int t = 0; t < nt; ++t) work(t);
  }

  SpMat C(fem.nu, fem.nu);
  C.setFromTriplets(trips.begin(), trips.end());
  C.makeCompressed();
  return C;
}

double convection_defect(const FemSystem& fem, const Vec& w, const Vec& u) {
  const Mesh& mesh = fem.mesh;
  const TriQuadRule& rule = quad_degree6();
  double total = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriGeom g = triangle_geometry(mesh, t);
    int nodes[6];
    tri_p2_nodes(mesh, t, nodes);
    double wx[6], wy[6], ux[6], uy[6];
    for (int b = 0; b < 6; ++b) {
      const bool in = fem.vel_rank[nodes[b]] >= 0;
      wx[b] = in ? w[fem.vdof(nodes[b], 0)] : 0.0;
      wy[b] = in ? w[fem.vdof(nodes[b], 1)] : 0.0;
      ux[b] = in ? u[fem.vdof(nodes[b], 0)] : 0.0;
      uy[b] = in ? u[fem.vdof(nodes[b], 1)] : 0.0;
    }
    for (int q = 0; q < rule.size(); ++q) {
      const double wq = rule.w[q] * g.area;
      double N[6], gradN[6][2];
      p2_shape(rule.l0[q], rule.l1[q], rule.l2[q], N);
      p2_grad(g, rule.l0[q], rule.l1[q], rule.l2[q], gradN);
      double divw = 0.0, uvx = 0.0, uvy = 0.0;
      for (int b = 0; b < 6; ++b) {
        divw += gradN[b][0] * wx[b] + gradN[b][1] * wy[b];
        uvx += N[b] * ux[b];
        uvy += N[b] * uy[b];
      }
      total += wq * 0.5 * divw * (uvx * uvx + uvy * uvy);
    }
  }
  return total;
}

// ===========================================================================
// saddle systems
// ===========================================================================

SpMat build_saddle(const FemSystem& fem, const SpMat& velocity_block) {
  const int nu = fem.nu;
  const int np = fem.np;
  const int n = nu + np + 1;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(velocity_block.nonZeros()) +
                2 * static_cast<size_t>(fem.B.nonZeros()) + 2 * np);
  for (int k = 0; k < velocity_block.outerSize(); ++k)
    for (SpMat::InnerIterator it(velocity_block, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()),
                         static_cast<int>(it.col()), it.value());
  for (int k = 0; k < fem.B.outerSize(); ++k) {
    for (SpMat::InnerIterator it(fem.B, k); it; ++it) {
      const int prow = nu + static_cast<int>(it.row());
      const int vcol = static_cast<int>(it.col());
      trips.emplace_back(prow, vcol, it.value());
      trips.emplace_back(vcol, prow, it.value());
    }
  }
  for (int k = 0; k < np; ++k) {
    trips.emplace_back(nu + k, nu + np, fem.pressure_area[k]);
    trips.emplace_back(nu + np, nu + k, fem.pressure_area[k]);
  }
  SpMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

void SaddleLU::factorize(const FemSystem& fem, const SpMat& velocity_block) {
  nu_ = fem.nu;
  np_ = fem.np;
  n_ = nu_ + np_ + 1;
  SpMat A = build_saddle(fem, velocity_block);
  lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
  lu_->compute(A);
  if (lu_->info() != Eigen::Success)
    throw std::runtime_error("SaddleLU: factorization failed (n=" +
                             std::to_string(n_) + ")");
}

Vec SaddleLU::solve_raw(const Vec& full_rhs) const {
  if (!lu_) throw std::runtime_error("SaddleLU: not factorized");
  Vec x = lu_->solve(full_rhs);
  if (lu_->info() != Eigen::Success)
    throw std::runtime_error("SaddleLU: solve failed");
  return x;
}

SaddleSolution SaddleLU::solve(const Vec& velocity_rhs) const {
  Vec rhs = Vec::Zero(n_);
  rhs.head(nu_) = velocity_rhs;
  const Vec x = solve_raw(rhs);
  SaddleSolution s;
  s.velocity = x.head(nu_);
  s.pressure = x.segment(nu_, np_);
  s.multiplier = x[n_ - 1];
  return s;
}

// ===========================================================================
// FemSolvers
// ===========================================================================

FemSolvers::FemSolvers(const FemSystem& fem) : fem_(&fem) {
  mass_saddle_.factorize(fem, fem.M);
  mp_llt_.compute(fem.Mp);
  if (mp_llt_.info() != Eigen::Success)
    throw std::runtime_error("FemSolvers: pressure mass not SPD");
}

Vec FemSolvers::project_div_free_load(const Vec& load) const {
  return mass_saddle_.solve(load).velocity;
}

Vec FemSolvers::project_div_free(const Vec& u) const {
  return project_div_free_load(fem_->M * u);
}

Vec FemSolvers::project_div_free_fn(const VectorFn& f) const {
  return project_div_free_load(assemble_velocity_load(*fem_, f));
}

Vec FemSolvers::stokes_operator(const Vec& u) const {
  return mass_saddle_.solve(fem_->K * u).velocity;
}

Vec FemSolvers::project_pressure_load(const Vec& load) const {
  Vec p = mp_llt_.solve(load);
  const double area = fem_->pressure_area.sum();
  const double mean = fem_->pressure_area.dot(p) / area;
  p.array() -= mean;
  return p;
}

Vec FemSolvers::project_pressure_fn(const ScalarFn& g) const {
  return project_pressure_load(assemble_pressure_load(*fem_, g));
}

// ===========================================================================
// inf-sup constant
// ===========================================================================

double infsup_constant(const FemSystem& fem) {
  if (fem.np > 4000)
    throw std::invalid_argument("infsup_constant: pressure space too large");
  Eigen::SimplicialLLT<SpMat> kllt;
  kllt.compute(fem.K);
  if (kllt.info() != Eigen::Success)
    throw std::runtime_error("infsup_constant: stiffness not SPD");

  Eigen::MatrixXd Bt = Eigen::MatrixXd(fem.B.transpose());
  Eigen::MatrixXd X = kllt.solve(Bt);
  Eigen::MatrixXd S = fem.B * X;
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::MatrixXd Mpd = Eigen::MatrixXd(fem.Mp);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(S, Mpd);
  if (ges.info() != Eigen::Success)
    throw std::runtime_error("infsup_constant: eigensolver failed");
  // Smallest eigenvalue belongs to the constant pressure mode (B^T 1 = 0);
  // the inf-sup constant lives on the mean-zero complement.
  const Eigen::VectorXd ev = ges.eigenvalues();
  return std::sqrt(std::max(0.0, ev[1]));
}

// ===========================================================================
// evaluation and nested-mesh transfer
// ===========================================================================

int locate_triangle(const Mesh& mesh, double x, double y) {
  const int n = mesh.n;
  const double cx = std::min(std::max(x, 0.0), 1.0) * n;
  const double cy = std::min(std::max(y, 0.0), 1.0) * n;
  int i = std::min(static_cast<int>(cx), n - 1);
  int j = std::min(static_cast<int>(cy), n - 1);
  const double xi = cx - i;
  const double eta = cy - j;
  // Lower triangle covers eta <= xi within the cell.
  return 2 * (j * n + i) + (eta <= xi ? 0 : 1);
}

namespace {

void barycentric(const Mesh& mesh, int t, double x, double y, double l[3]) {
  const auto& tri = mesh.triangles[t];
  const Vec2& p0 = mesh.vertices[tri[0]];
  const Vec2& p1 = mesh.vertices[tri[1]];
  const Vec2& p2 = mesh.vertices[tri[2]];
  const double det2 =
      (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  l[1] = ((x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (y - p0.y)) / det2;
  l[2] = ((p1.x - p0.x) * (y - p0.y) - (x - p0.x) * (p1.y - p0.y)) / det2;
  l[0] = 1.0 - l[1] - l[2];
}

}  // namespace

void eval_velocity(const FemSystem& fem, const Vec& u, double x, double y,
                   double out[2]) {
  const int t = locate_triangle(fem.mesh, x, y);
  double l[3];
  barycentric(fem.mesh, t, x, y, l);
  double N[6];
  p2_shape(l[0], l[1], l[2], N);
  int nodes[6];
  tri_p2_nodes(fem.mesh, t, nodes);
  out[0] = 0.0;
  out[1] = 0.0;
  for (int a = 0; a < 6; ++a) {
    if (fem.vel_rank[nodes[a]] < 0) continue;
    out[0] += N[a] * u[fem.vdof(nodes[a], 0)];
    out[1] += N[a] * u[fem.vdof(nodes[a], 1)];
  }
}

SpMat build_velocity_prolongation(const FemSystem& coarse,
                                  const FemSystem& fine) {
  if (fine.mesh.n % coarse.mesh.n != 0)
    throw std::invalid_argument(
        "build_velocity_prolongation: meshes are not nested");
  std::vector<Eigen::Triplet<double>> trips;
  for (int g = 0; g < fine.num_nodes(); ++g) {
    if (fine.vel_rank[g] < 0) continue;
    const double x = fine.node_xy[g].x;
    const double y = fine.node_xy[g].y;
    const int t = locate_triangle(coarse.mesh, x, y);
    double l[3];
    barycentric(coarse.mesh, t, x, y, l);
    double N[6];
    p2_shape(l[0], l[1], l[2], N);
    int nodes[6];
    tri_p2_nodes(coarse.mesh, t, nodes);
    for (int a = 0; a < 6; ++a) {
      if (coarse.vel_rank[nodes[a]] < 0 || N[a] == 0.0) continue;
      for (int c = 0; c < 2; ++c)
        trips.emplace_back(fine.vdof(g, c), coarse.vdof(nodes[a], c), N[a]);
    }
  }
  SpMat P(fine.nu, coarse.nu);
  P.setFromTriplets(trips.begin(), trips.end());
  P.makeCompressed();
  return P;
}

}  // namespace sns

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <vector>

#include "sns/mesh.hpp"
#include "sns/quadrature.hpp"

namespace sns {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

using VectorFn = std::function<void(double x, double y, double out[2])>;
using ScalarFn = std::function<double(double x, double y)>;

// Scalar P2 shape functions on the reference triangle.  Local node order:
// three vertices, then the midpoints of (0,1), (1,2), (2,0).
void p2_shape(double l0, double l1, double l2, double N[6]);
void p2_shape_dl(double l0, double l1, double l2, double dNdl[6][3]);

struct TriGeom {
  double area = 0.0;
  double grad_l[3][2] = {};  // gradients of the barycentric coordinates
};
TriGeom triangle_geometry(const Mesh& mesh, int t);

// Global P2 node ids of a triangle, in local shape order.
void triangle_p2_nodes(const Mesh& mesh, int t, int nodes[6]);

// Mixed velocity/pressure space on a triangulated unit square.  Velocity is
// vector P2 with homogeneous Dirichlet values eliminated from the dof set;
// pressure is P1 (Taylor-Hood) or P2 (equal-order, kept for the inf-sup
// negative control).  Matrices are assembled with the degree-6 rule, which
// is exact for every integrand appearing here (max total degree 5).
struct FemSystem {
  Mesh mesh;
  int velocity_degree = 2;
  int pressure_degree = 1;

  // P2 nodes: vertices first, then edge midpoints.
  std::vector<Vec2> node_xy;
  std::vector<std::uint8_t> node_on_boundary;
  std::vector<int> vel_rank;  // node -> interior rank, -1 on the boundary
  int n_interior_nodes = 0;

  int nu = 0;  // velocity dofs: 2 * n_interior_nodes, components interleaved
  int np = 0;  // pressure dofs (all nodes of the pressure space)

  SpMat M;   // velocity mass
  SpMat K;   // velocity stiffness
  SpMat B;   // np x nu, B(k,i) = <q_k, div phi_i>
  SpMat Mp;  // pressure mass
  SpMat Kp;  // pressure stiffness (seminorm only; singular by itself)
  Vec pressure_area;  // <q_k, 1>, the mean-value weights

  int num_nodes() const { return static_cast<int>(node_xy.size()); }
  int vdof(int node, int comp) const { return 2 * vel_rank[node] + comp; }
};

// Throws std::invalid_argument unless (velocity, pressure) degrees are
// (2,1) or (2,2).
FemSystem assemble(const Mesh& mesh, int velocity_degree = 2,
                   int pressure_degree = 1);

// ---------------------------------------------------------------------------
// loads, interpolation, norms

Vec assemble_velocity_load(const FemSystem& fem, const VectorFn& f,
                           const TriQuadRule& rule = quad_degree6());
Vec assemble_pressure_load(const FemSystem& fem, const ScalarFn& g,
                           const TriQuadRule& rule = quad_degree6());
Vec interpolate_velocity(const FemSystem& fem, const VectorFn& f);
Vec interpolate_pressure(const FemSystem& fem, const ScalarFn& g);

double velocity_l2(const FemSystem& fem, const Vec& u);
double velocity_h1semi(const FemSystem& fem, const Vec& u);
double pressure_l2(const FemSystem& fem, const Vec& p);
double pressure_h1semi(const FemSystem& fem, const Vec& p);

// max_k |<div u, q_k>| / (||u|| ||q_k||); zero velocity gives zero.
double divergence_residual(const FemSystem& fem, const Vec& u);

// ---------------------------------------------------------------------------
// convection

enum class ConvectionForm {
  stabilized,  // <(grad u) w, v> + 1/2 <(div w) u, v>; skew-symmetric
  tensor,      // plain <(grad u) w, v>; kept to expose the failure mode
};

// N(w) acting on velocity coefficients.  Same sparsity as M and K.
// `parallel` toggles the OpenMP element loop; both paths write per-element
// slots in a fixed layout, so results are bitwise identical.
SpMat assemble_convection(const FemSystem& fem, const Vec& w,
                          ConvectionForm form = ConvectionForm::stabilized,
                          bool parallel = false);

// One element's scalar 6x6 convection block (identical for both velocity
// components); row-major into out[36].
void convection_element_block(const FemSystem& fem, const Vec& w, int t,
                              ConvectionForm form, double out[36]);

// 1/2 <(div w) u, u>; the quantity the stabilisation term cancels.
double convection_defect(const FemSystem& fem, const Vec& w, const Vec& u);

// ---------------------------------------------------------------------------
// saddle systems

// Layout [velocity | pressure | mean multiplier]; the last row and column
// pin the pressure mean to zero, which keeps the matrix nonsingular.
SpMat build_saddle(const FemSystem& fem, const SpMat& velocity_block);

struct SaddleSolution {
  Vec velocity;
  Vec pressure;
  double multiplier = 0.0;
};

class SaddleLU {
 public:
  SaddleLU() = default;
  void factorize(const FemSystem& fem, const SpMat& velocity_block);
  bool ready() const { return lu_ != nullptr; }
  SaddleSolution solve(const Vec& velocity_rhs) const;
  Vec solve_raw(const Vec& full_rhs) const;
  int size() const { return n_; }

 private:
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
  int nu_ = 0, np_ = 0, n_ = 0;
};

// Prefactored constant-matrix solves attached to one FemSystem: the mass
// saddle (projections, discrete Stokes operator) and the pressure mass.
class FemSolvers {
 public:
  explicit FemSolvers(const FemSystem& fem);

  const FemSystem& fem() const { return *fem_; }

  // L2 projection onto the discretely divergence-free subspace.
  Vec project_div_free_load(const Vec& load) const;
  Vec project_div_free(const Vec& u) const;
  Vec project_div_free_fn(const VectorFn& f) const;

  // Discrete Stokes operator A_h: <A_h u, phi> = <grad u, grad phi> on the
  // divergence-free subspace.
  Vec stokes_operator(const Vec& u) const;

  // Mean-zero L2 projection onto the pressure space.
  Vec project_pressure_load(const Vec& load) const;
  Vec project_pressure_fn(const ScalarFn& g) const;

 private:
  const FemSystem* fem_;
  SaddleLU mass_saddle_;
  Eigen::SimplicialLLT<SpMat> mp_llt_;
};

// Discrete inf-sup constant: sqrt of the smallest eigenvalue of
// B K^{-1} B^T q = lambda Mp q on the mean-zero pressure subspace.
double infsup_constant(const FemSystem& fem);

// ---------------------------------------------------------------------------
// evaluation and nested-mesh transfer

// Containing triangle by cell arithmetic; points are clamped to [0,1]^2.
int locate_triangle(const Mesh& mesh, double x, double y);

// P2 field evaluation (boundary dofs are zero by construction).
void eval_velocity(const FemSystem& fem, const Vec& u, double x, double y,
                   double out[2]);

// Interpolation matrix from a coarse P2 space into a nested fine one
// (fine.mesh.n must be a multiple of coarse.mesh.n).  Exact: P2 spaces on
// nested meshes are nested.
SpMat build_velocity_prolongation(const FemSystem& coarse,
                                  const FemSystem& fine);

}  // namespace sns

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sns/fem.hpp"

namespace sns {

// Additive forcing operator Phi: diagonal over the divergence-free modes
//   psi_{jk} = amplitude * curl of sin^2(j pi x) sin^2(k pi y),
// normalised to unit L2 norm, with singular values
//   sigma_{jk} = scale * kappa^{-decay_r},   kappa = sqrt(j^2 + k^2).
// Modes are indexed linearly, j outer and k inner, both starting at 1.
// decay_r > 4 keeps the Hilbert-Schmidt sum finite in W^{3,2}.
struct NoiseModel {
  int j_max = 0;
  double decay_r = 0.0;
  double scale = 0.0;
  int num_modes = 0;
  std::vector<int> mode_j, mode_k;
  Vec sigma;
  Vec amplitude;

  // Exact Gram matrices of the normalised modes (trigonometric expansion,
  // no quadrature): entry (a,b) is the W^{s,2} inner product.
  Eigen::MatrixXd gram_l2, gram_w1, gram_w2, gram_w3;
  // Hilbert-Schmidt sums: sum_m sigma_m^2 * ||psi_m||^2 in each norm.
  double hs_l2 = 0.0, hs_w1 = 0.0, hs_w2 = 0.0, hs_w3 = 0.0;

  int mode_index(int j, int k) const { return (j - 1) * j_max + (k - 1); }
  void eval_mode(int m, double x, double y, double out[2]) const;
  // Analytic divergence, evaluated as the sum of the two partials.
  double eval_mode_div(int m, double x, double y) const;
};

// Throws std::invalid_argument for j_max < 1 and for decay_r <= 4
// ("W^{3,2} summability violated").
NoiseModel build_noise(int j_max, double decay_r, double scale);

// ---------------------------------------------------------------------------
// Brownian paths

// Per-mode i.i.d. increments of variance dt; increments(m, s) is the draw
// for mode m over (s*dt, (s+1)*dt].
struct BrownianPath {
  std::uint64_t seed = 0;
  double T = 0.0;
  double dt = 0.0;
  Eigen::MatrixXd increments;  // num_modes x steps

  int num_modes() const { return static_cast<int>(increments.rows()); }
  int steps() const { return static_cast<int>(increments.cols()); }
};

BrownianPath sample_path(const NoiseModel& noise, int steps, double T,
                         std::uint64_t seed);

// Block sums, summed left to right; coarse_steps must divide path.steps().
BrownianPath coarsen(const BrownianPath& path, int coarse_steps);

// FNV-1a over the increment bytes in storage order.
std::uint64_t path_checksum(const BrownianPath& path);

// ---------------------------------------------------------------------------
// discrete modes

// Per-mesh data for Phi: consistent load vectors <psi_m, phi_i> and the
// div-free projections Pi_h psi_m.  Built once per (mesh, noise) pair and
// shared read-only across samples.
struct NoiseProjection {
  const NoiseModel* noise = nullptr;
  std::vector<Vec> mode_load;
  std::vector<Vec> mode_field;
};

NoiseProjection project_noise_modes(const FemSystem& fem,
                                    const FemSolvers& solvers,
                                    const NoiseModel& noise);

// One path at one time resolution.  field(m) returns the coefficients of
// Pi_h[Phi W(t_m)]; w22_norm(m) the exact W^{2,2} norm of Phi W(t_m).
class PhiWEvaluator {
 public:
  PhiWEvaluator(const NoiseProjection& proj, const BrownianPath& path);

  int steps() const { return steps_; }
  Vec field(int m) const;
  Vec load_increment(int m) const;  // <Phi(W(t_m) - W(t_{m-1})), phi_i>
  double w22_norm(int m) const;

 private:
  const NoiseProjection* proj_;
  Eigen::MatrixXd beta_;  // modes x (steps+1), prefix sums, beta(.,0) = 0
  int steps_ = 0;
};

}  // namespace sns

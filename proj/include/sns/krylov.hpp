#pragma once

#include <functional>

#include "sns/fem.hpp"

namespace sns {

struct GmresReport {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // true residual norm on exit
};

using LinearOp = std::function<Vec(const Vec&)>;

// Right-preconditioned restarted GMRES for apply_A(x) = b; `precond`
// applies an approximate inverse of A.  x carries the initial guess on
// entry.  The returned residual is recomputed from apply_A and x, not the
// Arnoldi estimate.
GmresReport gmres(const LinearOp& apply_A, const Vec& b,
                  const LinearOp& precond, Vec& x, double rtol, int restart,
                  int max_iterations);

}  // namespace sns

#include "sns/krylov.hpp"

#include <cmath>
#include <vector>

namespace sns {

GmresReport gmres(const LinearOp& apply_A, const Vec& b,
                  const LinearOp& precond, Vec& x, double rtol, int restart,
                  int max_iterations) {
  GmresReport rep;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    rep.converged = true;
    return rep;
  }
  const double target = rtol * bnorm;
  const int n = static_cast<int>(b.size());
  if (x.size() != n) x = Vec::Zero(n);

  std::vector<Vec> V(restart + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
  Vec cs(restart), sn(restart), g(restart + 1);

  int total = 0;
  while (total < max_iterations) {
    Vec r = b - apply_A(x);
    double beta = r.norm();
    if (beta <= target) {
      rep.converged = true;
      rep.residual = beta;
      rep.iterations = total;
      return rep;
    }
    V[0] = r / beta;
    g.setZero();
    g[0] = beta;

    int j = 0;
    for (; j < restart && total < max_iterations; ++j, ++total) {
      Vec w = apply_A(precond(V[j]));
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H(i, j) = V[i].dot(w);
        w -= H(i, j) * V[i];
      }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) > 0.0) V[j + 1] = w / H(j + 1, j);

      for (int i = 0; i < j; ++i) {  // apply stored Givens rotations
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      if (denom == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else {
        cs[j] = H(j, j) / denom;
        sn[j] = H(j + 1, j) / denom;
      }
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      if (std::abs(g[j + 1]) <= target) {
        ++j;
        ++total;
        break;
      }
    }

    // back substitution for the j-dimensional least squares problem
    Vec y = Vec::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= H(i, k) * y[k];
      y[i] = s / H(i, i);
    }
    Vec z = Vec::Zero(n);
    for (int i = 0; i < j; ++i) z += y[i] * V[i];
    x += precond(z);

    const double true_res = (b - apply_A(x)).norm();
    rep.residual = true_res;
    rep.iterations = total;
    if (true_res <= target) {
      rep.converged = true;
      return rep;
    }
  }
  return rep;
}

}  // namespace sns

#pragma once

#include <vector>

namespace sns {

// Symmetric Gauss rule on the reference triangle in barycentric coordinates.
// Weights are normalised to sum to 1, so
//   integral over T of f = area(T) * sum_q w_q f(x_q).
struct TriQuadRule {
  int degree = 0;
  std::vector<double> l0, l1, l2, w;

  int size() const { return static_cast<int>(w.size()); }
};

// 12-point rule, exact for polynomials of total degree <= 6.
const TriQuadRule& quad_degree6();

// Independent 16-point rule, exact through degree 8; used for cross-checks.
const TriQuadRule& quad_degree8();

}  // namespace sns

#include "sns/quadrature.hpp"

namespace sns {
namespace {

void push_point(TriQuadRule& r, double a, double b, double c, double w) {
  r.l0.push_back(a);
  r.l1.push_back(b);
  r.l2.push_back(c);
  r.w.push_back(w);
}

// Orbit of a point under all permutations that produce distinct coordinates.
void push_orbit3(TriQuadRule& r, double a, double b, double w) {
  push_point(r, a, b, b, w);
  push_point(r, b, a, b, w);
  push_point(r, b, b, a, w);
}

void push_orbit6(TriQuadRule& r, double a, double b, double c, double w) {
  push_point(r, a, b, c, w);
  push_point(r, a, c, b, w);
  push_point(r, b, a, c, w);
  push_point(r, b, c, a, w);
  push_point(r, c, a, b, w);
  push_point(r, c, b, a, w);
}

TriQuadRule make_degree6() {
  TriQuadRule r;
  r.degree = 6;
  push_orbit3(r, 0.873821971016996, 0.063089014491502, 0.050844906370207);
  push_orbit3(r, 0.501426509658179, 0.249286745170910, 0.116786275726379);
  push_orbit6(r, 0.636502499121399, 0.310352451033785, 0.053145049844816,
              0.082851075618374);
  return r;
}

TriQuadRule make_degree8() {
  TriQuadRule r;
  r.degree = 8;
  const double third = 1.0 / 3.0;
  // Coefficients Newton-refined so every monomial moment through degree 8 is
  // reproduced to within a few ulps (published 15-digit tables are only
  // accurate to about 1e-10 here).
  push_point(r, third, third, third, 0.14431560767778717);
  push_orbit3(r, 0.081414823414553688, 0.45929258829272316, 0.095091634267284625);
  push_orbit3(r, 0.65886138449647959, 0.17056930775176021, 0.10321737053471825);
  push_orbit3(r, 0.89890554336593805, 0.050547228317030975, 0.032458497623198080);
  push_orbit6(r, 0.0083947774099576053, 0.26311282963463811, 0.72849239295540428,
              0.027230314174434994);
  return r;
}

}  // namespace

const TriQuadRule& quad_degree6() {
  static const TriQuadRule r = make_degree6();
  return r;
}

const TriQuadRule& quad_degree8() {
  static const TriQuadRule r = make_degree8();
  return r;
}

}  // namespace sns

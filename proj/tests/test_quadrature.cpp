#include <cmath>

#include "doctest.h"
#include "sns/quadrature.hpp"

using namespace sns;

namespace {

double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// On any triangle, integral of l0^a l1^b l2^c equals
// 2*area * a! b! c! / (a+b+c+2)!, so with weights normalised to sum 1 the
// weighted monomial sum must be 2 a! b! c! / (a+b+c+2)!.
double exact_monomial(int a, int b, int c) {
  return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
}

double rule_monomial(const TriQuadRule& rule, int a, int b, int c) {
  double s = 0;
  for (int q = 0; q < rule.size(); ++q) {
    s += rule.w[q] * std::pow(rule.l0[q], a) * std::pow(rule.l1[q], b) * std::pow(rule.l2[q], c);
  }
  return s;
}

}  // namespace

TEST_CASE("quadrature weights sum to 1 and points lie inside the triangle") {
  for (const TriQuadRule* rule : {&quad_degree6(), &quad_degree8()}) {
    double ws = 0;
    for (int q = 0; q < rule->size(); ++q) {
      ws += rule->w[q];
      CHECK(rule->l0[q] >= 0.0);
      CHECK(rule->l1[q] >= 0.0);
      CHECK(rule->l2[q] >= 0.0);
      CHECK(rule->l0[q] + rule->l1[q] + rule->l2[q] == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(ws == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("degree-6 rule integrates all monomials through degree 6 exactly") {
  const TriQuadRule& rule = quad_degree6();
  CHECK(rule.degree >= 6);
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; a + b <= 6; ++b)
      for (int c = 0; a + b + c <= 6; ++c) {
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(c);
        CHECK(rule_monomial(rule, a, b, c) ==
              doctest::Approx(exact_monomial(a, b, c)).epsilon(1e-13));
      }
}

TEST_CASE("degree-8 rule integrates all monomials through degree 8 exactly") {
  const TriQuadRule& rule = quad_degree8();
  CHECK(rule.degree >= 8);
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; a + b <= 8; ++b)
      for (int c = 0; a + b + c <= 8; ++c) {
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(c);
        CHECK(rule_monomial(rule, a, b, c) ==
              doctest::Approx(exact_monomial(a, b, c)).epsilon(1e-13));
      }
}

TEST_CASE("the two rules agree on a generic degree-6 polynomial") {
  auto poly = [](double l0, double l1, double l2) {
    return 1.0 + 3.1 * l0 - 2.2 * l1 * l2 + 0.7 * l0 * l0 * l1 - 5.0 * l1 * l1 * l2 * l2 +
           1.9 * l0 * l1 * l2 * l2 * l0 + 0.3 * l2 * l2 * l2 * l1 * l1 * l0;
  };
  double s6 = 0, s8 = 0;
  const TriQuadRule& r6 = quad_degree6();
  const TriQuadRule& r8 = quad_degree8();
  for (int q = 0; q < r6.size(); ++q) s6 += r6.w[q] * poly(r6.l0[q], r6.l1[q], r6.l2[q]);
  for (int q = 0; q < r8.size(); ++q) s8 += r8.w[q] * poly(r8.l0[q], r8.l1[q], r8.l2[q]);
  CHECK(s6 == doctest::Approx(s8).epsilon(1e-13));
}

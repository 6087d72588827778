#include "doctest.h"
#include "lodgp/quadrature.hpp"

#include <cmath>

using namespace lodgp;

namespace
{

long double fact(int n)
{
   long double r = 1.0L;
   for (int k = 2; k <= n; ++k) { r *= k; }
   return r;
}

// Integral of x^a y^b z^c over the reference simplex.
double exact_monomial(int dim, int a, int b, int c)
{
   return static_cast<double>(fact(a) * fact(b) * fact(c) / fact(a + b + c + dim));
}

double rule_monomial(const QuadratureRule &r, int a, int b, int c)
{
   long double s = 0.0L;
   for (int q = 0; q < r.size(); ++q)
   {
      const auto &l = r.points[q];
      s += static_cast<long double>(r.weights[q]) * std::pow(static_cast<long double>(l[1]), a) *
           (r.dim >= 2 ? std::pow(static_cast<long double>(l[2]), b) : 1.0L) *
           (r.dim >= 3 ? std::pow(static_cast<long double>(l[3]), c) : 1.0L);
   }
   return static_cast<double>(s);
}

double worst_monomial_error(const QuadratureRule &r)
{
   double worst = 0.0;
   const int D = r.degree_exact;
   for (int a = 0; a <= D; ++a)
   {
      for (int b = 0; b <= (r.dim >= 2 ? D - a : 0); ++b)
      {
         for (int c = 0; c <= (r.dim >= 3 ? D - a - b : 0); ++c)
         {
            const double ex = exact_monomial(r.dim, a, b, c);
            worst = std::max(worst, std::abs(rule_monomial(r, a, b, c) - ex) / ex);
         }
      }
   }
   return worst;
}

} // namespace

TEST_CASE("1d Gauss-Legendre")
{
   const auto r = quadrature_rule(1, 9);
   CHECK(r.size() == 5);
   CHECK(std::abs(rule_monomial(r, 9, 0, 0) - 0.1) < 1e-15);
   for (int d = 0; d <= 20; ++d)
   {
      const auto rd = quadrature_rule(1, d);
      CHECK(rd.degree_exact >= d);
      CHECK(worst_monomial_error(rd) < 1e-13);
   }
}

TEST_CASE("2d rules")
{
   const auto r = quadrature_rule(2, 9);
   CHECK(r.size() == 19);
   CHECK(r.degree_exact == 9);
   CHECK(std::abs(rule_monomial(r, 3, 6, 0) - exact_monomial(2, 3, 6, 0)) < 1e-13 * exact_monomial(2, 3, 6, 0));
   for (int d = 1; d <= 9; ++d)
   {
      const auto rd = quadrature_rule(2, d);
      double sum = 0.0;
      for (double w : rd.weights) { sum += w; }
      CHECK(std::abs(sum - 0.5) < 1e-14);
      CHECK(worst_monomial_error(rd) < 1e-13);
   }
   for (double w : r.weights) { CHECK(w > 0.0); }
   CHECK_THROWS_AS(quadrature_rule(2, 10), UnsupportedRuleError);
}

TEST_CASE("3d rules")
{
   const auto r = quadrature_rule(3, 8);
   CHECK(r.size() == 45);
   bool found = false;
   for (double w : r.weights) { found = found || w == -0.393270066412926145e-1; }
   CHECK(found);
   for (int d = 1; d <= 8; ++d)
   {
      const auto rd = quadrature_rule(3, d);
      double sum = 0.0;
      for (double w : rd.weights) { sum += w; }
      CHECK(std::abs(sum - 1.0 / 6.0) < 1e-14);
      CHECK(worst_monomial_error(rd) < 1e-13);
   }
   CHECK_THROWS_AS(quadrature_rule(3, 9), UnsupportedRuleError);
}

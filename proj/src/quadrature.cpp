#include "lodgp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lodgp
{

namespace
{

struct Orbit
{
   double weight;                     // normalized so the full rule sums to 1
   std::array<double, 4> generator;   // barycentric generator
};

// Adds every distinct permutation of the generator.
void add_orbit(QuadratureRule &rule, const Orbit &o, double volume)
{
   const int n = rule.dim + 1;
   std::array<double, 4> g = o.generator;
   std::sort(g.begin(), g.begin() + n);
   do
   {
      rule.points.push_back({g[0], g[1], n > 2 ? g[2] : 0.0, n > 3 ? g[3] : 0.0});
      rule.weights.push_back(o.weight * volume);
   }
   while (std::next_permutation(g.begin(), g.begin() + n));
}

QuadratureRule from_orbits(int dim, int degree, const std::vector<Orbit> &orbits)
{
   QuadratureRule rule;
   rule.dim = dim;
   rule.degree_exact = degree;
   const double volume = dim == 2 ? 0.5 : 1.0 / 6.0;
   for (const auto &o : orbits) { add_orbit(rule, o, volume); }
   return rule;
}

QuadratureRule gauss_legendre(int degree)
{
   const int n = std::max(1, (degree + 2) / 2);
   QuadratureRule rule;
   rule.dim = 1;
   rule.degree_exact = 2 * n - 1;
   for (int i = 0; i < n; ++i)
   {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 1.0;
      for (int it = 0; it < 100; ++it)
      {
         double p0 = 1.0, p1 = x;
         for (int k = 2; k <= n; ++k)
         {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
         }
         dp = n * (x * p1 - p0) / (x * x - 1.0);
         const double dx = p1 / dp;
         x -= dx;
         if (std::abs(dx) < 1e-16) { break; }
      }
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k)
      {
         const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
         p0 = p1;
         p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      const double s = 0.5 * (1.0 - x);
      rule.points.push_back({1.0 - s, s, 0.0, 0.0});
      rule.weights.push_back(0.5 * w);
   }
   return rule;
}

QuadratureRule triangle_rule(int degree)
{
   if (degree <= 1)
   {
      return from_orbits(2, 1, {{1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0}}});
   }
   if (degree == 2)
   {
      return from_orbits(2, 2, {{1.0 / 3, {2.0 / 3, 1.0 / 6, 1.0 / 6, 0}}});
   }
   if (degree == 3)
   {
      return from_orbits(2, 3, {{-27.0 / 48, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0}},
                                {25.0 / 48, {0.6, 0.2, 0.2, 0}}});
   }
   if (degree <= 4)
   {
      const double a1 = 0.44594849091596488632, a2 = 0.09157621350977074346;
      return from_orbits(2, 4, {{0.2233815896780114657, {a1, a1, 1 - 2 * a1, 0}},
                                {0.10995174365532186764, {a2, a2, 1 - 2 * a2, 0}}});
   }
   if (degree <= 9)
   {
      const double a[4] = {0.48968251919873762778, 0.43708959149293663727,
                           0.18820353561903273024, 0.044729513394452709865};
      const double w[4] = {0.031334700227139070537, 0.077827541004774279317,
                           0.079647738927210253033, 0.025577675658698031262};
      std::vector<Orbit> orbits{{0.097135796282798833819, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0}}};
      for (int k = 0; k < 4; ++k) { orbits.push_back({w[k], {a[k], a[k], 1 - 2 * a[k], 0}}); }
      const double p = 0.036838412054736283635, q = 0.22196298916076569568;
      orbits.push_back({0.043283539377289377289, {p, q, 1 - p - q, 0}});
      return from_orbits(2, 9, orbits);
   }
   throw UnsupportedRuleError("no triangle rule of degree " + std::to_string(degree));
}

QuadratureRule tetrahedron_rule(int degree)
{
   if (degree <= 1)
   {
      return from_orbits(3, 1, {{1.0, {0.25, 0.25, 0.25, 0.25}}});
   }
   if (degree == 2)
   {
      const double a = 0.1381966011250105151795413;
      return from_orbits(3, 2, {{0.25, {a, a, a, 1 - 3 * a}}});
   }
   if (degree == 3)
   {
      return from_orbits(3, 3, {{-0.8, {0.25, 0.25, 0.25, 0.25}},
                                {0.45, {0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6}}});
   }
   if (degree <= 8)
   {
      // 45-point rule; the centroid weight is negative.
      const double centroid = -0.393270066412926145e-1 * 6.0;
      const double s31[2][2] = {{0.024487896356055589157, 0.1274709365666412902},
                                {0.0039485206398258752497, 0.032078830392631798463}};
      const double s22[2][2] = {{0.026305552950737129065, 0.049777095643280878637},
                                {0.082980383055058993941, 0.18373044739855073705}};
      const double s211[2][3] = {
         {0.025442624548102507634, 0.23190108939715095699, 0.51328003336088060929},
         {0.013432438437685587619, 0.037970048471829317445, 0.19374647524880249344}};
      std::vector<Orbit> orbits{{centroid, {0.25, 0.25, 0.25, 0.25}}};
      for (const auto &o : s31) { orbits.push_back({o[0], {o[1], o[1], o[1], 1 - 3 * o[1]}}); }
      for (const auto &o : s22) { orbits.push_back({o[0], {o[1], o[1], 0.5 - o[1], 0.5 - o[1]}}); }
      for (const auto &o : s211)
      {
         orbits.push_back({o[0], {o[1], o[1], o[2], 1 - 2 * o[1] - o[2]}});
      }
      QuadratureRule rule = from_orbits(3, 8, orbits);
      // Keep the published centroid weight bit-exact.
      rule.weights[0] = -0.393270066412926145e-1;
      return rule;
   }
   throw UnsupportedRuleError("no tetrahedron rule of degree " + std::to_string(degree));
}

} // namespace

int max_rule_degree(int dim)
{
   return dim == 3 ? 8 : 9;
}

QuadratureRule quadrature_rule(int dim, int requested_degree)
{
   if (requested_degree < 0)
   {
      throw UnsupportedRuleError("negative quadrature degree");
   }
   switch (dim)
   {
   case 1:
      if (requested_degree > 39)
      {
         throw UnsupportedRuleError("1d rules are provided up to degree 39");
      }
      return gauss_legendre(requested_degree);
   case 2: return triangle_rule(requested_degree);
   case 3: return tetrahedron_rule(requested_degree);
   default: throw UnsupportedRuleError("dimension must be 1, 2 or 3");
   }
}

} // namespace lodgp

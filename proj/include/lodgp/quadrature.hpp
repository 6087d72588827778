#pragma once

#include "lodgp/common.hpp"

#include <array>
#include <vector>

namespace lodgp
{

/// Quadrature rule on the reference simplex in barycentric coordinates.
/// Weights sum to the reference-simplex volume 1/dim!.
struct QuadratureRule
{
   int dim = 0;
   int degree_exact = 0;
   std::vector<std::array<double, 4>> points;
   std::vector<double> weights;

   int size() const { return static_cast<int>(weights.size()); }
};

/// Lowest-cost shipped rule exact for the requested degree.
///
/// 1d: Gauss-Legendre up to degree 39. 2d: degree <= 9 (19 points at degree 9).
/// 3d: degree <= 8 (45 points at degree 8).
QuadratureRule quadrature_rule(int dim, int requested_degree);

/// Highest degree available in the given dimension (9 for 1d/2d, 8 for 3d).
int max_rule_degree(int dim);

} // namespace lodgp

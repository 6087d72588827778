#pragma once

#include "lodgp/common.hpp"
#include "lodgp/mesh.hpp"
#include "lodgp/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>

namespace lodgp
{

enum class Smoothness { smooth, discontinuous };

/// Real function on the box. Discontinuous fields must jump only across
/// fine-mesh faces.
struct ScalarField
{
   std::function<double(const Point &)> evaluator;
   Smoothness smoothness = Smoothness::smooth;

   double operator()(const Point &x) const { return evaluator(x); }
};

ScalarField constant_field(double c);

using ElementMatrix = Eigen::Matrix4d;   // leading (dim+1)x(dim+1) block used

/// Gradients of the barycentric coordinates (rows) of simplex s.
Eigen::Matrix<double, 4, 3> barycentric_gradients(const SimplicialMesh &mesh, int s);

/// Physical coordinates of a barycentric point in simplex s.
Point map_to_physical(const SimplicialMesh &mesh, int s, const std::array<double, 4> &lambda);

ElementMatrix element_stiffness(const SimplicialMesh &mesh, int s);
ElementMatrix element_mass(const SimplicialMesh &mesh, int s);
ElementMatrix element_weighted_mass(const SimplicialMesh &mesh, int s, const ScalarField &V,
                                    const QuadratureRule &rule);

/// Global matrices over interior dofs, or over all vertices when
/// include_boundary is set.
SparseMatrix assemble_stiffness(const SimplicialMesh &mesh, bool include_boundary = false);
SparseMatrix assemble_mass(const SimplicialMesh &mesh, bool include_boundary = false);
SparseMatrix assemble_weighted_mass(const SimplicialMesh &mesh, const ScalarField &V,
                                    const QuadratureRule &rule, bool include_boundary = false);

/// P: row i holds coarse hat i at the fine vertices. Rows are coarse
/// interior dofs; columns are fine interior dofs (all fine vertices when
/// include_boundary is set).
SparseMatrix interpolation_matrix(const MeshPair &pair, bool include_boundary = false);

/// sum_ij u_i M_ij conj(v_j).
Complex l2_dot(const SimplicialMesh &mesh, const CVector &u, const CVector &v,
               const SparseMatrix &mass);
double l2_dot(const SimplicialMesh &mesh, const Vector &u, const Vector &v,
              const SparseMatrix &mass);

/// Nodal values of f at the interior vertices.
Vector nodal_interpolant(const SimplicialMesh &mesh, const std::function<double(const Point &)> &f);

} // namespace lodgp

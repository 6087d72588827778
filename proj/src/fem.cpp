#include "lodgp/fem.hpp"

#include <algorithm>
#include <numeric>

namespace lodgp
{

namespace
{

constexpr double kFactorial[4] = {1.0, 1.0, 2.0, 6.0};

template <class ElementFn>
SparseMatrix assemble(const SimplicialMesh &mesh, bool include_boundary, ElementFn &&element)
{
   const int n = include_boundary ? mesh.num_vertices() : mesh.num_dofs();
   const int nl = mesh.dim + 1;
   std::vector<Triplet> trip;
   trip.reserve(static_cast<std::size_t>(mesh.num_simplices()) * nl * nl);
   for (int s = 0; s < mesh.num_simplices(); ++s)
   {
      const ElementMatrix E = element(s);
      int idx[4];
      for (int a = 0; a < nl; ++a)
      {
         const int v = mesh.simplices[s][a];
         idx[a] = include_boundary ? v : mesh.dof_of_vertex[v];
      }
      for (int a = 0; a < nl; ++a)
      {
         if (idx[a] < 0) { continue; }
         for (int b = 0; b < nl; ++b)
         {
            if (idx[b] >= 0) { trip.emplace_back(idx[a], idx[b], E(a, b)); }
         }
      }
   }
   SparseMatrix A(n, n);
   A.setFromTriplets(trip.begin(), trip.end());
   A.makeCompressed();
   return A;
}

} // namespace

ScalarField constant_field(double c)
{
   return ScalarField{[c](const Point &) { return c; }, Smoothness::smooth};
}

Eigen::Matrix<double, 4, 3> barycentric_gradients(const SimplicialMesh &mesh, int s)
{
   const int d = mesh.dim;
   const auto &S = mesh.simplices[s];
   Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
   for (int c = 0; c < d; ++c)
   {
      for (int a = 0; a < d; ++a)
      {
         J(c, a) = mesh.vertices[S[c + 1]][a] - mesh.vertices[S[0]][a];
      }
   }
   // Gradients of lambda_1..lambda_d are the columns of J^{-1}.
   const Eigen::Matrix3d Jinv = J.inverse();
   Eigen::Matrix<double, 4, 3> G = Eigen::Matrix<double, 4, 3>::Zero();
   for (int c = 0; c < d; ++c)
   {
      for (int a = 0; a < d; ++a)
      {
         G(c + 1, a) = Jinv(a, c);
         G(0, a) -= Jinv(a, c);
      }
   }
   return G;
}

Point map_to_physical(const SimplicialMesh &mesh, int s, const std::array<double, 4> &lambda)
{
   Point x{0.0, 0.0, 0.0};
   for (int v = 0; v <= mesh.dim; ++v)
   {
      const Point &y = mesh.vertices[mesh.simplices[s][v]];
      for (int a = 0; a < mesh.dim; ++a) { x[a] += lambda[v] * y[a]; }
   }
   return x;
}

ElementMatrix element_stiffness(const SimplicialMesh &mesh, int s)
{
   const auto G = barycentric_gradients(mesh, s);
   ElementMatrix E = G * G.transpose();
   E *= mesh.volume(s);
   return E;
}

ElementMatrix element_mass(const SimplicialMesh &mesh, int s)
{
   const int d = mesh.dim;
   const double c = mesh.volume(s) / ((d + 1) * (d + 2));
   ElementMatrix E = ElementMatrix::Zero();
   for (int a = 0; a <= d; ++a)
   {
      for (int b = 0; b <= d; ++b) { E(a, b) = a == b ? 2.0 * c : c; }
   }
   return E;
}

ElementMatrix element_weighted_mass(const SimplicialMesh &mesh, int s, const ScalarField &V,
                                    const QuadratureRule &rule)
{
   const int d = mesh.dim;
   const double scale = mesh.volume(s) * kFactorial[d];
   ElementMatrix E = ElementMatrix::Zero();
   for (int q = 0; q < rule.size(); ++q)
   {
      const auto &l = rule.points[q];
      const double w = rule.weights[q] * scale * V(map_to_physical(mesh, s, l));
      for (int a = 0; a <= d; ++a)
      {
         for (int b = 0; b <= d; ++b) { E(a, b) += w * l[a] * l[b]; }
      }
   }
   return E;
}

SparseMatrix assemble_stiffness(const SimplicialMesh &mesh, bool include_boundary)
{
   return assemble(mesh, include_boundary, [&](int s) { return element_stiffness(mesh, s); });
}

SparseMatrix assemble_mass(const SimplicialMesh &mesh, bool include_boundary)
{
   return assemble(mesh, include_boundary, [&](int s) { return element_mass(mesh, s); });
}

SparseMatrix assemble_weighted_mass(const SimplicialMesh &mesh, const ScalarField &V,
                                    const QuadratureRule &rule, bool include_boundary)
{
   if (rule.dim != mesh.dim) { throw UnsupportedRuleError("rule dimension does not match mesh"); }
   return assemble(mesh, include_boundary,
                   [&](int s) { return element_weighted_mass(mesh, s, V, rule); });
}

SparseMatrix interpolation_matrix(const MeshPair &pair, bool include_boundary)
{
   const SimplicialMesh &C = pair.coarse;
   const SimplicialMesh &F = pair.fine;
   const int f = pair.refinement_factor;
   const int d = C.dim;
   const int cnx = C.cells[0] + 1;
   const int cny = d >= 2 ? C.cells[1] + 1 : 1;
   const int fnx = F.cells[0] + 1;
   const int fny = d >= 2 ? F.cells[1] + 1 : 1;

   std::vector<Triplet> trip;
   for (int vf = 0; vf < F.num_vertices(); ++vf)
   {
      const int col = include_boundary ? vf : F.dof_of_vertex[vf];
      if (col < 0) { continue; }
      const int g[3] = {vf % fnx, (vf / fnx) % fny, vf / (fnx * fny)};
      int c[3] = {0, 0, 0};
      int r[3] = {0, 0, 0};
      for (int a = 0; a < d; ++a)
      {
         c[a] = std::min(g[a] / f, C.cells[a] - 1);
         r[a] = g[a] - c[a] * f;
      }
      // Kuhn barycentrics: sort the local offsets in decreasing order.
      int order[3] = {0, 1, 2};
      std::stable_sort(order, order + d, [&](int x, int y) { return r[x] > r[y]; });
      int corner[3] = {c[0], c[1], c[2]};
      int prev = f;
      for (int k = 0; k <= d; ++k)
      {
         const int next = k < d ? r[order[k]] : 0;
         const double lam = static_cast<double>(prev - next) / f;
         if (lam != 0.0)
         {
            const int vc = corner[0] + cnx * (corner[1] + cny * corner[2]);
            const int row = C.dof_of_vertex[vc];
            if (row >= 0) { trip.emplace_back(row, col, lam); }
         }
         if (k < d)
         {
            corner[order[k]] += 1;
            prev = next;
         }
      }
   }
   SparseMatrix P(C.num_dofs(), include_boundary ? F.num_vertices() : F.num_dofs());
   P.setFromTriplets(trip.begin(), trip.end());
   P.makeCompressed();
   return P;
}

Complex l2_dot(const SimplicialMesh &mesh, const CVector &u, const CVector &v,
               const SparseMatrix &mass)
{
   require_length(static_cast<std::size_t>(u.size()), static_cast<std::size_t>(mass.rows()), "l2_dot u");
   require_length(static_cast<std::size_t>(v.size()), static_cast<std::size_t>(mass.cols()), "l2_dot v");
   (void)mesh;
   const CVector Mv = mass * v.conjugate();
   return u.cwiseProduct(Mv).sum();
}

double l2_dot(const SimplicialMesh &mesh, const Vector &u, const Vector &v, const SparseMatrix &mass)
{
   require_length(static_cast<std::size_t>(u.size()), static_cast<std::size_t>(mass.rows()), "l2_dot u");
   require_length(static_cast<std::size_t>(v.size()), static_cast<std::size_t>(mass.cols()), "l2_dot v");
   (void)mesh;
   return u.dot(mass * v);
}

Vector nodal_interpolant(const SimplicialMesh &mesh, const std::function<double(const Point &)> &f)
{
   Vector u(mesh.num_dofs());
   for (int i = 0; i < mesh.num_dofs(); ++i) { u(i) = f(mesh.vertices[mesh.vertex_of_dof[i]]); }
   return u;
}

} // namespace lodgp

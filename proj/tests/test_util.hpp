#pragma once

#include "lodgp/lod.hpp"

#include <memory>

namespace testutil
{

using namespace lodgp;

inline std::shared_ptr<const MeshPair> make_pair(int dim, double lo, double hi, int cells, int factor)
{
   const auto c = build_box_mesh(dim, {lo, lo, lo}, {hi, hi, hi}, {cells, cells, cells});
   return std::make_shared<const MeshPair>(refine_uniform(c, factor));
}

// Values of every LOD basis function at every quadrature point of every fine
// simplex, with the physical weights.
struct PointSamples
{
   DenseMatrix X;   // points x basis
   Vector w;
};

inline PointSamples sample_basis(const LodSpace &lod, const QuadratureRule &rule)
{
   const SimplicialMesh &F = lod.fine();
   const DenseMatrix PhiD(lod.Phi);
   const int nq = rule.size();
   const double dfact = F.dim == 1 ? 1.0 : (F.dim == 2 ? 2.0 : 6.0);
   PointSamples s;
   s.X = DenseMatrix::Zero(static_cast<Eigen::Index>(F.num_simplices()) * nq, lod.num_dofs());
   s.w.resize(s.X.rows());
   for (int t = 0; t < F.num_simplices(); ++t)
   {
      for (int q = 0; q < nq; ++q)
      {
         const Eigen::Index p = static_cast<Eigen::Index>(t) * nq + q;
         s.w(p) = rule.weights[q] * F.volume(t) * dfact;
         for (int a = 0; a <= F.dim; ++a)
         {
            const int d = F.dof_of_vertex[F.simplices[t][a]];
            if (d < 0) { continue; }
            for (int i = 0; i < lod.num_dofs(); ++i) { s.X(p, i) += rule.points[q][a] * PhiD(i, d); }
         }
      }
   }
   return s;
}

} // namespace testutil

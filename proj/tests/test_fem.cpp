#include "doctest.h"
#include "lodgp/fem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace lodgp;

namespace
{

double max_asym(const SparseMatrix &A)
{
   const DenseMatrix D(A);
   return (D - D.transpose()).cwiseAbs().maxCoeff() / std::max(1e-300, D.cwiseAbs().maxCoeff());
}

SimplicialMesh unit1d(int n)
{
   return build_box_mesh(1, {0, 0, 0}, {1, 0, 0}, {n, 1, 1});
}

} // namespace

TEST_CASE("stiffness")
{
   const auto A = assemble_stiffness(unit1d(2));
   CHECK(A.rows() == 1);
   CHECK(A.coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-14));

   const int n = 8;
   const double h = 1.0 / n;
   const auto T = assemble_stiffness(unit1d(n));
   for (int i = 0; i < n - 1; ++i)
   {
      CHECK(std::abs(T.coeff(i, i) - 2.0 / h) < 1e-12);
      if (i + 1 < n - 1) { CHECK(std::abs(T.coeff(i, i + 1) + 1.0 / h) < 1e-12); }
   }

   for (int dim = 1; dim <= 3; ++dim)
   {
      const auto m = build_box_mesh(dim, {0, 0, 0}, {1, 2, 1}, {3, 3, 3});
      const auto S = assemble_stiffness(m);
      CHECK(max_asym(S) < 1e-13);
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es{DenseMatrix(S)};
      CHECK(es.eigenvalues().minCoeff() > 0.0);
   }
}

TEST_CASE("mass")
{
   const auto M = assemble_mass(unit1d(2));
   CHECK(M.coeff(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

   const int n = 6;
   const double h = 1.0 / n;
   const auto T = assemble_mass(unit1d(n));
   CHECK(std::abs(T.coeff(2, 2) - 2 * h / 3) < 1e-15);
   CHECK(std::abs(T.coeff(2, 3) - h / 6) < 1e-15);

   for (int dim = 1; dim <= 3; ++dim)
   {
      const auto m = build_box_mesh(dim, {0, 0, 0}, {1, 2, 0.5}, {3, 2, 2});
      const auto F = assemble_mass(m, true);
      CHECK(max_asym(F) < 1e-13);
      CHECK(std::abs(F.sum() - m.box_volume()) < 1e-13);
      // row sums are the nodal dual volumes |supp| / (d+1)
      for (int v = 0; v < m.num_vertices(); ++v)
      {
         double dual = 0.0;
         for (int s : m.vertex_simplices[v]) { dual += m.volume(s) / (dim + 1); }
         CHECK(std::abs(F.row(v).sum() - dual) < 1e-14);
      }
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es{DenseMatrix(assemble_mass(m))};
      CHECK(es.eigenvalues().minCoeff() > 0.0);
   }
}

TEST_CASE("weighted mass")
{
   const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, {4, 3, 1});
   const auto rule = quadrature_rule(2, 4);
   CHECK(assemble_weighted_mass(m, constant_field(0.0), rule).norm() == 0.0);
   const DenseMatrix diff = DenseMatrix(assemble_weighted_mass(m, constant_field(1.0), rule)) -
                            DenseMatrix(assemble_mass(m));
   CHECK(diff.cwiseAbs().maxCoeff() < 1e-14);

   const ScalarField xfield{[](const Point &p) { return p[0]; }, Smoothness::smooth};
   const auto W = assemble_weighted_mass(unit1d(2), xfield, quadrature_rule(1, 3));
   CHECK(std::abs(W.coeff(0, 0) - 1.0 / 6.0) < 1e-15);

   const ScalarField V{[](const Point &p) { return 1.0 + p[0] * p[0] + p[1]; }, Smoothness::smooth};
   const auto WV = assemble_weighted_mass(m, V, rule);
   CHECK(max_asym(WV) < 1e-13);
}

TEST_CASE("interpolation matrix")
{
   const auto c = unit1d(2);
   const auto p = refine_uniform(c, 2);
   const auto P = interpolation_matrix(p);
   CHECK(P.rows() == 1);
   CHECK(P.cols() == 3);
   CHECK(P.coeff(0, 0) == 0.5);
   CHECK(P.coeff(0, 1) == 1.0);
   CHECK(P.coeff(0, 2) == 0.5);

   const auto c2 = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, {3, 3, 1});
   const auto P1 = interpolation_matrix(refine_uniform(c2, 1));
   CHECK((DenseMatrix(P1) - DenseMatrix::Identity(c2.num_dofs(), c2.num_dofs())).norm() == 0.0);

   // pointwise oracle: evaluate coarse hats at fine vertices through barycentric coordinates
   for (int dim = 2; dim <= 3; ++dim)
   {
      const auto cm = build_box_mesh(dim, {0, 0, 0}, {1, 1.5, 1}, {3, 2, 2});
      const auto pr = refine_uniform(cm, 3);
      const DenseMatrix Pf(interpolation_matrix(pr, true));
      for (int vf = 0; vf < pr.fine.num_vertices(); ++vf)
      {
         const Point &x = pr.fine.vertices[vf];
         const int K = cm.locate(x);
         const auto lam = cm.barycentric(K, x);
         for (int i = 0; i < cm.num_dofs(); ++i)
         {
            double expect = 0.0;
            for (int a = 0; a <= dim; ++a)
            {
               if (cm.simplices[K][a] == cm.vertex_of_dof[i]) { expect = lam[a]; }
            }
            CHECK(std::abs(Pf(i, vf) - expect) < 1e-13);
         }
      }
   }
}

TEST_CASE("l2 dot")
{
   const auto m = unit1d(4);
   const auto M = assemble_mass(m);
   std::mt19937 rng(3);
   std::normal_distribution<double> g;
   CVector u(3);
   for (int i = 0; i < 3; ++i) { u(i) = {g(rng), g(rng)}; }
   const Complex uu = l2_dot(m, u, u, M);
   CHECK(std::abs(uu.imag()) < 1e-15);
   CHECK(uu.real() >= 0.0);

   Vector e0 = Vector::Zero(3), e2 = Vector::Zero(3);
   e0(0) = 1.0;
   e2(2) = 1.0;
   CHECK(l2_dot(m, e0, e2, M) == 0.0);

   // brute-force quadrature of u * conj(v)
   CVector v(3);
   for (int i = 0; i < 3; ++i) { v(i) = {g(rng), g(rng)}; }
   auto evalc = [&](const CVector &c, double x)
   {
      Complex r = 0.0;
      for (int i = 0; i < 3; ++i)
      {
         const double xi = 0.25 * (i + 1);
         r += c(i) * std::max(0.0, 1.0 - std::abs(x - xi) / 0.25);
      }
      return r;
   };
   const auto rule = quadrature_rule(1, 5);
   Complex brute = 0.0;
   for (int s = 0; s < 4; ++s)
   {
      for (int q = 0; q < rule.size(); ++q)
      {
         const double x = 0.25 * (s + rule.points[q][1]);
         brute += 0.25 * rule.weights[q] * evalc(u, x) * std::conj(evalc(v, x));
      }
   }
   CHECK(std::abs(l2_dot(m, u, v, M) - brute) < 1e-14);
   CHECK_THROWS_AS(l2_dot(m, CVector(2), v, M), LengthMismatchError);
}

TEST_CASE("Dirichlet energy of interpolants converges at second order")
{
   auto u = [](const Point &p) { return p[0] * (1 - p[0]) * p[1] * (1 - p[1]); };
   const double exact = 2.0 * (1.0 / 3.0) * (1.0 / 30.0);
   std::vector<double> err;
   for (int n : {4, 8, 16, 32})
   {
      const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, {n, n, 1});
      const Vector c = nodal_interpolant(m, u);
      err.push_back(std::abs(c.dot(assemble_stiffness(m) * c) - exact));
   }
   for (std::size_t k = 1; k < err.size(); ++k)
   {
      CHECK(std::log2(err[k - 1] / err[k]) > 1.8);
   }
}

#include "doctest.h"
#include "lodgp/lod.hpp"
#include "lodgp/tritensor.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace lodgp;
using testutil::make_pair;
using testutil::sample_basis;

namespace
{

LodSpace build(std::shared_ptr<const MeshPair> pair, int ell, int degree)
{
   return build_lod_space(pair, BilinearFormChoice::canonical(), ell,
                          quadrature_rule(pair->fine.dim, degree));
}

CVector random_complex(int n, std::mt19937 &rng)
{
   std::normal_distribution<double> g;
   CVector v(n);
   for (int i = 0; i < n; ++i) { v(i) = {g(rng), g(rng)}; }
   return v;
}

} // namespace

TEST_CASE("preallocation structure")
{
   SparseMatrix one(1, 1);
   one.insert(0, 0) = 2.0;
   const auto t1 = preallocate(one);
   CHECK(t1.size() == 1);
   CHECK(t1.J[0] == 0);
   CHECK(t1.K[0] == 0);

   const auto pair = make_pair(1, 0.0, 1.0, 8, 1);
   const auto lod = build(pair, 1, 3);
   const auto &t = lod.omega;
   for (int i = 1; i + 1 < t.n; ++i)
   {
      std::vector<std::pair<int, int>> blk;
      for (auto p = t.Iptr[i]; p < t.Iptr[i + 1]; ++p) { blk.emplace_back(t.J[p], t.K[p]); }
      CHECK(blk == std::vector<std::pair<int, int>>{{i, i}, {i, i + 1}, {i + 1, i + 1}});
   }
   // memory bound
   std::int64_t bound = 0;
   for (int i = 0; i < lod.M_lod.rows(); ++i)
   {
      std::int64_t nnz = 0;
      for (SparseMatrix::InnerIterator it(lod.M_lod, i); it; ++it) { nnz += it.col() >= i; }
      bound += nnz * (nnz + 1) / 2;
   }
   CHECK(t.size() <= bound);
   for (int i = 0; i < t.n; ++i) { CHECK(t.Iptr[i] <= t.Iptr[i + 1]); }
}

TEST_CASE("skeleton covers every triple with a common support element")
{
   const auto pair = make_pair(2, 0.0, 1.0, 4, 2);
   const auto lod = build(pair, 1, 3);
   const auto s = sample_basis(lod, quadrature_rule(2, 3));
   const int n = lod.num_dofs();
   const auto &F = pair->fine;
   const int nq = quadrature_rule(2, 3).size();
   for (int t = 0; t < F.num_simplices(); ++t)
   {
      std::vector<int> act;
      for (int i = 0; i < n; ++i)
      {
         if (s.X.middleRows(static_cast<Eigen::Index>(t) * nq, nq).col(i).cwiseAbs().maxCoeff() > 0) { act.push_back(i); }
      }
      for (int a : act)
      {
         for (int b : act)
         {
            for (int c : act) { CHECK(lod.omega.find(a, b, c) >= 0); }
         }
      }
   }
}

TEST_CASE("analytic and oracle values")
{
   const auto pair = make_pair(1, 0.0, 1.0, 2, 1);
   const auto lod = build(pair, 0, 9);
   CHECK(std::abs(get(lod.omega, 0, 0, 0) - 0.25) < 1e-15);

   for (int dim = 1; dim <= 2; ++dim)
   {
      const auto p = dim == 1 ? make_pair(1, -1.0, 1.0, 12, 4) : make_pair(2, -1.0, 1.0, 5, 3);
      const auto L = build(p, 2, max_rule_degree(dim));
      const int n = L.num_dofs();
      REQUIRE(n <= 30);
      const auto s = sample_basis(L, quadrature_rule(dim, dim == 1 ? 12 : 9));
      double worst = 0.0, scale = 0.0;
      double ones = 0.0;
      for (int i = 0; i < n; ++i)
      {
         for (int j = 0; j < n; ++j)
         {
            for (int k = 0; k < n; ++k)
            {
               const double ref = (s.w.array() * s.X.col(i).array() * s.X.col(j).array() * s.X.col(k).array()).sum();
               worst = std::max(worst, std::abs(get(L.omega, i, j, k) - ref));
               scale = std::max(scale, std::abs(ref));
               ones += get(L.omega, i, j, k);
            }
         }
      }
      CHECK(worst < 1e-12 * scale);
      const Vector sum = s.X.rowwise().sum();
      const double cube = (s.w.array() * sum.array().cube()).sum();
      CHECK(std::abs(ones - cube) < 1e-12 * std::abs(cube));

      std::mt19937 rng(9);
      for (int r = 0; r < 100; ++r)
      {
         const int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n), k = static_cast<int>(rng() % n);
         CHECK(get(L.omega, i, j, k) == get(L.omega, k, i, j));
         CHECK(get(L.omega, i, j, k) == get(L.omega, j, k, i));
         CHECK(get(L.omega, i, j, k) == get(L.omega, j, i, k));
      }

      // contractions against dense fine quadrature
      const CVector alpha = random_complex(n, rng);
      const CVector v = s.X * alpha;
      const Vector dens = v.cwiseAbs2();
      const Vector b = density_rhs(L.omega, alpha);
      const Vector bref = s.X.transpose() * (s.w.cwiseProduct(dens));
      CHECK((b - bref).cwiseAbs().maxCoeff() < 1e-12 * bref.cwiseAbs().maxCoeff());

      const Vector rho = random_complex(n, rng).real();
      const CVector c = nonlinear_apply(L.omega, rho, alpha);
      const Vector rv = s.X * rho;
      const CVector cref = s.X.transpose() * (s.w.cwiseProduct(rv).cast<Complex>().cwiseProduct(v));
      CHECK((c - cref).cwiseAbs().maxCoeff() < 1e-12 * cref.cwiseAbs().maxCoeff());
      const CVector cm = nonlinear_matrix(L.omega, rho).cast<Complex>() * alpha;
      CHECK((cm - c).cwiseAbs().maxCoeff() < 1e-12 * c.cwiseAbs().maxCoeff());

      // composition identity
      const Vector pr = DenseMatrix(L.M_lod).ldlt().solve(b);
      const Complex comp = alpha.dot(nonlinear_apply(L.omega, pr, alpha));
      CHECK(std::abs(comp.imag()) < 1e-12 * std::abs(comp));
      CHECK(comp.real() >= -1e-12);
   }
}

TEST_CASE("trivial contractions")
{
   const auto pair = make_pair(1, 0.0, 1.0, 6, 3);
   const auto L = build(pair, 1, 9);
   const int n = L.num_dofs();
   CHECK(density_rhs(L.omega, CVector(CVector::Zero(n))).norm() == 0.0);
   CHECK(nonlinear_apply(L.omega, Vector(Vector::Zero(n)), CVector(CVector::Ones(n))).norm() == 0.0);
   for (int j = 0; j < n; ++j)
   {
      CVector e = CVector::Zero(n);
      e(j) = 1.0;
      const Vector b = density_rhs(L.omega, e);
      for (int i = 0; i < n; ++i) { CHECK(b(i) == doctest::Approx(get(L.omega, j, j, i)).epsilon(1e-14)); }
      for (int k = 0; k < n; ++k)
      {
         Vector rho = Vector::Zero(n);
         rho(k) = 1.0;
         const CVector c = nonlinear_apply(L.omega, rho, e);
         for (int i = 0; i < n; ++i) { CHECK(std::abs(c(i) - get(L.omega, k, j, i)) < 1e-15); }
      }
   }
   CHECK_THROWS_AS(density_rhs(L.omega, CVector(n + 1)), LengthMismatchError);
   CHECK_THROWS_AS(get(L.omega, 0, 0, n), IndexOutOfRangeError);
   CHECK(get(L.omega, 0, 0, n - 1) == 0.0);
}

TEST_CASE("1d rule of degree 9 is already exact")
{
   const auto pair = make_pair(1, -2.0, 2.0, 10, 6);
   const auto a = build(pair, 3, 9);
   const auto b = build(pair, 3, 12);
   double diff = 0.0;
   for (std::size_t p = 0; p < a.omega.V.size(); ++p) { diff = std::max(diff, std::abs(a.omega.V[p] - b.omega.V[p])); }
   CHECK(diff < 1e-13);
}

TEST_CASE("assembly is independent of the thread count")
{
   const auto pair = make_pair(2, 0.0, 1.0, 4, 3);
   set_num_threads(1);
   const auto a = build(pair, 1, 9);
   set_num_threads(3);
   const auto b = build(pair, 1, 9);
   set_num_threads(1);
   CHECK(a.omega.V == b.omega.V);
   CHECK(DenseMatrix(a.Phi) == DenseMatrix(b.Phi));
}

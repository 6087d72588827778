#include "lodgp/tritensor.hpp"

#include "lodgp/fem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace lodgp
{

namespace
{

// Calls f(x, y, z) once for every distinct ordering of the multiset {a <= b <= c}.
template <class Fn>
inline void for_each_permutation(int a, int b, int c, Fn &&f)
{
   if (a == b && b == c)
   {
      f(a, a, a);
   }
   else if (a == b)
   {
      f(a, a, c);
      f(a, c, a);
      f(c, a, a);
   }
   else if (b == c)
   {
      f(a, b, b);
      f(b, a, b);
      f(b, b, a);
   }
   else
   {
      f(a, b, c);
      f(a, c, b);
      f(b, a, c);
      f(b, c, a);
      f(c, a, b);
      f(c, b, a);
   }
}

void check_index(const TriTensor &t, int i)
{
   if (i < 0 || i >= t.n) { throw IndexOutOfRangeError("tensor index out of range"); }
}

struct LocalBlock
{
   std::vector<int> global;      // active LOD indices, ascending
   std::vector<double> values;   // packed i <= j <= k over local indices
};

LocalBlock local_tensor(int Kc, const MeshPair &pair, const SparseMatrix &PhiT,
                        const QuadratureRule &rule)
{
   const SimplicialMesh &F = pair.fine;
   const int d = F.dim;
   const double dfact = d == 1 ? 1.0 : (d == 2 ? 2.0 : 6.0);
   const auto &kids = pair.children[Kc];

   LocalBlock blk;
   for (int t : kids)
   {
      for (int a = 0; a <= d; ++a)
      {
         const int dof = F.dof_of_vertex[F.simplices[t][a]];
         if (dof < 0) { continue; }
         for (SparseMatrix::InnerIterator it(PhiT, dof); it; ++it) { blk.global.push_back(it.col()); }
      }
   }
   std::sort(blk.global.begin(), blk.global.end());
   blk.global.erase(std::unique(blk.global.begin(), blk.global.end()), blk.global.end());
   const int na = static_cast<int>(blk.global.size());
   if (na == 0) { return blk; }

   const int nq = rule.size();
   const Eigen::Index npts = static_cast<Eigen::Index>(kids.size()) * nq;
   DenseMatrix X = DenseMatrix::Zero(npts, na);
   Vector w(npts);
   DenseMatrix L(nq, d + 1);
   for (int q = 0; q < nq; ++q)
   {
      for (int a = 0; a <= d; ++a) { L(q, a) = rule.points[q][a]; }
   }
   DenseMatrix Vt(d + 1, na);
   for (std::size_t c = 0; c < kids.size(); ++c)
   {
      const int t = kids[c];
      Vt.setZero();
      for (int a = 0; a <= d; ++a)
      {
         const int dof = F.dof_of_vertex[F.simplices[t][a]];
         if (dof < 0) { continue; }
         for (SparseMatrix::InnerIterator it(PhiT, dof); it; ++it)
         {
            const auto pos = std::lower_bound(blk.global.begin(), blk.global.end(), it.col());
            Vt(a, pos - blk.global.begin()) = it.value();
         }
      }
      const Eigen::Index row0 = static_cast<Eigen::Index>(c) * nq;
      X.middleRows(row0, nq).noalias() = L * Vt;
      const double scale = F.volume(t) * dfact;
      for (int q = 0; q < nq; ++q) { w(row0 + q) = rule.weights[q] * scale; }
   }

   blk.values.reserve(static_cast<std::size_t>(na) * (na + 1) * (na + 2) / 6);
   DenseMatrix WX;
   DenseMatrix G;
   for (int i = 0; i < na; ++i)
   {
      const int m = na - i;
      const auto Xi = X.rightCols(m);
      WX = (w.cwiseProduct(X.col(i))).asDiagonal() * Xi;
      G.noalias() = Xi.transpose() * WX;
      for (int j = 0; j < m; ++j)
      {
         for (int k = j; k < m; ++k) { blk.values.push_back(G(j, k)); }
      }
   }
   return blk;
}

} // namespace

std::int64_t TriTensor::find(int i, int j, int k) const
{
   int s[3] = {i, j, k};
   std::sort(s, s + 3);
   if (s[0] < 0 || s[2] >= n) { return -1; }
   const auto jb = J.begin() + Iptr[s[0]];
   const auto je = J.begin() + Iptr[s[0] + 1];
   const auto range = std::equal_range(jb, je, s[1]);
   if (range.first == range.second) { return -1; }
   const auto kb = K.begin() + (range.first - J.begin());
   const auto ke = K.begin() + (range.second - J.begin());
   const auto pos = std::lower_bound(kb, ke, s[2]);
   if (pos == ke || *pos != s[2]) { return -1; }
   return pos - K.begin();
}

TriTensor preallocate(const SparseMatrix &M_lod)
{
   TriTensor t;
   t.n = static_cast<int>(M_lod.rows());
   t.Iptr.assign(t.n + 1, 0);
   std::vector<int> s;
   for (int i = 0; i < t.n; ++i)
   {
      s.clear();
      for (SparseMatrix::InnerIterator it(M_lod, i); it; ++it)
      {
         if (it.col() >= i && std::abs(it.value()) > 1e-16) { s.push_back(it.col()); }
      }
      if (std::find(s.begin(), s.end(), i) == s.end())
      {
         s.insert(std::lower_bound(s.begin(), s.end(), i), i);
      }
      for (std::size_t a = 0; a < s.size(); ++a)
      {
         for (std::size_t b = a; b < s.size(); ++b)
         {
            if (std::abs(M_lod.coeff(s[a], s[b])) > 1e-16)
            {
               t.J.push_back(s[a]);
               t.K.push_back(s[b]);
            }
         }
      }
      t.Iptr[i + 1] = static_cast<std::int64_t>(t.J.size());
   }
   t.V.assign(t.J.size(), 0.0);
   return t;
}

TriTensor assemble(const TriTensor &skeleton, const MeshPair &pair, const SparseMatrix &Phi,
                   const QuadratureRule &rule)
{
   if (rule.dim != pair.fine.dim) { throw UnsupportedRuleError("tensor rule dimension mismatch"); }
   if (Phi.rows() != skeleton.n) { throw LengthMismatchError("Phi rows do not match tensor size"); }
   TriTensor t = skeleton;
   std::fill(t.V.begin(), t.V.end(), 0.0);
   const SparseMatrix PhiT = Phi.transpose();

   const int NK = pair.coarse.num_simplices();
   const int batch = std::max(1, 2 * num_threads());
   std::vector<LocalBlock> blocks(batch);
   for (int start = 0; start < NK; start += batch)
   {
      const int len = std::min(batch, NK - start);
      parallel_for(static_cast<std::size_t>(len), [&](std::size_t i)
      {
         blocks[i] = local_tensor(start + static_cast<int>(i), pair, PhiT, rule);
      });
      for (int b = 0; b < len; ++b)
      {
         const LocalBlock &blk = blocks[b];
         const int na = static_cast<int>(blk.global.size());
         std::size_t p = 0;
         for (int i = 0; i < na; ++i)
         {
            for (int j = i; j < na; ++j)
            {
               for (int k = j; k < na; ++k, ++p)
               {
                  const double v = blk.values[p];
                  if (v == 0.0) { continue; }
                  const std::int64_t pos = t.find(blk.global[i], blk.global[j], blk.global[k]);
                  if (pos < 0)
                  {
                     throw PreallocationError(
                        "triple (" + std::to_string(blk.global[i]) + "," + std::to_string(blk.global[j]) +
                        "," + std::to_string(blk.global[k]) + ") missing from the tensor skeleton");
                  }
                  t.V[pos] += v;
               }
            }
         }
         LocalBlock().global.swap(blocks[b].global);
         std::vector<double>().swap(blocks[b].values);
      }
   }
   return t;
}

double get(const TriTensor &t, int i, int j, int k)
{
   check_index(t, i);
   check_index(t, j);
   check_index(t, k);
   const std::int64_t pos = t.find(i, j, k);
   return pos < 0 ? 0.0 : t.V[pos];
}

Vector density_rhs(const TriTensor &t, const CVector &alpha)
{
   require_length(static_cast<std::size_t>(alpha.size()), static_cast<std::size_t>(t.n), "density_rhs");
   Vector b = Vector::Zero(t.n);
   for (int i = 0; i < t.n; ++i)
   {
      for (std::int64_t p = t.Iptr[i]; p < t.Iptr[i + 1]; ++p)
      {
         const double w = t.V[p];
         for_each_permutation(i, t.J[p], t.K[p], [&](int x, int y, int z)
         {
            b(x) += w * (alpha(z) * std::conj(alpha(y))).real();
         });
      }
   }
   return b;
}

Vector density_rhs(const TriTensor &t, const Vector &alpha)
{
   require_length(static_cast<std::size_t>(alpha.size()), static_cast<std::size_t>(t.n), "density_rhs");
   Vector b = Vector::Zero(t.n);
   for (int i = 0; i < t.n; ++i)
   {
      for (std::int64_t p = t.Iptr[i]; p < t.Iptr[i + 1]; ++p)
      {
         const double w = t.V[p];
         for_each_permutation(i, t.J[p], t.K[p], [&](int x, int y, int z)
         {
            b(x) += w * alpha(z) * alpha(y);
         });
      }
   }
   return b;
}

template <class Vec>
static Vec apply_impl(const TriTensor &t, const Vector &rho, const Vec &alpha)
{
   require_length(static_cast<std::size_t>(rho.size()), static_cast<std::size_t>(t.n), "nonlinear_apply rho");
   require_length(static_cast<std::size_t>(alpha.size()), static_cast<std::size_t>(t.n), "nonlinear_apply alpha");
   Vec c = Vec::Zero(t.n);
   for (int i = 0; i < t.n; ++i)
   {
      for (std::int64_t p = t.Iptr[i]; p < t.Iptr[i + 1]; ++p)
      {
         const double w = t.V[p];
         for_each_permutation(i, t.J[p], t.K[p], [&](int k, int j, int r)
         {
            c(r) += (w * rho(k)) * alpha(j);
         });
      }
   }
   return c;
}

CVector nonlinear_apply(const TriTensor &t, const Vector &rho, const CVector &alpha)
{
   return apply_impl(t, rho, alpha);
}

Vector nonlinear_apply(const TriTensor &t, const Vector &rho, const Vector &alpha)
{
   return apply_impl(t, rho, alpha);
}

SparseMatrix nonlinear_matrix(const TriTensor &t, const Vector &rho)
{
   require_length(static_cast<std::size_t>(rho.size()), static_cast<std::size_t>(t.n), "nonlinear_matrix");
   std::vector<Triplet> trip;
   trip.reserve(static_cast<std::size_t>(t.size()) * 3);
   for (int i = 0; i < t.n; ++i)
   {
      for (std::int64_t p = t.Iptr[i]; p < t.Iptr[i + 1]; ++p)
      {
         const double w = t.V[p];
         for_each_permutation(i, t.J[p], t.K[p], [&](int k, int j, int r)
         {
            trip.emplace_back(r, j, w * rho(k));
         });
      }
   }
   SparseMatrix N(t.n, t.n);
   N.setFromTriplets(trip.begin(), trip.end());
   N.makeCompressed();
   return N;
}

} // namespace lodgp

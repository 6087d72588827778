#include "lodgp/lod.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace lodgp
{

namespace
{

using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// row += r, both sorted by index.
void merge_add(std::vector<int> &idx, std::vector<double> &val, const CorrectorSolver::Result &r)
{
   if (idx.empty())
   {
      idx = r.index;
      val = r.value;
      return;
   }
   std::vector<int> out_idx;
   std::vector<double> out_val;
   out_idx.reserve(idx.size() + r.index.size());
   out_val.reserve(idx.size() + r.index.size());
   std::size_t a = 0, b = 0;
   while (a < idx.size() || b < r.index.size())
   {
      if (b == r.index.size() || (a < idx.size() && idx[a] < r.index[b]))
      {
         out_idx.push_back(idx[a]);
         out_val.push_back(val[a++]);
      }
      else if (a == idx.size() || r.index[b] < idx[a])
      {
         out_idx.push_back(r.index[b]);
         out_val.push_back(r.value[b++]);
      }
      else
      {
         out_idx.push_back(idx[a]);
         out_val.push_back(val[a++] + r.value[b++]);
      }
   }
   idx.swap(out_idx);
   val.swap(out_val);
}

template <class Vec>
Vec solve_spd(const SparseMatrix &A, const Vec &rhs)
{
   Eigen::SimplicialLLT<ColSparse> llt{ColSparse(A)};
   if (llt.info() != Eigen::Success) { throw SolverError("Cholesky factorization failed"); }
   if constexpr (std::is_same_v<Vec, CVector>)
   {
      const Vector re = llt.solve(Vector(rhs.real()));
      const Vector im = llt.solve(Vector(rhs.imag()));
      CVector out(rhs.size());
      out.real() = re;
      out.imag() = im;
      return out;
   }
   else
   {
      return llt.solve(rhs);
   }
}

} // namespace

BilinearFormChoice BilinearFormChoice::canonical()
{
   return {};
}

BilinearFormChoice BilinearFormChoice::potential_adapted(ScalarField V, std::string label,
                                                         double diffusion)
{
   BilinearFormChoice f;
   f.kind = FormKind::potential_adapted;
   f.potential = std::move(V);
   f.diffusion_factor = diffusion;
   f.label = "potential:" + label;
   return f;
}

ElementMatrix BilinearFormChoice::element_matrix(const SimplicialMesh &mesh, int s) const
{
   ElementMatrix E = diffusion_factor * element_stiffness(mesh, s);
   if (kind == FormKind::potential_adapted)
   {
      thread_local QuadratureRule rule;
      if (rule.dim != mesh.dim || rule.degree_exact < potential_degree)
      {
         rule = quadrature_rule(mesh.dim, potential_degree);
      }
      E += element_weighted_mass(mesh, s, *potential, rule);
   }
   return E;
}

SparseMatrix assemble_form(const SimplicialMesh &mesh, const BilinearFormChoice &form)
{
   SparseMatrix A = assemble_stiffness(mesh);
   if (form.diffusion_factor != 1.0) { A *= form.diffusion_factor; }
   if (form.kind == FormKind::potential_adapted)
   {
      if (!form.potential) { throw ConfigError("potential-adapted form without a potential"); }
      A += assemble_weighted_mass(mesh, *form.potential,
                                  quadrature_rule(mesh.dim, form.potential_degree));
   }
   return A;
}

CorrectorSolver::CorrectorSolver(const MeshPair &pair, const BilinearFormChoice &form)
   : CorrectorSolver(pair, form, assemble_form(pair.fine, form), interpolation_matrix(pair),
                     assemble_mass(pair.fine))
{
}

CorrectorSolver::CorrectorSolver(const MeshPair &pair, const BilinearFormChoice &form,
                                 SparseMatrix fine_form, SparseMatrix P,
                                 const SparseMatrix &fine_mass)
   : pair_(pair), form_(form), fine_form_(std::move(fine_form)), P_(std::move(P))
{
   PM_ = P_ * fine_mass;
   PM_.makeCompressed();
}

std::vector<CorrectorSolver::Result>
CorrectorSolver::solve(int K, int ell, const std::vector<std::array<double, 4>> &vertex_values) const
{
   const SimplicialMesh &C = pair_.coarse;
   const SimplicialMesh &F = pair_.fine;
   const int nr = static_cast<int>(vertex_values.size());
   std::vector<Result> out(nr);
   if (nr == 0) { return out; }

   const std::vector<int> S = patch(C, K, ell);
   std::vector<char> in_patch(C.simplices.size(), 0);
   for (int s : S) { in_patch[s] = 1; }

   // Fine dofs whose whole vertex star lies in the patch.
   std::vector<int> dofs;
   std::vector<char> seen(F.vertices.size(), 0);
   for (int s : S)
   {
      for (int t : pair_.children[s])
      {
         for (int a = 0; a <= F.dim; ++a)
         {
            const int v = F.simplices[t][a];
            if (seen[v]) { continue; }
            seen[v] = 1;
            if (F.dof_of_vertex[v] < 0) { continue; }
            bool interior = true;
            for (int u : F.vertex_simplices[v])
            {
               if (!in_patch[pair_.parent_map[u]])
               {
                  interior = false;
                  break;
               }
            }
            if (interior) { dofs.push_back(F.dof_of_vertex[v]); }
         }
      }
   }
   std::sort(dofs.begin(), dofs.end());
   const int n = static_cast<int>(dofs.size());
   if (n == 0) { return out; }
   std::vector<int> local(F.num_dofs(), -1);
   for (int r = 0; r < n; ++r) { local[dofs[r]] = r; }

   std::vector<int> cons;
   for (int s : S)
   {
      for (int a = 0; a <= C.dim; ++a)
      {
         const int d = C.dof_of_vertex[C.simplices[s][a]];
         if (d >= 0) { cons.push_back(d); }
      }
   }
   std::sort(cons.begin(), cons.end());
   cons.erase(std::unique(cons.begin(), cons.end()), cons.end());
   const int m = static_cast<int>(cons.size());

   std::vector<Eigen::Triplet<double, int>> ta;
   for (int r = 0; r < n; ++r)
   {
      for (SparseMatrix::InnerIterator it(fine_form_, dofs[r]); it; ++it)
      {
         const int c = local[it.col()];
         if (c >= 0) { ta.emplace_back(r, c, it.value()); }
      }
   }
   ColSparse A(n, n);
   A.setFromTriplets(ta.begin(), ta.end());

   DenseMatrix B = DenseMatrix::Zero(m, n);
   for (int i = 0; i < m; ++i)
   {
      for (SparseMatrix::InnerIterator it(PM_, cons[i]); it; ++it)
      {
         const int c = local[it.col()];
         if (c >= 0) { B(i, c) = it.value(); }
      }
   }

   // The constraints leave no admissible direction: the corrector vanishes.
   if (m >= n && Eigen::ColPivHouseholderQR<DenseMatrix>(B).rank() == n) { return out; }

   // Right-hand sides a_K(v, w) assembled over the fine children of K only.
   DenseMatrix R = DenseMatrix::Zero(n, nr);
   for (int t : pair_.children[K])
   {
      const ElementMatrix E = form_.element_matrix(F, t);
      std::vector<double> colvals(static_cast<std::size_t>(F.dim + 1) * nr);
      for (int c = 0; c <= F.dim; ++c)
      {
         const auto lam = C.barycentric(K, F.vertices[F.simplices[t][c]]);
         for (int r = 0; r < nr; ++r)
         {
            double v = 0.0;
            for (int a = 0; a <= C.dim; ++a) { v += vertex_values[r][a] * lam[a]; }
            colvals[c * nr + r] = v;
         }
      }
      for (int b = 0; b <= F.dim; ++b)
      {
         const int d = F.dof_of_vertex[F.simplices[t][b]];
         if (d < 0 || local[d] < 0) { continue; }
         for (int r = 0; r < nr; ++r)
         {
            double acc = 0.0;
            for (int c = 0; c <= F.dim; ++c) { acc += E(b, c) * colvals[c * nr + r]; }
            R(local[d], r) += acc;
         }
      }
   }

   Eigen::SimplicialLDLT<ColSparse> ldlt(A);
   if (ldlt.info() != Eigen::Success)
   {
      throw IllPosedPatchError("patch matrix factorization failed for element " + std::to_string(K));
   }
   DenseMatrix X = ldlt.solve(R);
   DenseMatrix mu = DenseMatrix::Zero(m, nr);
   if (m > 0)
   {
      const DenseMatrix Y = ldlt.solve(DenseMatrix(B.transpose()));
      const DenseMatrix Sc = B * Y;
      Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(Sc);
      mu = cod.solve(DenseMatrix(B * X));
      X -= Y * mu;
   }

   const double bnorm = B.norm();
   const DenseMatrix res1 = A * X + B.transpose() * mu - R;
   for (int r = 0; r < nr; ++r)
   {
      const double xn = X.col(r).norm();
      const double rn = R.col(r).norm();
      const double c1 = res1.col(r).norm();
      const double c2 = m > 0 ? (B * X.col(r)).norm() : 0.0;
      if (!std::isfinite(xn) || c1 > 1e-10 * (rn + 1e-300) + 1e-14 * xn ||
          c2 > 1e-10 * bnorm * (xn + rn + 1e-300))
      {
         throw IllPosedPatchError("corrector saddle-point residual too large on element " +
                                  std::to_string(K));
      }
      Result &res = out[r];
      res.index = dofs;
      res.value.assign(X.col(r).data(), X.col(r).data() + n);
   }
   return out;
}

Vector solve_corrector(const MeshPair &pair, const BilinearFormChoice &form, int K, int ell,
                       const Vector &v_H)
{
   require_length(static_cast<std::size_t>(v_H.size()), static_cast<std::size_t>(pair.coarse.num_dofs()),
                  "solve_corrector v_H");
   if (K < 0 || K >= pair.coarse.num_simplices()) { throw IndexOutOfRangeError("element index out of range"); }
   CorrectorSolver solver(pair, form);
   std::array<double, 4> vals{0.0, 0.0, 0.0, 0.0};
   for (int a = 0; a <= pair.coarse.dim; ++a)
   {
      const int d = pair.coarse.dof_of_vertex[pair.coarse.simplices[K][a]];
      vals[a] = d >= 0 ? v_H(d) : 0.0;
   }
   const auto res = solver.solve(K, ell, {vals});
   Vector out = Vector::Zero(pair.fine.num_dofs());
   for (std::size_t i = 0; i < res[0].index.size(); ++i) { out(res[0].index[i]) = res[0].value[i]; }
   return out;
}

SparseMatrix galerkin_matrix(const SparseMatrix &Phi, const SparseMatrix &X)
{
   const SparseMatrix T = Phi * X;
   const SparseMatrix PhiT = Phi.transpose();
   SparseMatrix R = T * PhiT;
   const SparseMatrix Rt = R.transpose();
   SparseMatrix S = 0.5 * (R + Rt);
   S.makeCompressed();
   return S;
}

void fill_fine_matrices(LodSpace &L)
{
   const SimplicialMesh &F = L.pair->fine;
   L.fine_stiffness = assemble_stiffness(F);
   L.fine_mass = assemble_mass(F);
   L.fine_form = assemble_form(F, L.form);
}

void fill_lod_matrices(LodSpace &L)
{
   const SimplicialMesh &F = L.pair->fine;
   const auto NH = L.Phi.rows();
   L.A_lod = galerkin_matrix(L.Phi, L.fine_stiffness);
   L.M_lod = galerkin_matrix(L.Phi, L.fine_mass);
   if (L.form.kind == FormKind::potential_adapted)
   {
      L.Vmass_lod = galerkin_matrix(
         L.Phi, assemble_weighted_mass(F, *L.form.potential, quadrature_rule(F.dim, L.form.potential_degree)));
   }
   else
   {
      L.Vmass_lod = SparseMatrix(NH, NH);
   }
   L.form_lod = galerkin_matrix(L.Phi, L.fine_form);
}

LodSpace build_lod_space(std::shared_ptr<const MeshPair> pair, const BilinearFormChoice &form,
                         int ell, const QuadratureRule &tensor_rule, const LodBuildOptions &options)
{
   if (ell < 0) { throw ConfigError("ell must be >= 0"); }
   const double t0 = wall_time();
   LodSpace L;
   L.pair = pair;
   L.ell = ell;
   L.form = form;
   const SimplicialMesh &C = pair->coarse;
   const SimplicialMesh &F = pair->fine;

   fill_fine_matrices(L);
   L.P = interpolation_matrix(*pair);
   const CorrectorSolver solver(*pair, form, L.fine_form, L.P, L.fine_mass);

   const int NH = C.num_dofs();
   std::vector<std::vector<int>> ridx(NH);
   std::vector<std::vector<double>> rval(NH);
   const int NK = C.num_simplices();
   const int batch = std::max(1, 4 * num_threads());
   for (int start = 0; start < NK; start += batch)
   {
      const int len = std::min(batch, NK - start);
      std::vector<std::vector<CorrectorSolver::Result>> res(len);
      std::vector<std::vector<int>> nodes(len);
      parallel_for(static_cast<std::size_t>(len), [&](std::size_t i)
      {
         const int K = start + static_cast<int>(i);
         std::vector<std::array<double, 4>> rhs;
         for (int a = 0; a <= C.dim; ++a)
         {
            const int d = C.dof_of_vertex[C.simplices[K][a]];
            if (d < 0) { continue; }
            std::array<double, 4> e{0.0, 0.0, 0.0, 0.0};
            e[a] = 1.0;
            rhs.push_back(e);
            nodes[i].push_back(d);
         }
         res[i] = solver.solve(K, ell, rhs);
      });
      for (int i = 0; i < len; ++i)
      {
         for (std::size_t r = 0; r < nodes[i].size(); ++r)
         {
            merge_add(ridx[nodes[i][r]], rval[nodes[i][r]], res[i][r]);
         }
      }
   }

   L.Q.resize(NH, F.num_dofs());
   std::size_t nnz = 0;
   for (const auto &r : ridx) { nnz += r.size(); }
   L.Q.reserve(static_cast<Eigen::Index>(nnz));
   for (int j = 0; j < NH; ++j)
   {
      L.Q.startVec(j);
      for (std::size_t k = 0; k < ridx[j].size(); ++k) { L.Q.insertBack(j, ridx[j][k]) = rval[j][k]; }
      std::vector<int>().swap(ridx[j]);
      std::vector<double>().swap(rval[j]);
   }
   L.Q.finalize();
   L.Phi = L.P - L.Q;
   L.Phi.makeCompressed();
   fill_lod_matrices(L);
   L.timings.basis_s = wall_time() - t0;

   if (options.build_omega)
   {
      const double t1 = wall_time();
      L.omega = assemble(preallocate(L.M_lod), *pair, L.Phi, tensor_rule);
      L.timings.omega_s = wall_time() - t1;
   }
   return L;
}

Vector project_a(const LodSpace &lod, const Vector &u_fine)
{
   require_length(static_cast<std::size_t>(u_fine.size()), static_cast<std::size_t>(lod.Phi.cols()), "project_a");
   return solve_spd<Vector>(lod.form_lod, lod.Phi * (lod.fine_form * u_fine));
}

CVector project_a(const LodSpace &lod, const CVector &u_fine)
{
   require_length(static_cast<std::size_t>(u_fine.size()), static_cast<std::size_t>(lod.Phi.cols()), "project_a");
   return solve_spd<CVector>(lod.form_lod, CVector(lod.Phi * (lod.fine_form * u_fine)));
}

Vector project_l2(const LodSpace &lod, const Vector &u_fine)
{
   require_length(static_cast<std::size_t>(u_fine.size()), static_cast<std::size_t>(lod.Phi.cols()), "project_l2");
   return solve_spd<Vector>(lod.M_lod, lod.Phi * (lod.fine_mass * u_fine));
}

CVector project_l2(const LodSpace &lod, const CVector &u_fine)
{
   require_length(static_cast<std::size_t>(u_fine.size()), static_cast<std::size_t>(lod.Phi.cols()), "project_l2");
   return solve_spd<CVector>(lod.M_lod, CVector(lod.Phi * (lod.fine_mass * u_fine)));
}

Vector to_fine(const LodSpace &lod, const Vector &alpha)
{
   require_length(static_cast<std::size_t>(alpha.size()), static_cast<std::size_t>(lod.Phi.rows()), "to_fine");
   return lod.Phi.transpose() * alpha;
}

CVector to_fine(const LodSpace &lod, const CVector &alpha)
{
   require_length(static_cast<std::size_t>(alpha.size()), static_cast<std::size_t>(lod.Phi.rows()), "to_fine");
   return lod.Phi.transpose() * alpha;
}

} // namespace lodgp

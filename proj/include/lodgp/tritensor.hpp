#pragma once

#include "lodgp/common.hpp"
#include "lodgp/mesh.hpp"
#include "lodgp/quadrature.hpp"

#include <cstdint>
#include <vector>

namespace lodgp
{

/// Symmetric sparse 3-tensor w_ijk = (phi_i phi_j, phi_k), stored once per
/// canonical triple i <= j <= k.
///
/// Block i spans [Iptr[i], Iptr[i+1]); inside a block the (J, K) pairs are
/// sorted lexicographically.
struct TriTensor
{
   int n = 0;
   std::vector<std::int64_t> Iptr;
   std::vector<int> J;
   std::vector<int> K;
   std::vector<double> V;

   std::int64_t size() const { return static_cast<std::int64_t>(V.size()); }

   /// Storage position of the triple (any order), or -1 if structurally absent.
   std::int64_t find(int i, int j, int k) const;
};

/// Structure from the sparsity of the (symmetric) LOD mass matrix.
TriTensor preallocate(const SparseMatrix &M_lod);

/// Fills the values of a preallocated skeleton by quadrature on the fine
/// simplices. Phi rows are the LOD basis functions in fine interior dofs.
TriTensor assemble(const TriTensor &skeleton, const MeshPair &pair, const SparseMatrix &Phi,
                   const QuadratureRule &rule);

/// Entry w_ijk with indices in any order; 0 for absent triples.
double get(const TriTensor &t, int i, int j, int k);

/// b_i = (|v|^2, phi_i) for v = sum_k alpha_k phi_k.
Vector density_rhs(const TriTensor &t, const CVector &alpha);
Vector density_rhs(const TriTensor &t, const Vector &alpha);

/// c_i = sum_{k,j} rho_k alpha_j w_kji.
CVector nonlinear_apply(const TriTensor &t, const Vector &rho, const CVector &alpha);
Vector nonlinear_apply(const TriTensor &t, const Vector &rho, const Vector &alpha);

/// Matrix N(rho) with N_ij = sum_k rho_k w_kji, so nonlinear_apply = N * alpha.
SparseMatrix nonlinear_matrix(const TriTensor &t, const Vector &rho);

} // namespace lodgp

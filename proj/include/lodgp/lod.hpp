#pragma once

#include "lodgp/common.hpp"
#include "lodgp/fem.hpp"
#include "lodgp/mesh.hpp"
#include "lodgp/tritensor.hpp"

#include <memory>
#include <optional>
#include <string>

namespace lodgp
{

enum class FormKind { canonical, potential_adapted };

/// Bilinear form a(u, v) = diffusion_factor (grad u, grad v) + (V u, v)
/// used to build the correctors. The potential term is present only for the
/// potential-adapted kind.
struct BilinearFormChoice
{
   FormKind kind = FormKind::canonical;
   std::optional<ScalarField> potential;
   double diffusion_factor = 1.0;
   int potential_degree = 4;     // quadrature degree of the V-weighted mass
   std::string label = "canonical";

   static BilinearFormChoice canonical();
   static BilinearFormChoice potential_adapted(ScalarField V, std::string label,
                                               double diffusion = 0.5);

   ElementMatrix element_matrix(const SimplicialMesh &mesh, int s) const;
};

/// Form matrix on the interior dofs of a mesh.
SparseMatrix assemble_form(const SimplicialMesh &mesh, const BilinearFormChoice &form);

struct LodTimings
{
   double basis_s = 0.0;
   double omega_s = 0.0;
};

/// LOD space on a mesh pair. Rows of Phi are the basis functions in fine
/// interior-dof coordinates.
struct LodSpace
{
   std::shared_ptr<const MeshPair> pair;
   int ell = 0;
   BilinearFormChoice form;

   SparseMatrix P;
   SparseMatrix Q;
   SparseMatrix Phi;

   SparseMatrix fine_stiffness;
   SparseMatrix fine_mass;
   SparseMatrix fine_form;

   SparseMatrix A_lod;       // Phi A_fine Phi^T
   SparseMatrix M_lod;       // Phi M_fine Phi^T
   SparseMatrix Vmass_lod;   // form potential; zero matrix for the canonical form
   SparseMatrix form_lod;    // Phi (form matrix) Phi^T

   TriTensor omega;
   LodTimings timings;

   int num_dofs() const { return static_cast<int>(Phi.rows()); }
   const SimplicialMesh &coarse() const { return pair->coarse; }
   const SimplicialMesh &fine() const { return pair->fine; }
};

/// Patch corrector solver. Holds the fine form matrix and the constraint
/// matrix P M_fine; reusable across elements and thread safe.
class CorrectorSolver
{
public:
   CorrectorSolver(const MeshPair &pair, const BilinearFormChoice &form);
   CorrectorSolver(const MeshPair &pair, const BilinearFormChoice &form, SparseMatrix fine_form,
                   SparseMatrix P, const SparseMatrix &fine_mass);

   /// Sparse fine-dof vector (sorted indices).
   struct Result
   {
      std::vector<int> index;
      std::vector<double> value;
   };

   /// Correctors Q_K v for coarse functions v given by their values at the
   /// d+1 vertices of K, all sharing one patch factorization.
   std::vector<Result> solve(int K, int ell, const std::vector<std::array<double, 4>> &vertex_values) const;

   const SparseMatrix &fine_form() const { return fine_form_; }
   const SparseMatrix &interpolation() const { return P_; }

private:
   const MeshPair &pair_;
   BilinearFormChoice form_;
   SparseMatrix fine_form_;
   SparseMatrix P_;
   SparseMatrix PM_;
};

/// Element corrector Q_{K,ell} v_H on the fine interior dofs, where v_H is
/// given by its coarse interior-dof coefficients.
Vector solve_corrector(const MeshPair &pair, const BilinearFormChoice &form, int K, int ell,
                       const Vector &v_H);

struct LodBuildOptions
{
   bool build_omega = true;
};

LodSpace build_lod_space(std::shared_ptr<const MeshPair> pair, const BilinearFormChoice &form,
                         int ell, const QuadratureRule &tensor_rule,
                         const LodBuildOptions &options = {});

/// Fine stiffness, mass and form matrices of L.pair and L.form.
void fill_fine_matrices(LodSpace &L);
/// Galerkin matrices from L.Phi and the fine matrices.
void fill_lod_matrices(LodSpace &L);

/// Phi X Phi^T, symmetrized.
SparseMatrix galerkin_matrix(const SparseMatrix &Phi, const SparseMatrix &X);

/// Form-orthogonal projection of a fine-dof function onto the LOD space.
Vector project_a(const LodSpace &lod, const Vector &u_fine);
CVector project_a(const LodSpace &lod, const CVector &u_fine);

/// L2 projection of a fine-dof function onto the LOD space.
Vector project_l2(const LodSpace &lod, const Vector &u_fine);
CVector project_l2(const LodSpace &lod, const CVector &u_fine);

/// Fine-dof values of sum_i alpha_i phi_i.
Vector to_fine(const LodSpace &lod, const Vector &alpha);
CVector to_fine(const LodSpace &lod, const CVector &alpha);

} // namespace lodgp

#pragma once

#include "lodgp/common.hpp"
#include "lodgp/lod.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <optional>

namespace lodgp
{

using MassFactor = Eigen::SimplicialLLT<Eigen::SparseMatrix<double, Eigen::ColMajor, int>>;

/// Gross-Pitaevskii problem posed in an LOD space:
/// E(v) = kinetic |grad v|^2 + V |v|^2 + beta/2 |v|^2 P(|v|^2), integrated.
/// The trapping potential may differ from the one used to build the space.
struct GpeProblem
{
   std::shared_ptr<const LodSpace> lod;
   double beta = 0.0;
   double kinetic = 0.5;
   std::optional<ScalarField> potential;
   int potential_degree = 4;
   SparseMatrix Vmass_lod;
   std::shared_ptr<const MassFactor> mass_factor;

   int num_dofs() const { return lod->num_dofs(); }
};

GpeProblem make_problem(std::shared_ptr<const LodSpace> lod, double beta,
                        std::optional<ScalarField> potential, double kinetic = 0.5,
                        int potential_degree = 4);

/// rho = M_lod^{-1} density_rhs(omega, alpha): coefficients of P(|v|^2).
Vector projected_density(const GpeProblem &p, const Vector &alpha);
Vector projected_density(const GpeProblem &p, const CVector &alpha);

/// kinetic a^H A a + a^H V a.
double quadratic_energy(const GpeProblem &p, const Vector &alpha);
double quadratic_energy(const GpeProblem &p, const CVector &alpha);

double modified_energy(const GpeProblem &p, const Vector &alpha);
double modified_energy(const GpeProblem &p, const CVector &alpha);

/// Eigenvalue with the projected quartic term.
double eigenvalue(const GpeProblem &p, const Vector &alpha);

/// Energy and eigenvalue with the exact quartic term int |v|^4, integrated on
/// the fine mesh.
double exact_form_energy(const GpeProblem &p, const Vector &alpha);
double exact_form_eigenvalue(const GpeProblem &p, const Vector &alpha);
double quartic_integral(const GpeProblem &p, const CVector &alpha);

/// S_k = kinetic A + V + beta N(rho_k).
SparseMatrix linearized_operator(const GpeProblem &p, const Vector &alpha_k);
Vector linearized_solve(const GpeProblem &p, const Vector &alpha_k, const Vector &rhs);

struct GsState
{
   Vector alpha;
   double energy = 0.0;
   double eigenvalue = 0.0;
   int iteration = 0;
   double last_theta = 0.0;
};

struct StepResult
{
   GsState state;
   bool stagnated = false;
};

struct LineSearchResult
{
   double theta = 1.0;
   double energy = 0.0;
   Vector alpha;          // normalized iterate at theta
};

/// Golden-section minimization of theta -> E(normalize((1-theta) a + theta gamma d))
/// on [1e-3, 2 - 1e-3].
LineSearchResult line_search_theta(const GpeProblem &p, const Vector &alpha, double gamma,
                                   const Vector &d);

StepResult iteration_step(const GpeProblem &p, const GsState &state);

struct GsOptions
{
   double tol_energy = 1e-10;
   int max_iters = 500;
};

struct GsResult
{
   GsState state;
   std::vector<double> energy_trace;   // energy_trace[0] is the initial energy
   std::vector<double> theta_trace;
   std::vector<double> normalization_error;
   bool stagnated = false;
};

/// Normalized nodal Gaussian centred in the box.
Vector default_initial_guess(const GpeProblem &p);

Vector normalize(const GpeProblem &p, const Vector &alpha);

GsResult solve_ground_state(const GpeProblem &p, const Vector &alpha0, const GsOptions &options = {});

} // namespace lodgp

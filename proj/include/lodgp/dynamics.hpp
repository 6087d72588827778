#pragma once

#include "lodgp/common.hpp"
#include "lodgp/groundstate.hpp"

#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <vector>

namespace lodgp
{

using CMatrix = Eigen::MatrixXcd;
using ComplexSparse = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

/// Collocation data of the cG(q) scheme on the unit interval.
///
/// L_i (i = 1..q) are the Lagrange polynomials on the Gauss nodes, Lhat_j
/// (j = 0..q) those on {0, s_1, ..., s_q}. Sigma diagonalizes M^{-1} W:
/// Sigma M^{-1} W Sigma^{-1} = diag(gamma).
struct CgTables
{
   int q = 0;
   Vector s, w;          // q-point Gauss rule
   Vector st, wt;        // 2q-point Gauss rule
   DenseMatrix m;        // q x (q+1), m(i, j) = int Lhat_j' L_i
   CMatrix Sigma;
   CMatrix SigmaInv;
   CVector gamma;
   CVector A;            // row sums of Sigma
   CMatrix B;            // q x 2q
   Vector C0;            // Lhat_0 at the 2q nodes
   CMatrix C;            // q x 2q
   Vector Lhat_at_one;   // q + 1 entries
};

CgTables build_cg_tables(int q);

/// Value of the i-th Lagrange polynomial on the given nodes at s.
double lagrange(const Vector &nodes, int i, double s);

/// Factorized stage operators M_lod + i tau gamma_i S with S = kinetic A_lod + V.
struct StageFactorization
{
   double tau = 0.0;
   SparseMatrix S;
   std::vector<std::shared_ptr<Eigen::SparseLU<ComplexSparse>>> lu;
};

StageFactorization build_stage_factorization(const GpeProblem &p, const CgTables &tables, double tau);

/// Load vector (P(|u|^2) u, phi_i) of the modified nonlinearity.
CVector g_modified(const GpeProblem &p, const CVector &alpha);

struct StepOutput
{
   CVector u;
   std::vector<CVector> stages;   // transformed stage values U^i
   int iterations = 0;
   double last_increment = 0.0;
};

struct FixedPointOptions
{
   double tol = 1e-12;
   int max_iters = 200;
};

/// One cG(q) step from u_n. `guess` holds the transformed stages of the
/// previous step; when empty the constant extension is used.
StepOutput time_step(const CgTables &tables, const StageFactorization &fact, const GpeProblem &p,
                     const CVector &u_n, const std::vector<CVector> &guess,
                     const FixedPointOptions &options = {});

struct Trajectory
{
   std::vector<double> times;
   std::vector<CVector> states;
   std::vector<double> energy_lod;
   std::vector<double> energy_exactform;
   std::vector<double> mass;
   std::vector<int> fp_iterations;   // per step, not per snapshot
   bool diverged = false;
   double last_increment = 0.0;
   std::string failure;

   const CVector &final_state() const { return states.back(); }
   double final_time() const { return times.back(); }
};

struct IntegrateOptions
{
   FixedPointOptions fixed_point;
   int snapshot_stride = 1;
   bool exact_form_energy = true;
};

/// Integrates from LOD coefficients alpha0 up to T with uniform step tau.
/// A diverging fixed point stops the run and marks the trajectory.
Trajectory integrate(const GpeProblem &p, const CgTables &tables, const CVector &alpha0, double T,
                     double tau, const IntegrateOptions &options = {});

/// Same, starting from fine-dof values projected with project_a.
Trajectory integrate_fine(const GpeProblem &p, const CgTables &tables, const CVector &u0_fine,
                          double T, double tau, const IntegrateOptions &options = {});

double modified_energy_complex(const GpeProblem &p, const CVector &alpha);
double exact_form_energy_complex(const GpeProblem &p, const CVector &alpha);
double mass(const GpeProblem &p, const CVector &alpha);

using ExactValue = std::function<Complex(const Point &, double)>;
using ExactGradient = std::function<std::array<Complex, 3>(const Point &, double)>;

struct RelativeErrors
{
   double rel_l2 = 0.0;
   double rel_h1 = 0.0;
};

/// Relative L2 and H1-seminorm errors of sum_i alpha_i phi_i against an
/// exact solution at time t, integrated on the fine mesh.
RelativeErrors relative_errors(const LodSpace &lod, const CVector &alpha, double t,
                               const ExactValue &u, const ExactGradient &grad_u, int degree = 9);

/// Least-squares slope of log(err) against log(tau).
double least_squares_order(const std::vector<double> &tau, const std::vector<double> &err);

} // namespace lodgp

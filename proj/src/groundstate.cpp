#include "lodgp/groundstate.hpp"

#include <cmath>
#include <limits>

namespace lodgp
{

namespace
{

using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

Vector mass_solve(const GpeProblem &p, const Vector &b)
{
   return p.mass_factor->solve(b);
}

double quartic_term(const GpeProblem &p, const Vector &b)
{
   return b.dot(mass_solve(p, b));
}

} // namespace

GpeProblem make_problem(std::shared_ptr<const LodSpace> lod, double beta,
                        std::optional<ScalarField> potential, double kinetic, int potential_degree)
{
   GpeProblem p;
   p.lod = lod;
   p.beta = beta;
   p.kinetic = kinetic;
   p.potential = std::move(potential);
   p.potential_degree = potential_degree;
   const int n = lod->num_dofs();
   if (n == 0) { throw NoDofError("LOD space has no degrees of freedom"); }
   if (p.potential)
   {
      p.Vmass_lod = galerkin_matrix(
         lod->Phi, assemble_weighted_mass(lod->fine(), *p.potential,
                                          quadrature_rule(lod->fine().dim, potential_degree)));
   }
   else
   {
      p.Vmass_lod = SparseMatrix(n, n);
   }
   auto factor = std::make_shared<MassFactor>(ColSparse(lod->M_lod));
   if (factor->info() != Eigen::Success) { throw SolverError("LOD mass matrix is not positive definite"); }
   p.mass_factor = factor;
   return p;
}

Vector projected_density(const GpeProblem &p, const Vector &alpha)
{
   return mass_solve(p, density_rhs(p.lod->omega, alpha));
}

Vector projected_density(const GpeProblem &p, const CVector &alpha)
{
   return mass_solve(p, density_rhs(p.lod->omega, alpha));
}

double quadratic_energy(const GpeProblem &p, const Vector &alpha)
{
   return p.kinetic * alpha.dot(p.lod->A_lod * alpha) + alpha.dot(p.Vmass_lod * alpha);
}

double quadratic_energy(const GpeProblem &p, const CVector &alpha)
{
   const CVector Aa = p.lod->A_lod * alpha;
   const CVector Va = p.Vmass_lod * alpha;
   return p.kinetic * alpha.dot(Aa).real() + alpha.dot(Va).real();
}

double modified_energy(const GpeProblem &p, const Vector &alpha)
{
   const double q = p.beta != 0.0 ? quartic_term(p, density_rhs(p.lod->omega, alpha)) : 0.0;
   return quadratic_energy(p, alpha) + 0.5 * p.beta * q;
}

double modified_energy(const GpeProblem &p, const CVector &alpha)
{
   const double q = p.beta != 0.0 ? quartic_term(p, density_rhs(p.lod->omega, alpha)) : 0.0;
   return quadratic_energy(p, alpha) + 0.5 * p.beta * q;
}

double eigenvalue(const GpeProblem &p, const Vector &alpha)
{
   const double q = p.beta != 0.0 ? quartic_term(p, density_rhs(p.lod->omega, alpha)) : 0.0;
   return quadratic_energy(p, alpha) + p.beta * q;
}

double quartic_integral(const GpeProblem &p, const CVector &alpha)
{
   const SimplicialMesh &F = p.lod->fine();
   const CVector u = to_fine(*p.lod, alpha);
   const QuadratureRule rule = quadrature_rule(F.dim, 4);
   const double dfact = F.dim == 1 ? 1.0 : (F.dim == 2 ? 2.0 : 6.0);
   double total = 0.0;
   for (int t = 0; t < F.num_simplices(); ++t)
   {
      Complex vals[4];
      for (int a = 0; a <= F.dim; ++a)
      {
         const int d = F.dof_of_vertex[F.simplices[t][a]];
         vals[a] = d >= 0 ? u(d) : Complex(0.0);
      }
      double local = 0.0;
      for (int q = 0; q < rule.size(); ++q)
      {
         Complex v = 0.0;
         for (int a = 0; a <= F.dim; ++a) { v += rule.points[q][a] * vals[a]; }
         const double m = std::norm(v);
         local += rule.weights[q] * m * m;
      }
      total += local * F.volume(t) * dfact;
   }
   return total;
}

double exact_form_energy(const GpeProblem &p, const Vector &alpha)
{
   return quadratic_energy(p, alpha) + 0.5 * p.beta * quartic_integral(p, alpha.cast<Complex>());
}

double exact_form_eigenvalue(const GpeProblem &p, const Vector &alpha)
{
   return quadratic_energy(p, alpha) + p.beta * quartic_integral(p, alpha.cast<Complex>());
}

SparseMatrix linearized_operator(const GpeProblem &p, const Vector &alpha_k)
{
   SparseMatrix S = p.kinetic * p.lod->A_lod + p.Vmass_lod;
   if (p.beta != 0.0)
   {
      const SparseMatrix N = nonlinear_matrix(p.lod->omega, projected_density(p, alpha_k));
      S += p.beta * N;
   }
   S.makeCompressed();
   return S;
}

Vector linearized_solve(const GpeProblem &p, const Vector &alpha_k, const Vector &rhs)
{
   require_length(static_cast<std::size_t>(rhs.size()), static_cast<std::size_t>(p.num_dofs()), "linearized_solve");
   const SparseMatrix S = linearized_operator(p, alpha_k);
   Eigen::SimplicialLLT<ColSparse> llt{ColSparse(S)};
   if (llt.info() != Eigen::Success)
   {
      throw LinearizationError("linearized operator is not positive definite");
   }
   const Vector x = llt.solve(rhs);
   const double res = (S * x - rhs).norm();
   if (!(res <= 1e-11 * rhs.norm() + 1e-300))
   {
      // One step of iterative refinement before giving up.
      const Vector x2 = x + llt.solve(Vector(rhs - S * x));
      if ((S * x2 - rhs).norm() <= 1e-11 * rhs.norm()) { return x2; }
      throw LinearizationError("linearized solve residual above tolerance");
   }
   return x;
}

Vector normalize(const GpeProblem &p, const Vector &alpha)
{
   const double n2 = alpha.dot(p.lod->M_lod * alpha);
   if (!(n2 > 0.0)) { throw SolverError("cannot normalize a zero vector"); }
   return alpha / std::sqrt(n2);
}

LineSearchResult line_search_theta(const GpeProblem &p, const Vector &alpha, double gamma,
                                   const Vector &d)
{
   const Vector gd = gamma * d;
   LineSearchResult best;
   best.energy = std::numeric_limits<double>::infinity();
   auto eval = [&](double theta)
   {
      const Vector z = normalize(p, Vector((1.0 - theta) * alpha + theta * gd));
      const double e = modified_energy(p, z);
      if (e < best.energy)
      {
         best.energy = e;
         best.theta = theta;
         best.alpha = z;
      }
      return e;
   };

   const double e1 = eval(1.0);
   const double theta_min = 1e-3;
   double a = theta_min, b = 2.0 - theta_min;
   eval(a);
   eval(b);
   const double r = (std::sqrt(5.0) - 1.0) / 2.0;
   double c = b - r * (b - a), dd = a + r * (b - a);
   double fc = eval(c), fd = eval(dd);
   while (b - a > 1e-4)
   {
      if (fc < fd)
      {
         b = dd;
         dd = c;
         fd = fc;
         c = b - r * (b - a);
         fc = eval(c);
      }
      else
      {
         a = c;
         c = dd;
         fc = fd;
         dd = a + r * (b - a);
         fd = eval(dd);
      }
   }
   if (!(best.energy < e1))
   {
      // theta = 1 is at least as good as every sample.
      best.theta = 1.0;
      best.energy = e1;
      best.alpha = normalize(p, Vector(gd));
   }
   return best;
}

StepResult iteration_step(const GpeProblem &p, const GsState &state)
{
   const Vector Ma = p.lod->M_lod * state.alpha;
   const Vector d = linearized_solve(p, state.alpha, Ma);
   const double gamma = 1.0 / Ma.dot(d);
   if (!(gamma > 0.0)) { throw LinearizationError("non-positive inverse-iteration scaling"); }
   const LineSearchResult ls = line_search_theta(p, state.alpha, gamma, d);

   StepResult out;
   if (ls.energy > state.energy + 1e-13)
   {
      out.state = state;
      out.stagnated = true;
      return out;
   }
   out.state.alpha = ls.alpha;
   out.state.energy = ls.energy;
   out.state.eigenvalue = eigenvalue(p, ls.alpha);
   out.state.iteration = state.iteration + 1;
   out.state.last_theta = ls.theta;
   return out;
}

Vector default_initial_guess(const GpeProblem &p)
{
   const SimplicialMesh &C = p.lod->coarse();
   Point centre{0.0, 0.0, 0.0};
   for (int a = 0; a < C.dim; ++a) { centre[a] = 0.5 * (C.lower[a] + C.upper[a]); }
   const Vector g = nodal_interpolant(C, [&](const Point &x)
   {
      double r2 = 0.0;
      for (int a = 0; a < C.dim; ++a) { r2 += (x[a] - centre[a]) * (x[a] - centre[a]); }
      return std::exp(-0.5 * r2);
   });
   return normalize(p, g);
}

GsResult solve_ground_state(const GpeProblem &p, const Vector &alpha0, const GsOptions &options)
{
   if (p.beta < 0.0) { throw ConfigError("ground states require beta >= 0"); }
   if (!(options.tol_energy > 0.0)) { throw ConfigError("energy tolerance must be positive"); }
   require_length(static_cast<std::size_t>(alpha0.size()), static_cast<std::size_t>(p.num_dofs()), "initial guess");
   GsResult res;
   GsState s;
   s.alpha = normalize(p, alpha0);
   s.energy = modified_energy(p, s.alpha);
   s.eigenvalue = eigenvalue(p, s.alpha);
   res.energy_trace.push_back(s.energy);
   for (int k = 0; k < options.max_iters; ++k)
   {
      const StepResult step = iteration_step(p, s);
      if (step.stagnated)
      {
         res.stagnated = true;
         break;
      }
      const double change = std::abs(step.state.energy - s.energy);
      s = step.state;
      res.energy_trace.push_back(s.energy);
      res.theta_trace.push_back(s.last_theta);
      res.normalization_error.push_back(std::abs(s.alpha.dot(p.lod->M_lod * s.alpha) - 1.0));
      if (change < options.tol_energy)
      {
         if (s.alpha.sum() < 0.0) { s.alpha = -s.alpha; }
         res.state = s;
         return res;
      }
   }
   if (!res.stagnated)
   {
      throw NonConvergenceError("ground-state iteration did not converge in " +
                                   std::to_string(options.max_iters) + " iterations",
                                res.energy_trace);
   }
   if (s.alpha.sum() < 0.0) { s.alpha = -s.alpha; }
   res.state = s;
   return res;
}

} // namespace lodgp

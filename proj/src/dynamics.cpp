#include "lodgp/dynamics.hpp"

#include "lodgp/fem.hpp"
#include "lodgp/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace lodgp
{

namespace
{

using namespace std::complex_literals;

Vector nodes_of(const QuadratureRule &rule)
{
   Vector s(rule.size());
   for (int i = 0; i < rule.size(); ++i) { s(i) = rule.points[i][1]; }
   return s;
}

Vector weights_of(const QuadratureRule &rule)
{
   Vector w(rule.size());
   for (int i = 0; i < rule.size(); ++i) { w(i) = rule.weights[i]; }
   return w;
}

double lagrange_derivative(const Vector &nodes, int i, double s)
{
   double total = 0.0;
   for (int k = 0; k < nodes.size(); ++k)
   {
      if (k == i) { continue; }
      double term = 1.0 / (nodes(i) - nodes(k));
      for (int m = 0; m < nodes.size(); ++m)
      {
         if (m == i || m == k) { continue; }
         term *= (s - nodes(m)) / (nodes(i) - nodes(m));
      }
      total += term;
   }
   return total;
}

double relative_increment(const CVector &next, const CVector &prev)
{
   const double nn = next.norm();
   const double d = (next - prev).norm();
   return nn > 0.0 ? d / nn : d;
}

} // namespace

double lagrange(const Vector &nodes, int i, double s)
{
   double v = 1.0;
   for (int k = 0; k < nodes.size(); ++k)
   {
      if (k != i) { v *= (s - nodes(k)) / (nodes(i) - nodes(k)); }
   }
   return v;
}

CgTables build_cg_tables(int q)
{
   if (q < 1 || q > 4) { throw ConfigError("cG degree q must lie in 1..4"); }
   CgTables t;
   t.q = q;
   const QuadratureRule gauss = quadrature_rule(1, 2 * q - 1);
   const QuadratureRule gauss2 = quadrature_rule(1, 4 * q - 1);
   t.s = nodes_of(gauss);
   t.w = weights_of(gauss);
   t.st = nodes_of(gauss2);
   t.wt = weights_of(gauss2);

   Vector shat(q + 1);
   shat(0) = 0.0;
   shat.tail(q) = t.s;

   t.m = DenseMatrix::Zero(q, q + 1);
   for (int i = 0; i < q; ++i)
   {
      for (int j = 0; j <= q; ++j)
      {
         double acc = 0.0;
         for (int nu = 0; nu < 2 * q; ++nu)
         {
            acc += t.wt(nu) * lagrange_derivative(shat, j, t.st(nu)) * lagrange(t.s, i, t.st(nu));
         }
         t.m(i, j) = acc;
      }
   }

   const DenseMatrix Mq = t.m.rightCols(q);
   const DenseMatrix Minv = Mq.inverse();
   const DenseMatrix rk = Minv * t.w.asDiagonal();
   Eigen::EigenSolver<DenseMatrix> es(rk);
   if (es.info() != Eigen::Success) { throw SolverError("cannot diagonalize the collocation matrix"); }
   const CMatrix V = es.eigenvectors();
   t.gamma = es.eigenvalues();
   t.Sigma = V.inverse();
   t.SigmaInv = V;
   const CMatrix check = t.Sigma * rk.cast<Complex>() * t.SigmaInv - CMatrix(t.gamma.asDiagonal());
   if (!(check.cwiseAbs().maxCoeff() < 1e-12))
   {
      throw SolverError("collocation matrix diagonalization is inaccurate");
   }

   t.A = t.Sigma.rowwise().sum();
   const CMatrix SM = t.Sigma * Minv.cast<Complex>();
   t.B = CMatrix::Zero(q, 2 * q);
   t.C = CMatrix::Zero(q, 2 * q);
   t.C0 = Vector(2 * q);
   for (int nu = 0; nu < 2 * q; ++nu)
   {
      const double x = t.st(nu);
      t.C0(nu) = lagrange(shat, 0, x);
      for (int i = 0; i < q; ++i)
      {
         Complex b = 0.0, c = 0.0;
         for (int j = 0; j < q; ++j)
         {
            b += SM(i, j) * lagrange(t.s, j, x);
            c += lagrange(shat, j + 1, x) * t.SigmaInv(j, i);
         }
         t.B(i, nu) = t.wt(nu) * b;
         t.C(i, nu) = c;
      }
   }
   t.Lhat_at_one = Vector(q + 1);
   for (int j = 0; j <= q; ++j) { t.Lhat_at_one(j) = lagrange(shat, j, 1.0); }
   return t;
}

StageFactorization build_stage_factorization(const GpeProblem &p, const CgTables &tables, double tau)
{
   if (!(tau != 0.0) || !std::isfinite(tau)) { throw ConfigError("time step must be non-zero and finite"); }
   StageFactorization f;
   f.tau = tau;
   f.S = p.kinetic * p.lod->A_lod + p.Vmass_lod;
   f.S.makeCompressed();
   const ComplexSparse M = p.lod->M_lod.cast<Complex>();
   const ComplexSparse S = f.S.cast<Complex>();
   const int n = p.num_dofs();
   CVector probe(n);
   for (int i = 0; i < n; ++i) { probe(i) = Complex(1.0 + 0.01 * (i % 7), 0.5 - 0.003 * (i % 11)); }
   for (int i = 0; i < tables.q; ++i)
   {
      ComplexSparse op = M + (1i * tau * tables.gamma(i)) * S;
      op.makeCompressed();
      auto lu = std::make_shared<Eigen::SparseLU<ComplexSparse>>();
      lu->analyzePattern(op);
      lu->factorize(op);
      if (lu->info() != Eigen::Success) { throw SolverError("stage operator factorization failed"); }
      const CVector x = lu->solve(probe);
      if (!((op * x - probe).norm() < 1e-11 * probe.norm()))
      {
         throw SolverError("stage operator probe residual above tolerance");
      }
      f.lu.push_back(std::move(lu));
   }
   return f;
}

CVector g_modified(const GpeProblem &p, const CVector &alpha)
{
   require_length(static_cast<std::size_t>(alpha.size()), static_cast<std::size_t>(p.num_dofs()), "g_modified");
   return nonlinear_apply(p.lod->omega, projected_density(p, alpha), alpha);
}

StepOutput time_step(const CgTables &tables, const StageFactorization &fact, const GpeProblem &p,
                     const CVector &u_n, const std::vector<CVector> &guess,
                     const FixedPointOptions &options)
{
   const int q = tables.q;
   const int n = p.num_dofs();
   require_length(static_cast<std::size_t>(u_n.size()), static_cast<std::size_t>(n), "time_step");
   if (!(options.tol > 0.0)) { throw ConfigError("fixed-point tolerance must be positive"); }
   const double tau = fact.tau;
   const CVector Mu = p.lod->M_lod * u_n;

   std::vector<CVector> U(q);
   for (int i = 0; i < q; ++i)
   {
      U[i] = static_cast<int>(guess.size()) == q ? guess[i] : CVector(tables.A(i) * u_n);
   }

   std::vector<CVector> G(2 * q);
   std::vector<CVector> next(q);
   StepOutput out;
   bool converged = false;
   for (int k = 1; k <= options.max_iters; ++k)
   {
      if (p.beta != 0.0)
      {
         parallel_for(static_cast<std::size_t>(2 * q), [&](std::size_t nu)
         {
            CVector y = tables.C0(nu) * u_n;
            for (int j = 0; j < q; ++j) { y += tables.C(j, nu) * U[j]; }
            G[nu] = g_modified(p, y);
         });
      }
      parallel_for(static_cast<std::size_t>(q), [&](std::size_t i)
      {
         CVector rhs = tables.A(i) * Mu;
         if (p.beta != 0.0)
         {
            for (int nu = 0; nu < 2 * q; ++nu) { rhs -= (1i * tau * p.beta * tables.B(i, nu)) * G[nu]; }
         }
         next[i] = fact.lu[i]->solve(rhs);
      });
      double inc = 0.0;
      for (int i = 0; i < q; ++i) { inc = std::max(inc, relative_increment(next[i], U[i])); }
      U.swap(next);
      out.iterations = k;
      out.last_increment = inc;
      if (!std::isfinite(inc))
      {
         throw FixedPointDivergenceError("fixed-point iteration produced non-finite values", inc);
      }
      if (p.beta == 0.0 || inc < options.tol)
      {
         converged = true;
         break;
      }
   }
   if (!converged)
   {
      throw FixedPointDivergenceError("fixed-point iteration did not converge in " +
                                         std::to_string(options.max_iters) + " sweeps",
                                      out.last_increment);
   }

   out.u = tables.Lhat_at_one(0) * u_n;
   for (int j = 0; j < q; ++j)
   {
      CVector uj = CVector::Zero(n);
      for (int i = 0; i < q; ++i) { uj += tables.SigmaInv(j, i) * U[i]; }
      out.u += tables.Lhat_at_one(j + 1) * uj;
   }
   if (!out.u.allFinite())
   {
      throw FixedPointDivergenceError("time step produced non-finite values", out.last_increment);
   }
   out.stages = std::move(U);
   return out;
}

double modified_energy_complex(const GpeProblem &p, const CVector &alpha)
{
   return modified_energy(p, alpha);
}

double exact_form_energy_complex(const GpeProblem &p, const CVector &alpha)
{
   return quadratic_energy(p, alpha) + 0.5 * p.beta * quartic_integral(p, alpha);
}

double mass(const GpeProblem &p, const CVector &alpha)
{
   return alpha.dot(p.lod->M_lod * alpha).real();
}

Trajectory integrate(const GpeProblem &p, const CgTables &tables, const CVector &alpha0, double T,
                     double tau, const IntegrateOptions &options)
{
   if (!(T > 0.0) || !(tau > 0.0)) { throw ConfigError("T and tau must be positive"); }
   const long long N = std::llround(T / tau);
   if (N < 1 || std::abs(static_cast<double>(N) * tau - T) > 1e-10 * T)
   {
      throw ConfigError("tau must divide T");
   }
   if (options.snapshot_stride < 1) { throw ConfigError("snapshot stride must be positive"); }
   require_length(static_cast<std::size_t>(alpha0.size()), static_cast<std::size_t>(p.num_dofs()), "integrate");

   Trajectory traj;
   auto record = [&](double t, const CVector &u)
   {
      traj.times.push_back(t);
      traj.states.push_back(u);
      traj.energy_lod.push_back(modified_energy(p, u));
      traj.energy_exactform.push_back(options.exact_form_energy ? exact_form_energy_complex(p, u) : 0.0);
      traj.mass.push_back(mass(p, u));
   };

   const StageFactorization fact = build_stage_factorization(p, tables, tau);
   CVector u = alpha0;
   record(0.0, u);
   std::vector<CVector> stages;
   for (long long k = 1; k <= N; ++k)
   {
      StepOutput step;
      try
      {
         step = time_step(tables, fact, p, u, stages, options.fixed_point);
      }
      catch (const FixedPointDivergenceError &e)
      {
         traj.diverged = true;
         traj.last_increment = e.last_increment;
         traj.failure = e.what();
         return traj;
      }
      u = std::move(step.u);
      stages = std::move(step.stages);
      traj.fp_iterations.push_back(step.iterations);
      if (k % options.snapshot_stride == 0 || k == N) { record(static_cast<double>(k) * tau, u); }
   }
   return traj;
}

Trajectory integrate_fine(const GpeProblem &p, const CgTables &tables, const CVector &u0_fine,
                          double T, double tau, const IntegrateOptions &options)
{
   return integrate(p, tables, project_a(*p.lod, u0_fine), T, tau, options);
}

RelativeErrors relative_errors(const LodSpace &lod, const CVector &alpha, double t,
                               const ExactValue &u, const ExactGradient &grad_u, int degree)
{
   const SimplicialMesh &F = lod.fine();
   const CVector uh = to_fine(lod, alpha);
   const QuadratureRule rule = quadrature_rule(F.dim, std::min(degree, max_rule_degree(F.dim)));
   const double dfact = F.dim == 1 ? 1.0 : (F.dim == 2 ? 2.0 : 6.0);
   double e0 = 0.0, n0 = 0.0, e1 = 0.0, n1 = 0.0;
   for (int s = 0; s < F.num_simplices(); ++s)
   {
      Complex vals[4];
      for (int a = 0; a <= F.dim; ++a)
      {
         const int d = F.dof_of_vertex[F.simplices[s][a]];
         vals[a] = d >= 0 ? uh(d) : Complex(0.0);
      }
      const auto G = barycentric_gradients(F, s);
      std::array<Complex, 3> gh{};
      for (int c = 0; c < F.dim; ++c)
      {
         for (int a = 0; a <= F.dim; ++a) { gh[c] += vals[a] * G(a, c); }
      }
      const double scale = F.volume(s) * dfact;
      for (int k = 0; k < rule.size(); ++k)
      {
         const Point x = map_to_physical(F, s, rule.points[k]);
         Complex v = 0.0;
         for (int a = 0; a <= F.dim; ++a) { v += rule.points[k][a] * vals[a]; }
         const Complex ue = u(x, t);
         const auto ge = grad_u(x, t);
         const double wq = rule.weights[k] * scale;
         e0 += wq * std::norm(ue - v);
         n0 += wq * std::norm(ue);
         for (int c = 0; c < F.dim; ++c)
         {
            e1 += wq * std::norm(ge[c] - gh[c]);
            n1 += wq * std::norm(ge[c]);
         }
      }
   }
   RelativeErrors r;
   r.rel_l2 = n0 > 0.0 ? std::sqrt(e0 / n0) : std::sqrt(e0);
   r.rel_h1 = n1 > 0.0 ? std::sqrt(e1 / n1) : std::sqrt(e1);
   return r;
}

double least_squares_order(const std::vector<double> &tau, const std::vector<double> &err)
{
   require_length(err.size(), tau.size(), "least_squares_order");
   if (tau.size() < 2) { throw ConfigError("order fit needs at least two points"); }
   const std::size_t n = tau.size();
   double mx = 0.0, my = 0.0;
   for (std::size_t i = 0; i < n; ++i)
   {
      mx += std::log(tau[i]);
      my += std::log(err[i]);
   }
   mx /= static_cast<double>(n);
   my /= static_cast<double>(n);
   double sxy = 0.0, sxx = 0.0;
   for (std::size_t i = 0; i < n; ++i)
   {
      const double dx = std::log(tau[i]) - mx;
      sxy += dx * (std::log(err[i]) - my);
      sxx += dx * dx;
   }
   return sxy / sxx;
}

} // namespace lodgp

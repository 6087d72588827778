#include "lodgp/bench.hpp"

#include "lodgp/lod_cache.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace lodgp
{

namespace
{

using namespace std::complex_literals;

// exp(k x) scaled by exp(-6|x|); every exponent used stays non-positive.
struct ScaledExp
{
   double x, a;
   double operator()(double k) const { return std::exp(k * x - 6.0 * a); }
};

} // namespace

Complex exact_soliton(double x, double t)
{
   const ScaledExp E{x, std::abs(x)};
   const Complex p4 = std::exp(4.0i * t), p16 = std::exp(16.0i * t);
   const Complex num = 8.0 * p4 * (9.0 * E(-4) + 16.0 * E(4)) - 32.0 * p16 * (4.0 * E(-2) + 9.0 * E(2));
   const double den = -128.0 * std::cos(12.0 * t) * E(0) + 4.0 * E(-6) + 16.0 * E(6) + 81.0 * E(-2) + 64.0 * E(2);
   return num / den;
}

Complex exact_soliton_dx(double x, double t)
{
   const ScaledExp E{x, std::abs(x)};
   const Complex p4 = std::exp(4.0i * t), p16 = std::exp(16.0i * t);
   const Complex num = 8.0 * p4 * (9.0 * E(-4) + 16.0 * E(4)) - 32.0 * p16 * (4.0 * E(-2) + 9.0 * E(2));
   const Complex dnum = 8.0 * p4 * (-36.0 * E(-4) + 64.0 * E(4)) - 32.0 * p16 * (-8.0 * E(-2) + 18.0 * E(2));
   const double den = -128.0 * std::cos(12.0 * t) * E(0) + 4.0 * E(-6) + 16.0 * E(6) + 81.0 * E(-2) + 64.0 * E(2);
   const double dden = -24.0 * E(-6) + 96.0 * E(6) - 162.0 * E(-2) + 128.0 * E(2);
   return (dnum * den - num * dden) / (den * den);
}

double soliton_initial_value(double x)
{
   const ScaledExp E{x, std::abs(x)};
   const double num = 8.0 * (9.0 * E(-4) + 16.0 * E(4)) - 32.0 * (4.0 * E(-2) + 9.0 * E(2));
   const double den = -128.0 * E(0) + 4.0 * E(-6) + 16.0 * E(6) + 81.0 * E(-2) + 64.0 * E(2);
   return num / den;
}

std::vector<std::string> potential_names()
{
   return {"zero", "harmonic", "double_well", "indicator", "harmonic_plus_indicator", "lattice",
           "harmonic_plus_lattice"};
}

ScalarField potential_library(const std::string &name, const nlohmann::json &params)
{
   double scale = 1.0;
   if (params.is_object() && params.contains("scale")) { scale = params.at("scale").get<double>(); }
   auto harmonic = [](const Point &x) { return 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); };
   auto indicator = [](const Point &x) { return x[0] >= 0.0 ? 1.0 : 0.0; };
   auto lattice = [](const Point &x)
   {
      const long long s = static_cast<long long>(std::floor(x[0])) + static_cast<long long>(std::floor(x[1])) +
                          static_cast<long long>(std::floor(x[2]));
      return 2.0 * static_cast<double>(((s % 2) + 2) % 2);
   };

   ScalarField f;
   if (name == "zero")
   {
      f.evaluator = [](const Point &) { return 0.0; };
   }
   else if (name == "harmonic")
   {
      f.evaluator = [=](const Point &x) { return scale * harmonic(x); };
   }
   else if (name == "double_well")
   {
      f.evaluator = [=](const Point &x)
      {
         return scale * (0.5 * (x[0] * x[0] + x[1] * x[1]) + 4.0 * std::exp(-0.5 * x[0] * x[0]) +
                         4.0 * std::exp(-0.5 * x[1] * x[1]));
      };
   }
   else if (name == "indicator")
   {
      f.evaluator = [=](const Point &x) { return scale * indicator(x); };
      f.smoothness = Smoothness::discontinuous;
   }
   else if (name == "harmonic_plus_indicator")
   {
      f.evaluator = [=](const Point &x) { return scale * (harmonic(x) + indicator(x)); };
      f.smoothness = Smoothness::discontinuous;
   }
   else if (name == "lattice")
   {
      f.evaluator = [=](const Point &x) { return scale * lattice(x); };
      f.smoothness = Smoothness::discontinuous;
   }
   else if (name == "harmonic_plus_lattice")
   {
      f.evaluator = [=](const Point &x) { return scale * (harmonic(x) + lattice(x)); };
      f.smoothness = Smoothness::discontinuous;
   }
   else
   {
      throw ConfigError("unknown potential '" + name + "'");
   }
   return f;
}

namespace
{

void apply_preset(ExperimentConfig &c, const std::string &problem)
{
   c.problem = problem;
   auto box = [&](int dim, double lo, double hi)
   {
      c.dim = dim;
      c.lower = {lo, lo, lo};
      c.upper = {hi, hi, hi};
   };
   c.reference_energy.reset();
   if (problem == "double_well")
   {
      box(2, -6.0, 6.0);
      c.potential = "double_well";
      c.beta = 50.0;
      c.reference_energy = 7.0823112;
   }
   else if (problem == "discontinuous")
   {
      box(2, -6.0, 6.0);
      c.potential = "harmonic_plus_indicator";
      c.form = "potential";
      c.form_potential = "indicator";
      c.beta = 50.0;
      c.reference_energy = 3.341711792;
   }
   else if (problem == "harmonic1d")
   {
      box(1, -8.0, 8.0);
      c.potential = "harmonic";
      c.beta = 0.0;
      c.reference_energy = 0.5;
   }
   else if (problem == "harmonic2d")
   {
      box(2, -6.0, 6.0);
      c.potential = "harmonic";
      c.beta = 50.0;
      c.reference_energy = 2.896031852200792;
   }
   else if (problem == "harmonic3d")
   {
      box(3, -5.0, 5.0);
      c.potential = "harmonic";
      c.beta = 50.0;
      c.reference_energy = 2.3734292669786;
   }
   else if (problem == "soliton")
   {
      box(1, -20.0, 20.0);
      c.kind = ExperimentKind::evolve;
      c.potential = "zero";
      c.dyn_potential = "zero";
      c.dyn_kinetic = 1.0;
      c.dyn_beta = -2.0;
      c.H = {40.0 / 256.0};
      c.ell = {6};
      c.factor = 8;
   }
   else if (problem == "coupled3d")
   {
      box(3, -3.0, 3.0);
      c.kind = ExperimentKind::coupled;
      c.potential = "harmonic_plus_lattice";
      c.form = "potential";
      c.form_potential = "lattice";
      c.beta = 50.0;
      c.dyn_potential = "harmonic";
      c.dyn_kinetic = 1.0;
      c.dyn_beta = 50.0;
      c.H = {0.2};
      c.ell = {2};
      c.factor = 3;
      c.T = 10.0;
      c.tau = {10.0 / 128.0};
      c.reference_energy = 3.354636;
   }
   else if (problem != "custom")
   {
      throw ConfigError("unknown problem '" + problem + "'");
   }
}

std::string kind_name(ExperimentKind k)
{
   switch (k)
   {
   case ExperimentKind::groundstate: return "groundstate";
   case ExperimentKind::evolve: return "evolve";
   case ExperimentKind::coupled: return "coupled";
   case ExperimentKind::lodinfo: return "lodinfo";
   }
   return "groundstate";
}

ExperimentKind kind_from_name(const std::string &s)
{
   if (s == "groundstate") { return ExperimentKind::groundstate; }
   if (s == "evolve") { return ExperimentKind::evolve; }
   if (s == "coupled") { return ExperimentKind::coupled; }
   if (s == "lodinfo") { return ExperimentKind::lodinfo; }
   throw ConfigError("unknown experiment kind '" + s + "'");
}

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json &v)
{
   if (v.is_array()) { return v.get<std::vector<T>>(); }
   return {v.get<T>()};
}

std::string num(double v)
{
   char buf[40];
   std::snprintf(buf, sizeof buf, "%.17g", v);
   return buf;
}

std::string opt_num(const std::optional<double> &v) { return v ? num(*v) : std::string(); }

std::shared_ptr<const MeshPair> make_pair_for(const ExperimentConfig &cfg, double H)
{
   std::array<int, 3> cells{1, 1, 1};
   for (int a = 0; a < cfg.dim; ++a)
   {
      const double L = cfg.upper[a] - cfg.lower[a];
      const long long n = std::llround(L / H);
      if (n < 1 || std::abs(static_cast<double>(n) * H - L) > 1e-9 * L)
      {
         throw ConfigError("H = " + num(H) + " does not divide the box extent " + num(L));
      }
      cells[a] = static_cast<int>(n);
   }
   const SimplicialMesh coarse = build_box_mesh(cfg.dim, cfg.lower, cfg.upper, cells);
   return std::make_shared<const MeshPair>(refine_uniform(coarse, cfg.factor));
}

QuadratureRule tensor_rule_for(const ExperimentConfig &cfg)
{
   return quadrature_rule(cfg.dim, cfg.tensor_degree < 0 ? max_rule_degree(cfg.dim) : cfg.tensor_degree);
}

std::optional<ScalarField> optional_potential(const std::string &name, const nlohmann::json &params)
{
   if (name == "zero") { return std::nullopt; }
   return potential_library(name, params);
}

int ell_for_row(const ExperimentConfig &cfg, std::size_t row)
{
   return cfg.ell.size() == 1 ? cfg.ell[0] : cfg.ell.at(row);
}

} // namespace

ExperimentConfig config_from_json(const nlohmann::json &j)
{
   if (!j.is_object()) { throw ConfigError("config must be a JSON object"); }
   static const std::set<std::string> known = {
      "kind", "problem", "dim", "lower", "upper", "H", "ell", "factor", "form", "potential",
      "form_potential", "potential_params", "beta", "kinetic", "tensor_degree", "tol", "max_iters",
      "reference_energy", "q", "tau", "T", "fp_tol", "fp_max", "dyn_kinetic", "dyn_beta",
      "dyn_potential", "reference_tau", "reference_q", "threads", "cache_dir", "out", "timings"};
   for (const auto &item : j.items())
   {
      if (!known.count(item.key())) { throw ConfigError("unknown config key '" + item.key() + "'"); }
   }
   ExperimentConfig c;
   try
   {
      if (j.contains("problem")) { apply_preset(c, j.at("problem").get<std::string>()); }
      if (j.contains("kind")) { c.kind = kind_from_name(j.at("kind").get<std::string>()); }
      if (j.contains("dim")) { c.dim = j.at("dim").get<int>(); }
      auto box = [](const nlohmann::json &v)
      {
         std::array<double, 3> b{0.0, 0.0, 0.0};
         const auto xs = scalar_or_list<double>(v);
         for (std::size_t a = 0; a < 3; ++a) { b[a] = xs.size() == 1 ? xs[0] : xs.at(std::min(a, xs.size() - 1)); }
         return b;
      };
      if (j.contains("lower")) { c.lower = box(j.at("lower")); }
      if (j.contains("upper")) { c.upper = box(j.at("upper")); }
      if (j.contains("H")) { c.H = scalar_or_list<double>(j.at("H")); }
      if (j.contains("ell")) { c.ell = scalar_or_list<int>(j.at("ell")); }
      if (j.contains("factor")) { c.factor = j.at("factor").get<int>(); }
      if (j.contains("form")) { c.form = j.at("form").get<std::string>(); }
      if (j.contains("potential")) { c.potential = j.at("potential").get<std::string>(); }
      if (j.contains("form_potential")) { c.form_potential = j.at("form_potential").get<std::string>(); }
      if (j.contains("potential_params")) { c.potential_params = j.at("potential_params"); }
      if (j.contains("beta")) { c.beta = j.at("beta").get<double>(); }
      if (j.contains("kinetic")) { c.kinetic = j.at("kinetic").get<double>(); }
      if (j.contains("tensor_degree")) { c.tensor_degree = j.at("tensor_degree").get<int>(); }
      if (j.contains("tol")) { c.tol = j.at("tol").get<double>(); }
      if (j.contains("max_iters")) { c.max_iters = j.at("max_iters").get<int>(); }
      if (j.contains("reference_energy"))
      {
         if (j.at("reference_energy").is_null()) { c.reference_energy.reset(); }
         else { c.reference_energy = j.at("reference_energy").get<double>(); }
      }
      if (j.contains("q")) { c.q = j.at("q").get<int>(); }
      if (j.contains("tau")) { c.tau = scalar_or_list<double>(j.at("tau")); }
      if (j.contains("T")) { c.T = j.at("T").get<double>(); }
      if (j.contains("fp_tol")) { c.fp_tol = j.at("fp_tol").get<double>(); }
      if (j.contains("fp_max")) { c.fp_max = j.at("fp_max").get<int>(); }
      if (j.contains("dyn_kinetic")) { c.dyn_kinetic = j.at("dyn_kinetic").get<double>(); }
      if (j.contains("dyn_beta")) { c.dyn_beta = j.at("dyn_beta").get<double>(); }
      if (j.contains("dyn_potential")) { c.dyn_potential = j.at("dyn_potential").get<std::string>(); }
      if (j.contains("reference_tau"))
      {
         if (j.at("reference_tau").is_null()) { c.reference_tau.reset(); }
         else { c.reference_tau = j.at("reference_tau").get<double>(); }
      }
      if (j.contains("reference_q")) { c.reference_q = j.at("reference_q").get<int>(); }
      if (j.contains("threads")) { c.threads = j.at("threads").get<int>(); }
      if (j.contains("cache_dir")) { c.cache_dir = j.at("cache_dir").get<std::string>(); }
      if (j.contains("out")) { c.out = j.at("out").get<std::string>(); }
      if (j.contains("timings")) { c.timings = j.at("timings").get<bool>(); }
   }
   catch (const nlohmann::json::exception &e)
   {
      throw ConfigError(std::string("bad config value: ") + e.what());
   }
   return c;
}

nlohmann::json config_to_json(const ExperimentConfig &c)
{
   nlohmann::json j;
   j["kind"] = kind_name(c.kind);
   j["problem"] = c.problem;
   j["dim"] = c.dim;
   j["lower"] = std::vector<double>(c.lower.begin(), c.lower.begin() + c.dim);
   j["upper"] = std::vector<double>(c.upper.begin(), c.upper.begin() + c.dim);
   j["H"] = c.H;
   j["ell"] = c.ell;
   j["factor"] = c.factor;
   j["form"] = c.form;
   j["potential"] = c.potential;
   j["form_potential"] = c.form_potential;
   j["potential_params"] = c.potential_params;
   j["beta"] = c.beta;
   j["kinetic"] = c.kinetic;
   j["tensor_degree"] = c.tensor_degree;
   j["tol"] = c.tol;
   j["max_iters"] = c.max_iters;
   j["reference_energy"] = c.reference_energy ? nlohmann::json(*c.reference_energy) : nlohmann::json();
   j["q"] = c.q;
   j["tau"] = c.tau;
   j["T"] = c.T;
   j["fp_tol"] = c.fp_tol;
   j["fp_max"] = c.fp_max;
   j["dyn_kinetic"] = c.dyn_kinetic;
   j["dyn_beta"] = c.dyn_beta;
   j["dyn_potential"] = c.dyn_potential;
   j["reference_tau"] = c.reference_tau ? nlohmann::json(*c.reference_tau) : nlohmann::json();
   j["reference_q"] = c.reference_q;
   j["threads"] = c.threads;
   j["cache_dir"] = c.cache_dir;
   j["out"] = c.out;
   j["timings"] = c.timings;
   return j;
}

void validate(const ExperimentConfig &c)
{
   if (c.dim < 1 || c.dim > 3) { throw ConfigError("dim must be 1, 2 or 3"); }
   for (int a = 0; a < c.dim; ++a)
   {
      if (!(c.upper[a] > c.lower[a])) { throw ConfigError("empty domain box"); }
   }
   if (c.H.empty()) { throw ConfigError("at least one H is required"); }
   for (double h : c.H)
   {
      if (!(h > 0.0)) { throw ConfigError("H must be positive"); }
      for (int a = 0; a < c.dim; ++a)
      {
         const double L = c.upper[a] - c.lower[a];
         const long long n = std::llround(L / h);
         if (n < 1 || std::abs(static_cast<double>(n) * h - L) > 1e-9 * L)
         {
            throw ConfigError("H = " + num(h) + " does not divide the box extent " + num(L));
         }
      }
   }
   if (c.ell.empty() || (c.ell.size() != 1 && c.ell.size() != c.H.size()))
   {
      throw ConfigError("ell must be a single value or one per H");
   }
   for (int l : c.ell)
   {
      if (l < 0) { throw ConfigError("ell must be >= 0"); }
   }
   if (c.factor < 1) { throw ConfigError("factor must be >= 1"); }
   if (c.form != "canonical" && c.form != "potential") { throw ConfigError("form must be canonical or potential"); }
   const std::vector<std::string> names = potential_names();
   for (const std::string *p : {&c.potential, &c.dyn_potential})
   {
      if (std::find(names.begin(), names.end(), *p) == names.end()) { throw ConfigError("unknown potential '" + *p + "'"); }
   }
   if (!c.form_potential.empty() && std::find(names.begin(), names.end(), c.form_potential) == names.end())
   {
      throw ConfigError("unknown form potential '" + c.form_potential + "'");
   }
   if (c.tensor_degree != -1 && (c.tensor_degree < 3 || c.tensor_degree > max_rule_degree(c.dim)))
   {
      throw ConfigError("tensor degree must lie in [3, " + std::to_string(max_rule_degree(c.dim)) + "]");
   }
   if (!(c.kinetic > 0.0) || !(c.dyn_kinetic > 0.0)) { throw ConfigError("kinetic coefficients must be positive"); }
   if (!(c.tol > 0.0) || c.max_iters < 1) { throw ConfigError("bad ground-state tolerance or iteration cap"); }
   if (c.kind != ExperimentKind::evolve && c.kind != ExperimentKind::lodinfo && c.beta < 0.0)
   {
      throw ConfigError("ground states require beta >= 0");
   }
   if (c.kind == ExperimentKind::evolve || c.kind == ExperimentKind::coupled)
   {
      if (c.q < 1 || c.q > 4 || c.reference_q < 1 || c.reference_q > 4) { throw ConfigError("q must lie in 1..4"); }
      if (!(c.T > 0.0) || c.tau.empty()) { throw ConfigError("T and tau are required for dynamics"); }
      for (double t : c.tau)
      {
         const long long n = std::llround(c.T / t);
         if (!(t > 0.0) || n < 1 || std::abs(static_cast<double>(n) * t - c.T) > 1e-10 * c.T)
         {
            throw ConfigError("tau = " + num(t) + " must be positive and divide T");
         }
      }
      if (!(c.fp_tol > 0.0) || c.fp_max < 1) { throw ConfigError("bad fixed-point tolerance or cap"); }
      if (c.kind == ExperimentKind::evolve && c.problem != "soliton" && !c.reference_tau)
      {
         throw ConfigError("evolve needs the soliton problem or a reference_tau");
      }
   }
   if (c.threads < 1) { throw ConfigError("threads must be >= 1"); }
}

std::shared_ptr<const LodSpace> make_space(const ExperimentConfig &cfg, double H, int ell,
                                           const std::string &form, const std::string &form_potential)
{
   const auto pair = make_pair_for(cfg, H);
   BilinearFormChoice choice = BilinearFormChoice::canonical();
   if (form == "potential")
   {
      const std::string name = form_potential.empty() ? cfg.potential : form_potential;
      choice = BilinearFormChoice::potential_adapted(potential_library(name, cfg.potential_params),
                                                     name + cfg.potential_params.dump(), cfg.kinetic);
   }
   return std::make_shared<const LodSpace>(
      build_or_load_lod_space(pair, choice, ell, tensor_rule_for(cfg), cfg.cache_dir));
}

std::vector<GroundstateRow> run_groundstate_experiment(const ExperimentConfig &cfg)
{
   validate(cfg);
   set_num_threads(cfg.threads);
   std::vector<GroundstateRow> rows;
   for (std::size_t r = 0; r < cfg.H.size(); ++r)
   {
      GroundstateRow row;
      row.H = cfg.H[r];
      row.ell = ell_for_row(cfg, r);
      row.factor = cfg.factor;
      row.form = cfg.form;
      try
      {
         const auto lod = make_space(cfg, row.H, row.ell, cfg.form, cfg.form_potential);
         row.t_basis_s = lod->timings.basis_s;
         row.t_omega_s = lod->timings.omega_s;
         const double t0 = wall_time();
         const GpeProblem p = make_problem(lod, cfg.beta, optional_potential(cfg.potential, cfg.potential_params),
                                           cfg.kinetic);
         GsOptions opt;
         opt.tol_energy = cfg.tol;
         opt.max_iters = cfg.max_iters;
         const GsResult res = solve_ground_state(p, default_initial_guess(p), opt);
         row.t_online_s = wall_time() - t0;
         row.E_lod = res.state.energy;
         row.E_exactform = exact_form_energy(p, res.state.alpha);
         row.lambda = res.state.eigenvalue;
         row.iters = res.state.iteration;
         if (cfg.reference_energy) { row.err_vs_ref = row.E_lod - *cfg.reference_energy; }
         if (res.stagnated) { row.error = "stagnated"; }
      }
      catch (const NonConvergenceError &e)
      {
         row.error = std::string("non-convergence: ") + e.what();
      }
      catch (const Error &e)
      {
         row.error = e.what();
      }
      rows.push_back(row);
   }
   return rows;
}

namespace
{

double max_drift(const std::vector<double> &v)
{
   double d = 0.0;
   for (double x : v) { d = std::max(d, std::abs(x - v.front())); }
   return d;
}

} // namespace

std::vector<DynamicsRow> run_dynamics_experiment(const ExperimentConfig &cfg)
{
   validate(cfg);
   set_num_threads(cfg.threads);
   const auto lod = make_space(cfg, cfg.H.front(), ell_for_row(cfg, 0), cfg.form, cfg.form_potential);
   const GpeProblem p = make_problem(lod, cfg.dyn_beta, optional_potential(cfg.dyn_potential, cfg.potential_params),
                                     cfg.dyn_kinetic);
   const SimplicialMesh &F = lod->fine();
   CVector u0_fine(F.num_dofs());
   for (int d = 0; d < F.num_dofs(); ++d) { u0_fine(d) = exact_soliton(F.vertices[F.vertex_of_dof[d]][0], 0.0); }
   const CVector alpha0 = project_a(*lod, u0_fine);

   IntegrateOptions opt;
   opt.fixed_point.tol = cfg.fp_tol;
   opt.fixed_point.max_iters = cfg.fp_max;

   std::optional<CVector> reference;
   if (cfg.reference_tau)
   {
      IntegrateOptions ropt = opt;
      ropt.snapshot_stride = std::numeric_limits<int>::max();
      ropt.exact_form_energy = false;
      const Trajectory ref = integrate(p, build_cg_tables(cfg.reference_q), alpha0, cfg.T, *cfg.reference_tau, ropt);
      if (ref.diverged)
      {
         throw FixedPointDivergenceError("reference run diverged: " + ref.failure, ref.last_increment);
      }
      reference = ref.final_state();
   }

   const CgTables tables = build_cg_tables(cfg.q);
   std::vector<DynamicsRow> rows;
   std::vector<double> ok_tau, ok_err;
   std::vector<std::size_t> ok_rows;
   for (double tau : cfg.tau)
   {
      DynamicsRow row;
      row.tau = tau;
      row.q = cfg.q;
      const double t0 = wall_time();
      const Trajectory tr = integrate(p, tables, alpha0, cfg.T, tau, opt);
      row.t_online_s = wall_time() - t0;
      if (tr.diverged)
      {
         row.error = "fixed-point divergence: " + tr.failure;
         rows.push_back(row);
         continue;
      }
      const CVector &u = tr.final_state();
      if (reference)
      {
         const CVector diff = u - *reference;
         row.rel_l2 = std::sqrt(mass(p, diff) / mass(p, *reference));
         const double a_diff = diff.dot(lod->A_lod * diff).real();
         const double a_ref = reference->dot(lod->A_lod * *reference).real();
         row.rel_h1 = std::sqrt(a_diff / a_ref);
      }
      else
      {
         const RelativeErrors e = relative_errors(
            *lod, u, tr.final_time(), [](const Point &x, double t) { return exact_soliton(x[0], t); },
            [](const Point &x, double t) { return std::array<Complex, 3>{exact_soliton_dx(x[0], t), 0.0, 0.0}; });
         row.rel_l2 = e.rel_l2;
         row.rel_h1 = e.rel_h1;
      }
      row.energy_drift = max_drift(tr.energy_lod);
      row.mass_drift = max_drift(tr.mass);
      double s = 0.0;
      for (int k : tr.fp_iterations) { s += k; }
      row.fp_iters_mean = tr.fp_iterations.empty() ? 0.0 : s / static_cast<double>(tr.fp_iterations.size());
      ok_tau.push_back(tau);
      ok_err.push_back(row.rel_l2);
      ok_rows.push_back(rows.size());
      rows.push_back(row);
   }
   const auto orders = eoc(ok_tau, ok_err);
   for (std::size_t k = 0; k < ok_rows.size(); ++k) { rows[ok_rows[k]].eoc_l2 = orders[k]; }
   return rows;
}

CoupledResult run_coupled_experiment(const ExperimentConfig &cfg)
{
   validate(cfg);
   set_num_threads(cfg.threads);
   CoupledResult out;
   GroundstateRow &row = out.groundstate;
   row.H = cfg.H.front();
   row.ell = ell_for_row(cfg, 0);
   row.factor = cfg.factor;
   row.form = cfg.form;
   const auto lod = make_space(cfg, row.H, row.ell, cfg.form, cfg.form_potential);
   row.t_basis_s = lod->timings.basis_s;
   row.t_omega_s = lod->timings.omega_s;
   double t0 = wall_time();
   const GpeProblem gs = make_problem(lod, cfg.beta, optional_potential(cfg.potential, cfg.potential_params),
                                      cfg.kinetic);
   GsOptions gopt;
   gopt.tol_energy = cfg.tol;
   gopt.max_iters = cfg.max_iters;
   const GsResult res = solve_ground_state(gs, default_initial_guess(gs), gopt);
   row.t_online_s = wall_time() - t0;
   row.E_lod = res.state.energy;
   row.E_exactform = exact_form_energy(gs, res.state.alpha);
   row.lambda = res.state.eigenvalue;
   row.iters = res.state.iteration;
   if (cfg.reference_energy) { row.err_vs_ref = row.E_lod - *cfg.reference_energy; }

   const GpeProblem dyn = make_problem(lod, cfg.dyn_beta, optional_potential(cfg.dyn_potential, cfg.potential_params),
                                       cfg.dyn_kinetic);
   IntegrateOptions opt;
   opt.fixed_point.tol = cfg.fp_tol;
   opt.fixed_point.max_iters = cfg.fp_max;
   out.trajectory = integrate(dyn, build_cg_tables(cfg.q), res.state.alpha.cast<Complex>(), cfg.T, cfg.tau.front(), opt);
   const GpeProblem gp = make_problem(lod, cfg.dyn_beta, optional_potential(cfg.dyn_potential, cfg.potential_params),
                                      cfg.kinetic);
   for (const CVector &a : out.trajectory.states) { out.energy_gp.push_back(modified_energy(gp, a)); }
   return out;
}

LodInfo lod_info(const ExperimentConfig &cfg)
{
   validate(cfg);
   set_num_threads(cfg.threads);
   const auto lod = make_space(cfg, cfg.H.front(), ell_for_row(cfg, 0), cfg.form, cfg.form_potential);
   LodInfo info;
   info.coarse_dofs = lod->num_dofs();
   info.fine_dofs = lod->fine().num_dofs();
   info.phi_nnz = lod->Phi.nonZeros();
   info.omega_nnz = lod->omega.size();
   info.phi_bytes = static_cast<double>(info.phi_nnz) * (sizeof(double) + sizeof(int)) +
                    static_cast<double>(lod->Phi.rows() + 1) * sizeof(int);
   info.omega_bytes = static_cast<double>(info.omega_nnz) * (sizeof(double) + 2 * sizeof(int)) +
                      static_cast<double>(lod->omega.n + 1) * sizeof(std::int64_t);
   info.t_basis_s = lod->timings.basis_s;
   info.t_omega_s = lod->timings.omega_s;
   return info;
}

const std::vector<std::string> groundstate_columns = {
   "H", "ell", "factor", "form", "E_lod", "E_exactform", "lambda", "iters", "err_vs_ref",
   "t_basis_s", "t_omega_s", "t_online_s"};

const std::vector<std::string> dynamics_columns = {
   "tau", "q", "rel_l2", "rel_h1", "eoc_l2", "energy_drift", "mass_drift", "fp_iters_mean", "t_online_s"};

namespace
{

std::string header(const std::vector<std::string> &cols)
{
   std::string s;
   for (std::size_t i = 0; i < cols.size(); ++i) { s += (i ? "," : "") + cols[i]; }
   return s + "\n";
}

std::string join(const std::vector<std::string> &cells)
{
   std::string s;
   for (std::size_t i = 0; i < cells.size(); ++i) { s += (i ? "," : "") + cells[i]; }
   return s + "\n";
}

} // namespace

std::string groundstate_csv(const std::vector<GroundstateRow> &rows, bool timings)
{
   std::string s = header(groundstate_columns);
   for (const auto &r : rows)
   {
      const bool ok = r.error.empty() || r.error == "stagnated";
      auto t = [&](double v) { return timings ? num(v) : std::string("0"); };
      s += join({num(r.H), std::to_string(r.ell), std::to_string(r.factor), r.form,
                 ok ? num(r.E_lod) : "", ok ? num(r.E_exactform) : "", ok ? num(r.lambda) : "",
                 ok ? std::to_string(r.iters) : "", ok ? opt_num(r.err_vs_ref) : "", t(r.t_basis_s),
                 t(r.t_omega_s), t(r.t_online_s)});
   }
   return s;
}

std::string dynamics_csv(const std::vector<DynamicsRow> &rows, bool timings)
{
   std::string s = header(dynamics_columns);
   for (const auto &r : rows)
   {
      const bool ok = r.error.empty();
      s += join({num(r.tau), std::to_string(r.q), ok ? num(r.rel_l2) : "", ok ? num(r.rel_h1) : "",
                 opt_num(r.eoc_l2), ok ? num(r.energy_drift) : "", ok ? num(r.mass_drift) : "",
                 ok ? num(r.fp_iters_mean) : "", timings ? num(r.t_online_s) : std::string("0")});
   }
   return s;
}

void emit_report(const std::string &path, const std::string &csv, const ExperimentConfig &cfg)
{
   {
      std::ofstream os(path, std::ios::trunc);
      if (!os) { throw ConfigError("cannot write report " + path); }
      os << csv;
      if (!os) { throw ConfigError("failed writing report " + path); }
   }
   nlohmann::json m;
   m["config"] = config_to_json(cfg);
   m["library"] = "lodgp 1.0";
   m["determinism"] = "no random seeds; results are bit-identical for a fixed config and thread count";
   nlohmann::json refs = nlohmann::json::object();
   if (cfg.reference_energy)
   {
      refs["reference_energy"] = {{"value", *cfg.reference_energy}, {"source", "published reference table"}};
   }
   m["references"] = refs;
   std::ofstream ms(path + ".manifest.json", std::ios::trunc);
   if (!ms) { throw ConfigError("cannot write manifest for " + path); }
   ms << m.dump(2) << "\n";
}

std::vector<std::optional<double>> eoc(const std::vector<double> &tau, const std::vector<double> &err)
{
   require_length(err.size(), tau.size(), "eoc");
   std::vector<std::optional<double>> out(tau.size());
   for (std::size_t i = 1; i < tau.size(); ++i)
   {
      out[i] = std::log(err[i - 1] / err[i]) / std::log(tau[i - 1] / tau[i]);
   }
   return out;
}

} // namespace lodgp

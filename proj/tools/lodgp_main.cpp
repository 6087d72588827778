#include "lodgp/bench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace lodgp;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitNonConvergence = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitConfig = 4;

struct Overrides
{
   std::string config;
   std::string problem;
   std::string domain;
   std::string H;
   std::string ell;
   std::string tau;
   std::string form;
   std::string potential;
   std::optional<int> factor;
   std::optional<double> beta;
   std::optional<int> q;
   std::optional<double> T;
   std::optional<double> tol;
   std::optional<double> fp_tol;
   std::optional<int> threads;
   std::optional<int> tensor_degree;
   std::optional<double> reference_tau;
   std::string cache_dir;
   std::string out;
   bool no_timings = false;
};

template <class T>
std::vector<T> parse_list(const std::string &s, const char *what)
{
   std::vector<T> out;
   std::stringstream ss(s);
   std::string item;
   while (std::getline(ss, item, ','))
   {
      try
      {
         std::size_t used = 0;
         if constexpr (std::is_same_v<T, int>) { out.push_back(std::stoi(item, &used)); }
         else
         {
            const auto slash = item.find('/');
            if (slash != std::string::npos)
            {
               const double a = std::stod(item.substr(0, slash));
               const double b = std::stod(item.substr(slash + 1));
               out.push_back(a / b);
               used = item.size();
            }
            else { out.push_back(std::stod(item, &used)); }
         }
         if (used != item.size()) { throw std::invalid_argument(item); }
      }
      catch (const std::exception &)
      {
         throw ConfigError(std::string("cannot parse ") + what + " entry '" + item + "'");
      }
   }
   if (out.empty()) { throw ConfigError(std::string("empty ") + what + " list"); }
   return out;
}

/// "lo:hi" for every axis or "lo:hi,lo:hi[,lo:hi]" per axis.
void apply_domain(ExperimentConfig &c, const std::string &s)
{
   std::vector<std::pair<double, double>> axes;
   std::stringstream ss(s);
   std::string item;
   while (std::getline(ss, item, ','))
   {
      const auto colon = item.find(':');
      if (colon == std::string::npos) { throw ConfigError("domain axis '" + item + "' is not lo:hi"); }
      try
      {
         axes.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
      }
      catch (const std::exception &)
      {
         throw ConfigError("cannot parse domain axis '" + item + "'");
      }
   }
   if (axes.empty() || axes.size() > 3) { throw ConfigError("domain needs 1 to 3 axes"); }
   if (axes.size() > 1) { c.dim = static_cast<int>(axes.size()); }
   for (int a = 0; a < 3; ++a)
   {
      const auto &ax = axes[std::min<std::size_t>(a, axes.size() - 1)];
      c.lower[a] = ax.first;
      c.upper[a] = ax.second;
   }
}

ExperimentConfig assemble(const Overrides &o, ExperimentKind kind)
{
   nlohmann::json j = nlohmann::json::object();
   if (!o.config.empty())
   {
      std::ifstream is(o.config);
      if (!is) { throw ConfigError("cannot open config " + o.config); }
      try
      {
         j = nlohmann::json::parse(is);
      }
      catch (const nlohmann::json::exception &e)
      {
         throw ConfigError(std::string("bad JSON in config: ") + e.what());
      }
   }
   if (!o.problem.empty()) { j["problem"] = o.problem; }
   if (!j.contains("kind")) { j["kind"] = kind == ExperimentKind::groundstate ? "groundstate"
                                         : kind == ExperimentKind::evolve     ? "evolve"
                                         : kind == ExperimentKind::coupled    ? "coupled"
                                                                              : "lodinfo"; }
   ExperimentConfig c = config_from_json(j);
   c.kind = kind;
   if (!o.domain.empty()) { apply_domain(c, o.domain); }
   if (!o.H.empty()) { c.H = parse_list<double>(o.H, "H"); }
   if (!o.ell.empty()) { c.ell = parse_list<int>(o.ell, "ell"); }
   if (!o.tau.empty()) { c.tau = parse_list<double>(o.tau, "tau"); }
   if (!o.form.empty()) { c.form = o.form; }
   if (!o.potential.empty()) { c.potential = o.potential; }
   if (o.factor) { c.factor = *o.factor; }
   if (o.beta)
   {
      if (kind != ExperimentKind::groundstate) { c.dyn_beta = *o.beta; }
      if (kind != ExperimentKind::evolve) { c.beta = *o.beta; }
   }
   if (o.q) { c.q = *o.q; }
   if (o.T) { c.T = *o.T; }
   if (o.tol) { c.tol = *o.tol; }
   if (o.fp_tol) { c.fp_tol = *o.fp_tol; }
   if (o.threads) { c.threads = *o.threads; }
   if (o.tensor_degree) { c.tensor_degree = *o.tensor_degree; }
   if (o.reference_tau) { c.reference_tau = *o.reference_tau; }
   if (!o.cache_dir.empty()) { c.cache_dir = o.cache_dir; }
   if (!o.out.empty()) { c.out = o.out; }
   if (o.no_timings) { c.timings = false; }
   validate(c);
   return c;
}

void deliver(const ExperimentConfig &c, const std::string &csv)
{
   if (c.out.empty()) { std::cout << csv; }
   else
   {
      emit_report(c.out, csv, c);
      std::cerr << "wrote " << c.out << "\n";
   }
}

int run_groundstate(const ExperimentConfig &c)
{
   const auto rows = run_groundstate_experiment(c);
   deliver(c, groundstate_csv(rows, c.timings));
   int code = kExitOk;
   for (const auto &r : rows)
   {
      if (r.error.empty()) { continue; }
      std::cerr << "H=" << r.H << ": " << r.error << "\n";
      if (r.error.rfind("non-convergence", 0) == 0 || r.error == "stagnated") { code = kExitNonConvergence; }
   }
   return code;
}

int run_evolve(const ExperimentConfig &c)
{
   const auto rows = run_dynamics_experiment(c);
   deliver(c, dynamics_csv(rows, c.timings));
   int code = kExitOk;
   for (const auto &r : rows)
   {
      if (r.error.empty()) { continue; }
      std::cerr << "tau=" << r.tau << ": " << r.error << "\n";
      code = kExitDivergence;
   }
   return code;
}

int run_coupled(const ExperimentConfig &c)
{
   const CoupledResult res = run_coupled_experiment(c);
   std::ostringstream os;
   os << "t,E_lod,E_exactform,mass,E_gp\n";
   char buf[128];
   const Trajectory &tr = res.trajectory;
   for (std::size_t k = 0; k < tr.times.size(); ++k)
   {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", tr.times[k], tr.energy_lod[k],
                    k < tr.energy_exactform.size() ? tr.energy_exactform[k] : 0.0, tr.mass[k],
                    k < res.energy_gp.size() ? res.energy_gp[k] : 0.0);
      os << buf;
   }
   std::cerr << groundstate_csv({res.groundstate}, c.timings);
   deliver(c, os.str());
   if (tr.diverged)
   {
      std::cerr << "fixed-point divergence: " << tr.failure << "\n";
      return kExitDivergence;
   }
   return kExitOk;
}

int run_lodinfo(const ExperimentConfig &c)
{
   const LodInfo info = lod_info(c);
   nlohmann::json j;
   j["coarse_dofs"] = info.coarse_dofs;
   j["fine_dofs"] = info.fine_dofs;
   j["phi_nnz"] = info.phi_nnz;
   j["omega_nnz"] = info.omega_nnz;
   j["phi_mb"] = info.phi_bytes / 1048576.0;
   j["omega_mb"] = info.omega_bytes / 1048576.0;
   if (c.timings)
   {
      j["t_basis_s"] = info.t_basis_s;
      j["t_omega_s"] = info.t_omega_s;
   }
   std::cout << j.dump(2) << "\n";
   return kExitOk;
}

void add_common(CLI::App *sub, Overrides &o)
{
   sub->add_option("--config", o.config, "JSON experiment config");
   sub->add_option("--problem", o.problem, "preset: double_well, discontinuous, harmonic1d, harmonic2d, "
                                           "harmonic3d, soliton, coupled3d, custom");
   sub->add_option("--domain", o.domain, "lo:hi, or lo:hi per axis separated by commas");
   sub->add_option("--H", o.H, "coarse cell widths, comma separated");
   sub->add_option("--factor", o.factor, "fine refinement factor");
   sub->add_option("--ell", o.ell, "patch layers, one value or one per H");
   sub->add_option("--form", o.form, "canonical or potential")->check(CLI::IsMember({"canonical", "potential"}));
   sub->add_option("--potential", o.potential, "potential name");
   sub->add_option("--beta", o.beta, "interaction strength");
   sub->add_option("--q", o.q, "cG degree");
   sub->add_option("--tau", o.tau, "time steps, comma separated; a/b fractions allowed");
   sub->add_option("--T", o.T, "final time");
   sub->add_option("--tol", o.tol, "ground-state energy tolerance");
   sub->add_option("--fp-tol", o.fp_tol, "fixed-point tolerance");
   sub->add_option("--reference-tau", o.reference_tau, "frozen-space reference step");
   sub->add_option("--threads", o.threads, "worker threads");
   sub->add_option("--tensor-degree", o.tensor_degree, "quadrature degree for the tensor");
   sub->add_option("--cache-dir", o.cache_dir, "directory for cached LOD spaces");
   sub->add_option("--out", o.out, "CSV output path (stdout if omitted)");
   sub->add_flag("--no-timings", o.no_timings, "write zero timing columns");
}

} // namespace

int main(int argc, char **argv)
{
   CLI::App app{"LOD Gross-Pitaevskii solver"};
   app.require_subcommand(1);
   Overrides o;
   auto *gs = app.add_subcommand("groundstate", "ground-state energy sweep over H");
   auto *ev = app.add_subcommand("evolve", "time evolution with temporal error table");
   auto *co = app.add_subcommand("coupled", "ground state followed by time evolution");
   auto *li = app.add_subcommand("lodinfo", "space dimensions, nonzeros and memory");
   for (auto *s : {gs, ev, co, li}) { add_common(s, o); }
   try
   {
      app.parse(argc, argv);
   }
   catch (const CLI::ParseError &e)
   {
      const int code = app.exit(e);
      return code == 0 ? kExitOk : kExitConfig;
   }

   try
   {
      if (gs->parsed()) { return run_groundstate(assemble(o, ExperimentKind::groundstate)); }
      if (ev->parsed()) { return run_evolve(assemble(o, ExperimentKind::evolve)); }
      if (co->parsed()) { return run_coupled(assemble(o, ExperimentKind::coupled)); }
      return run_lodinfo(assemble(o, ExperimentKind::lodinfo));
   }
   catch (const ConfigError &e)
   {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
   }
   catch (const NonConvergenceError &e)
   {
      std::cerr << "non-convergence: " << e.what() << "\n";
      return kExitNonConvergence;
   }
   catch (const FixedPointDivergenceError &e)
   {
      std::cerr << "fixed-point divergence: " << e.what() << "\n";
      return kExitDivergence;
   }
   catch (const Error &e)
   {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
   }
}

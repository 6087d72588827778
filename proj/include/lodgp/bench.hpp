#pragma once

#include "lodgp/common.hpp"
#include "lodgp/dynamics.hpp"
#include "lodgp/fem.hpp"
#include "lodgp/groundstate.hpp"
#include "lodgp/lod.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace lodgp
{

/// Two-soliton solution of i u_t = -u_xx - 2|u|^2 u.
Complex exact_soliton(double x, double t);
/// Its x-derivative.
Complex exact_soliton_dx(double x, double t);
/// The t = 0 initial value, written as a separate closed form.
double soliton_initial_value(double x);

/// Named trapping potentials. Known names: zero, harmonic, double_well,
/// indicator, harmonic_plus_indicator, lattice, harmonic_plus_lattice.
/// `params` may hold "scale" (multiplies the potential, default 1).
ScalarField potential_library(const std::string &name, const nlohmann::json &params = nlohmann::json::object());

std::vector<std::string> potential_names();

enum class ExperimentKind { groundstate, evolve, coupled, lodinfo };

struct ExperimentConfig
{
   ExperimentKind kind = ExperimentKind::groundstate;
   std::string problem = "double_well";
   int dim = 2;
   std::array<double, 3> lower{-6.0, -6.0, -6.0};
   std::array<double, 3> upper{6.0, 6.0, 6.0};
   std::vector<double> H{2.0};      // coarse cell widths (one row each)
   std::vector<int> ell{1};         // one per H, or a single value
   int factor = 10;
   std::string form = "canonical";  // canonical | potential
   std::string potential = "double_well";
   std::string form_potential;      // potential entering the form; defaults to `potential`
   nlohmann::json potential_params = nlohmann::json::object();
   double beta = 50.0;
   double kinetic = 0.5;            // ground-state kinetic coefficient
   int tensor_degree = -1;          // -1: highest rule for the dimension
   // ground state
   double tol = 1e-10;
   int max_iters = 500;
   std::optional<double> reference_energy;
   // dynamics
   int q = 2;
   std::vector<double> tau{1.0 / 64.0};
   double T = 1.0;
   double fp_tol = 1e-12;
   int fp_max = 200;
   double dyn_kinetic = 1.0;
   double dyn_beta = -2.0;
   std::string dyn_potential = "zero";
   std::optional<double> reference_tau;   // frozen-space reference run for errors
   int reference_q = 3;
   // plumbing
   int threads = 1;
   std::string cache_dir;
   std::string out;
   bool timings = true;
};

/// Loads a JSON config; unknown keys raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const ExperimentConfig &cfg);
void validate(const ExperimentConfig &cfg);

struct GroundstateRow
{
   double H = 0.0;
   int ell = 0;
   int factor = 0;
   std::string form;
   double E_lod = 0.0;
   double E_exactform = 0.0;
   double lambda = 0.0;
   int iters = 0;
   std::optional<double> err_vs_ref;
   double t_basis_s = 0.0;
   double t_omega_s = 0.0;
   double t_online_s = 0.0;
   std::string error;
};

struct DynamicsRow
{
   double tau = 0.0;
   int q = 0;
   double rel_l2 = 0.0;
   double rel_h1 = 0.0;
   std::optional<double> eoc_l2;
   double energy_drift = 0.0;
   double mass_drift = 0.0;
   double fp_iters_mean = 0.0;
   double t_online_s = 0.0;
   std::string error;
};

/// Builds (or loads from the cache directory) the LOD space of one row.
std::shared_ptr<const LodSpace> make_space(const ExperimentConfig &cfg, double H, int ell,
                                           const std::string &form, const std::string &form_potential);

std::vector<GroundstateRow> run_groundstate_experiment(const ExperimentConfig &cfg);
std::vector<DynamicsRow> run_dynamics_experiment(const ExperimentConfig &cfg);

struct CoupledResult
{
   GroundstateRow groundstate;
   Trajectory trajectory;
   std::vector<double> energy_gp;   // ground-state kinetic coefficient with the evolution potential
};
CoupledResult run_coupled_experiment(const ExperimentConfig &cfg);

struct LodInfo
{
   int coarse_dofs = 0;
   int fine_dofs = 0;
   long long phi_nnz = 0;
   long long omega_nnz = 0;
   double phi_bytes = 0.0;
   double omega_bytes = 0.0;
   double t_basis_s = 0.0;
   double t_omega_s = 0.0;
};
LodInfo lod_info(const ExperimentConfig &cfg);

extern const std::vector<std::string> groundstate_columns;
extern const std::vector<std::string> dynamics_columns;

std::string groundstate_csv(const std::vector<GroundstateRow> &rows, bool timings = true);
std::string dynamics_csv(const std::vector<DynamicsRow> &rows, bool timings = true);

/// Writes the CSV plus a manifest (`<path>.manifest.json`) echoing the config.
void emit_report(const std::string &path, const std::string &csv, const ExperimentConfig &cfg);

/// EOC_i = log(E_{i-1}/E_i) / log(tau_{i-1}/tau_i); first entry empty.
std::vector<std::optional<double>> eoc(const std::vector<double> &tau, const std::vector<double> &err);

} // namespace lodgp

#include "doctest.h"
#include "lodgp/bench.hpp"
#include "lodgp/lod_cache.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace lodgp;
using namespace std::complex_literals;
using testutil::make_pair;

namespace
{

std::filesystem::path scratch_dir(const std::string &name)
{
   const auto dir = std::filesystem::temp_directory_path() / ("lodgp_test_" + name);
   std::filesystem::remove_all(dir);
   std::filesystem::create_directories(dir);
   return dir;
}

ExperimentConfig small_groundstate()
{
   ExperimentConfig c = config_from_json({{"problem", "harmonic1d"}});
   c.H = {2.0, 1.0};
   c.ell = {3};
   c.factor = 4;
   c.beta = 10.0;
   c.reference_energy.reset();
   return c;
}

} // namespace

TEST_CASE("soliton value at the origin is -216/37")
{
   // integer evaluation of numerator and denominator at x = 0, t = 0
   const long long num = 8 * (9 + 16) - 32 * (4 + 9);
   const long long den = -128 + 4 + 16 + 81 + 64;
   CHECK(num == -216);
   CHECK(den == 37);
   const Complex u = exact_soliton(0.0, 0.0);
   CHECK(u.real() == -216.0 / 37.0);
   CHECK(u.imag() == 0.0);
}

TEST_CASE("soliton initial formula agrees with the general formula at t = 0")
{
   for (int k = 0; k < 100; ++k)
   {
      const double x = -20.0 + 40.0 * (k + 0.5) / 100.0;
      const Complex u = exact_soliton(x, 0.0);
      CHECK(std::abs(u - soliton_initial_value(x)) <= 1e-13 * std::max(1.0, std::abs(u)));
   }
   for (double t : {0.0, 0.3, 1.0})
   {
      CHECK(std::abs(exact_soliton(20.0, t)) < 1e-15);
      CHECK(std::abs(exact_soliton(-20.0, t)) < 1e-15);
   }
}

TEST_CASE("soliton solves the focusing cubic equation")
{
   // i u_t = -u_xx - 2|u|^2 u, checked with centered differences
   const double h = 1e-3;
   for (double x : {-2.3, -0.7, 0.0, 0.4, 1.9})
   {
      for (double t : {0.1, 0.55, 0.9})
      {
         const Complex u = exact_soliton(x, t);
         const Complex ut = (exact_soliton(x, t + h) - exact_soliton(x, t - h)) / (2.0 * h);
         const Complex uxx = (exact_soliton(x + h, t) - 2.0 * u + exact_soliton(x - h, t)) / (h * h);
         const Complex res = 1.0i * ut + uxx + 2.0 * std::norm(u) * u;
         CHECK(std::abs(res) < 1e-3 * (1.0 + std::abs(uxx)));
         const Complex ux = (exact_soliton(x - 2.0 * h, t) - 8.0 * exact_soliton(x - h, t) +
                             8.0 * exact_soliton(x + h, t) - exact_soliton(x + 2.0 * h, t)) /
                            (12.0 * h);
         CHECK(std::abs(ux - exact_soliton_dx(x, t)) < 1e-5 * (1.0 + std::abs(ux)));
      }
   }
}

TEST_CASE("potential library values")
{
   CHECK(potential_library("double_well").evaluator({0.0, 0.0, 0.0}) == doctest::Approx(8.0).epsilon(1e-15));
   CHECK(potential_library("harmonic").evaluator({1.0, 1.0, 1.0}) == doctest::Approx(1.5).epsilon(1e-15));
   CHECK(potential_library("indicator").evaluator({0.0, -3.0, 0.0}) == 1.0);
   CHECK(potential_library("indicator").evaluator({-1e-12, 3.0, 0.0}) == 0.0);
   CHECK(potential_library("harmonic_plus_indicator").evaluator({2.0, 0.0, 0.0}) == doctest::Approx(3.0));
   CHECK(potential_library("lattice").evaluator({0.5, 1.5, 0.5}) == 2.0);
   CHECK(potential_library("lattice").evaluator({-0.5, 0.5, 0.5}) == 2.0);
   CHECK(potential_library("lattice").evaluator({-0.5, -0.5, 0.5}) == 0.0);
   CHECK(potential_library("harmonic", {{"scale", 2.0}}).evaluator({1.0, 0.0, 0.0}) == 1.0);
   CHECK(potential_library("double_well").smoothness == Smoothness::smooth);
   CHECK(potential_library("indicator").smoothness == Smoothness::discontinuous);
   CHECK_THROWS_AS(potential_library("nope"), ConfigError);
}

TEST_CASE("CSV headers and number formatting")
{
   GroundstateRow g;
   g.H = 0.1;
   g.ell = 2;
   g.factor = 10;
   g.form = "canonical";
   g.E_lod = 7.0823112;
   g.E_exactform = 7.0;
   g.lambda = 1.0 / 3.0;
   g.iters = 19;
   g.t_basis_s = 1.5;
   const std::string csv = groundstate_csv({g}, false);
   const auto nl = csv.find('\n');
   CHECK(csv.substr(0, nl) ==
         "H,ell,factor,form,E_lod,E_exactform,lambda,iters,err_vs_ref,t_basis_s,t_omega_s,t_online_s");
   CHECK(csv.substr(nl + 1) ==
         "0.10000000000000001,2,10,canonical,7.0823112000000004,7,0.33333333333333331,19,,0,0,0\n");
   // %.17g round trips
   CHECK(std::stod("0.33333333333333331") == 1.0 / 3.0);

   const std::string d = dynamics_csv({}, true);
   CHECK(d == "tau,q,rel_l2,rel_h1,eoc_l2,energy_drift,mass_drift,fp_iters_mean,t_online_s\n");

   GroundstateRow bad = g;
   bad.error = "non-convergence: cap";
   const std::string b = groundstate_csv({bad}, false);
   CHECK(b.substr(b.find('\n') + 1) == "0.10000000000000001,2,10,canonical,,,,,,0,0,0\n");
}

TEST_CASE("eoc leaves the first entry empty")
{
   const auto e = eoc({0.1, 0.05, 0.025}, {1.0, 0.25, 0.0625});
   REQUIRE(e.size() == 3);
   CHECK(!e[0]);
   CHECK(*e[1] == doctest::Approx(2.0).epsilon(1e-14));
   CHECK(*e[2] == doctest::Approx(2.0).epsilon(1e-14));
   CHECK_THROWS_AS(eoc({1.0}, {1.0, 2.0}), LengthMismatchError);
}

TEST_CASE("config parsing and validation")
{
   CHECK_THROWS_AS(config_from_json({{"H", 1.0}, {"bogus", 1}}), ConfigError);
   CHECK_THROWS_AS(config_from_json({{"problem", "nope"}}), ConfigError);
   CHECK_THROWS_AS(config_from_json({{"H", "abc"}}), ConfigError);

   ExperimentConfig c = config_from_json({{"problem", "double_well"}, {"H", {2.0, 1.2}}, {"ell", {1, 2}}});
   CHECK(c.dim == 2);
   CHECK(c.H.size() == 2);
   CHECK(*c.reference_energy == 7.0823112);
   CHECK_NOTHROW(validate(c));

   const ExperimentConfig back = config_from_json(config_to_json(c));
   CHECK(config_to_json(back) == config_to_json(c));

   ExperimentConfig bad = c;
   bad.H = {0.7};
   bad.ell = {1};
   CHECK_THROWS_AS(validate(bad), ConfigError);
   bad = c;
   bad.ell = {1, 2, 3};
   CHECK_THROWS_AS(validate(bad), ConfigError);
   bad = c;
   bad.form = "other";
   CHECK_THROWS_AS(validate(bad), ConfigError);
   bad = c;
   bad.tensor_degree = max_rule_degree(2) + 1;
   CHECK_THROWS_AS(validate(bad), ConfigError);

   ExperimentConfig s = config_from_json({{"problem", "soliton"}});
   CHECK(s.kind == ExperimentKind::evolve);
   CHECK_NOTHROW(validate(s));
   s.tau = {0.3};
   CHECK_THROWS_AS(validate(s), ConfigError);
   s.tau = {1.0 / 64.0};
   s.q = 5;
   CHECK_THROWS_AS(validate(s), ConfigError);
}

TEST_CASE("cache round trip is bit-exact")
{
   const auto dir = scratch_dir("cache");
   const auto pair = make_pair(2, -3.0, 3.0, 3, 3);
   const auto form = BilinearFormChoice::canonical();
   const QuadratureRule rule = quadrature_rule(2, 5);
   bool loaded = true;
   const LodSpace cold = build_or_load_lod_space(pair, form, 2, rule, dir.string(), &loaded);
   CHECK(!loaded);
   const LodSpace warm = build_or_load_lod_space(pair, form, 2, rule, dir.string(), &loaded);
   CHECK(loaded);

   auto same = [](const SparseMatrix &a, const SparseMatrix &b)
   { return a.rows() == b.rows() && a.cols() == b.cols() && DenseMatrix(a) == DenseMatrix(b); };
   CHECK(same(cold.Phi, warm.Phi));
   CHECK(same(cold.Q, warm.Q));
   CHECK(same(cold.A_lod, warm.A_lod));
   CHECK(same(cold.M_lod, warm.M_lod));
   CHECK(cold.omega.Iptr == warm.omega.Iptr);
   CHECK(cold.omega.J == warm.omega.J);
   CHECK(cold.omega.K == warm.omega.K);
   CHECK(cold.omega.V == warm.omega.V);

   // another ell is a different key and file
   build_or_load_lod_space(pair, form, 1, rule, dir.string(), &loaded);
   CHECK(!loaded);
   int files = 0;
   for (const auto &e : std::filesystem::directory_iterator(dir)) { files += e.path().extension() == ".lodc"; }
   CHECK(files == 2);

   // a file whose stored key differs is ignored
   const std::string key = cache_key(*pair, form, 2, rule);
   const std::string path = (dir / cache_file_name(key)).string();
   CHECK(!load_lod_space(pair, form, 2, key + "x", path));

   // truncation and bad magic are hard errors
   const auto size = std::filesystem::file_size(path);
   std::filesystem::resize_file(path, size / 2);
   CHECK_THROWS_AS(load_lod_space(pair, form, 2, key, path), CacheError);
   {
      std::ofstream os(path, std::ios::binary | std::ios::trunc);
      os << "NOTACACHEFILE";
   }
   CHECK_THROWS_AS(load_lod_space(pair, form, 2, key, path), CacheError);
   std::filesystem::remove_all(dir);
}

TEST_CASE("cached and cold ground-state energies agree")
{
   const auto dir = scratch_dir("gs");
   ExperimentConfig c = small_groundstate();
   const auto cold = run_groundstate_experiment(c);
   c.cache_dir = dir.string();
   const auto first = run_groundstate_experiment(c);
   const auto second = run_groundstate_experiment(c);
   REQUIRE(cold.size() == 2);
   for (std::size_t r = 0; r < cold.size(); ++r)
   {
      CHECK(cold[r].error.empty());
      CHECK(std::abs(first[r].E_lod - cold[r].E_lod) <= 1e-13);
      CHECK(std::abs(second[r].E_lod - cold[r].E_lod) <= 1e-13);
   }
   std::filesystem::remove_all(dir);
}

TEST_CASE("runs are deterministic")
{
   const ExperimentConfig c = small_groundstate();
   const std::string a = groundstate_csv(run_groundstate_experiment(c), false);
   const std::string b = groundstate_csv(run_groundstate_experiment(c), false);
   CHECK(a == b);

   ExperimentConfig s = config_from_json({{"problem", "soliton"}});
   s.H = {40.0 / 64.0};
   s.ell = {4};
   s.factor = 4;
   s.T = 0.125;
   s.tau = {1.0 / 64.0, 1.0 / 128.0};
   s.q = 1;
   const std::string da = dynamics_csv(run_dynamics_experiment(s), false);
   const std::string db = dynamics_csv(run_dynamics_experiment(s), false);
   CHECK(da == db);
}

TEST_CASE("dynamics rows with a frozen-space reference")
{
   ExperimentConfig s = config_from_json({{"problem", "soliton"}});
   s.H = {40.0 / 128.0};
   s.ell = {5};
   s.factor = 4;
   s.T = 0.25;
   s.q = 1;
   s.tau = {1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0};
   s.reference_tau = 1.0 / 1024.0;
   s.reference_q = 3;
   const auto rows = run_dynamics_experiment(s);
   REQUIRE(rows.size() == 3);
   CHECK(!rows[0].eoc_l2);
   for (const auto &r : rows)
   {
      CHECK(r.error.empty());
      CHECK(r.energy_drift < 1e-9);
   }
   CHECK(rows[1].rel_l2 < rows[0].rel_l2);
   CHECK(rows[2].rel_l2 < rows[1].rel_l2);
   CHECK(*rows[2].eoc_l2 > 1.5);
}

TEST_CASE("lodinfo counts")
{
   ExperimentConfig c = config_from_json({{"problem", "soliton"}, {"kind", "lodinfo"}});
   c.H = {40.0 / 64.0};
   c.ell = {3};
   c.factor = 4;
   const LodInfo info = lod_info(c);
   CHECK(info.coarse_dofs == 63);
   CHECK(info.fine_dofs == 255);
   CHECK(info.phi_nnz > 0);
   CHECK(info.omega_nnz > 0);
   CHECK(info.omega_bytes > 0.0);
}

TEST_CASE("temporal order is 2q once the space spectrum is resolved by the step")
{
   // H = 40/64: the largest LOD eigenvalue is about 30, so tau <= 1/32 resolves it
   ExperimentConfig s = config_from_json({{"problem", "soliton"}});
   s.H = {40.0 / 64.0};
   s.ell = {5};
   s.factor = 4;
   s.T = 0.5;
   s.tensor_degree = 3;
   s.fp_tol = 1e-14;
   s.tau = {1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0};
   s.reference_tau = 1.0 / 1024.0;
   s.reference_q = 4;
   for (int q : {1, 2})
   {
      s.q = q;
      const auto rows = run_dynamics_experiment(s);
      std::vector<double> tau, err;
      for (const auto &r : rows)
      {
         REQUIRE(r.error.empty());
         tau.push_back(r.tau);
         err.push_back(r.rel_l2);
      }
      const double order = least_squares_order(tau, err);
      MESSAGE("q = " << q << " least-squares order " << order);
      CHECK(order > 2.0 * q - 0.3);
      CHECK(order < 2.0 * q + 0.5);
   }
}

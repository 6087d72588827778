#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lodgp
{

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Point in up to three space dimensions; unused trailing coordinates are 0.
using Point = std::array<double, 3>;

class Error : public std::runtime_error
{
public:
   using std::runtime_error::runtime_error;
};

class InvalidDomainError : public Error { using Error::Error; };
class UnsupportedRuleError : public Error { using Error::Error; };
class NoDofError : public Error { using Error::Error; };
class LengthMismatchError : public Error { using Error::Error; };
class IllPosedPatchError : public Error { using Error::Error; };
class PreallocationError : public Error { using Error::Error; };
class IndexOutOfRangeError : public Error { using Error::Error; };
class LinearizationError : public Error { using Error::Error; };
class SolverError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class CacheError : public Error { using Error::Error; };

/// Ground-state iteration ran out of iterations; carries the energy history.
class NonConvergenceError : public Error
{
public:
   NonConvergenceError(const std::string &msg, std::vector<double> trace)
      : Error(msg), energy_trace(std::move(trace)) {}
   std::vector<double> energy_trace;
};

/// Stage fixed-point iteration diverged or hit its iteration cap.
class FixedPointDivergenceError : public Error
{
public:
   FixedPointDivergenceError(const std::string &msg, double increment)
      : Error(msg), last_increment(increment) {}
   double last_increment;
};

/// Worker count used by the patch-parallel kernels (>= 1).
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [0, n) on num_threads() workers. Each worker takes
/// a contiguous block, so callers that write to slot i get a result that is
/// independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

/// Wall-clock seconds since an arbitrary epoch.
double wall_time();

void require_length(std::size_t got, std::size_t expected, const char *what);

} // namespace lodgp

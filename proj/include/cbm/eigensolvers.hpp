#pragma once

#include "cbm/operators.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <variant>
#include <vector>

namespace cbm {

struct SolverConfig
{
  double        tol = 1e-8;   // relative residual tolerance
  std::int64_t  max_iter = 0; // 0 selects default_max_iter(dimension)
  std::uint64_t seed = 0;     // start-vector seed
  int           stall_window = 50;
};

/// 10 * ceil(log(dim) / 0.01), at least 2000: covers gap ratios up to 0.99.
std::int64_t default_max_iter(Eigen::Index dim);

struct EigenResult
{
  double          value = 0.0;
  Eigen::VectorXd vector;         // unit 2-norm
  double          residual = 0.0; // |M v - value v|_2
  std::int64_t    iterations = 0;
  bool            converged = false;
};

/// Power iteration did not settle on a real simple dominant eigenvalue.
struct NoRealLeader
{
  double       modulus_estimate = 0.0; // geometric-mean growth rate |M^k v|^(1/k) over the trailing window
  std::int64_t iterations = 0;
};

using PowerOutcome = std::variant<EigenResult, NoRealLeader>;

/// Leading (largest-modulus) eigenpair by power iteration with Rayleigh quotient.
/// Returns NoRealLeader when the angle between successive iterates stops
/// improving over `stall_window` iterations (e.g. a dominant complex pair) or
/// max_iter is exhausted.
PowerOutcome power_leading(SparseMatrix<double> const &M, SolverConfig const &cfg);

/// Algebraically smallest eigenpair of a symmetric matrix by power iteration on
/// c 1 - H, with c the Gershgorin upper bound. `converged` is false if the
/// residual contract was not met within max_iter; value then holds the last
/// Rayleigh quotient, which is an upper bound on the true minimum.
EigenResult smallest_symmetric(SparseMatrix<double> const &H, SolverConfig const &cfg);

/// Gershgorin upper bound max_i (H_ii + sum_{j != i} |H_ij|).
double gershgorin_upper(SparseMatrix<double> const &H);

bool is_symmetric(SparseMatrix<double> const &M);

struct Spectrum
{
  std::vector<std::complex<double>> eigenvalues;

  /// Copy sorted by decreasing modulus; ties by (re, im) descending.
  std::vector<std::complex<double>> by_modulus() const;
};

inline constexpr Eigen::Index kDenseCap = 5000;

/// All eigenvalues of a real square matrix (LAPACK dgeev: balancing,
/// Hessenberg reduction, shifted QR). Conjugate pairs are exact conjugates.
Spectrum dense_spectrum(Eigen::MatrixXd const &M, Eigen::Index cap = kDenseCap);

/// Eigenvalues of a real symmetric matrix in increasing order.
Eigen::VectorXd dense_symmetric_eigenvalues(Eigen::MatrixXd const &M, Eigen::Index cap = kDenseCap);

/// |lambda_2| of B' for the instance, from the dense spectrum ordered by modulus.
double second_eigenvalue_bound(CbmInstance const &instance, Eigen::Index cap = kDenseCap);

/// CSV with header "re,im".
void write_spectrum_csv(Spectrum const &spectrum, std::ostream &out);

/// Scatter plot of the spectrum in the complex plane with a circle of the given radius.
void write_spectrum_svg(Spectrum const &spectrum, double radius, std::ostream &out);

} // namespace cbm

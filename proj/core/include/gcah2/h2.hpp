#pragma once
//
// Project     : gcah2
// Module      : h2.hpp
// Description : matrix-vector products, storage accounting, spectral norm
//               estimation and Krylov solvers
//

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcah2/gca.hpp"

namespace gcah2 {

//
// products in external ordering; y = A x
//
Eigen::VectorXd mvm(const H2Matrix& h, const Eigen::VectorXd& x, unsigned threads = 0);
Eigen::VectorXd mvm_transposed(const H2Matrix& h, const Eigen::VectorXd& x, unsigned threads = 0);

Eigen::VectorXd mvm(const FlatGCAMatrix& f, const Eigen::VectorXd& x);
Eigen::VectorXd mvm_transposed(const FlatGCAMatrix& f, const Eigen::VectorXd& x);
Eigen::VectorXd mvm(const GreenMatrix& g, const Eigen::VectorXd& x);
Eigen::VectorXd mvm_transposed(const GreenMatrix& g, const Eigen::VectorXd& x);

// upward pass on a cluster basis: coefficients per cluster from a vector in tree order
std::vector<Eigen::VectorXd> forward_transform(const ClusterTree& tree, const ClusterBasis& basis,
                                               const Eigen::VectorXd& x_tree, unsigned threads = 0);
// downward pass: adds the expansion of the coefficients to a vector in tree order
void backward_transform(const ClusterTree& tree, const ClusterBasis& basis, std::vector<Eigen::VectorXd> coeffs,
                        Eigen::VectorXd& y_tree, unsigned threads = 0);

//
// storage in bytes of 8-byte reals
//
struct StorageReport {
  std::size_t leaf_bases = 0;
  std::size_t transfers = 0;
  std::size_t couplings = 0;
  std::size_t nearfield = 0;
  std::size_t total = 0;
  std::size_t index_overhead = 0;  // pivot lists and permutations, not in total
  std::size_t dense_reference = 0;
};

std::size_t dense_storage_bytes(std::size_t rows, std::size_t cols);
StorageReport storage_report(std::size_t n);
StorageReport storage_report(const H2Matrix& h);
// bases are counted as leaf_bases, the stored pivot rows or column factors as couplings
StorageReport storage_report(const FlatGCAMatrix& f);
StorageReport storage_report(const GreenMatrix& g);
// category,bytes rows
std::string to_csv(const StorageReport& report);

//
// linear operators given by closures
//
struct LinearOperator {
  std::size_t rows = 0, cols = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_transposed;
};

// operators keep a reference to their matrix
LinearOperator dense_operator(const Eigen::MatrixXd& A);
LinearOperator h2_operator(const H2Matrix& h, unsigned threads = 0);
LinearOperator flat_operator(const FlatGCAMatrix& f);
LinearOperator green_operator(const GreenMatrix& g);

struct SpectralError {
  double abs;
  double rel;
};

inline constexpr int default_power_iterations = 100;
inline constexpr std::uint64_t default_power_seed = 20240611;

// power iteration on A^T A
double spectral_norm_estimate(const LinearOperator& A, int iters = default_power_iterations,
                              std::uint64_t seed = default_power_seed);
// |ref - approx|_2 and its ratio to |ref|_2, same iteration and seed for both
SpectralError spectral_error_estimate(const LinearOperator& ref, const LinearOperator& approx,
                                      int iters = default_power_iterations, std::uint64_t seed = default_power_seed);

struct SolveResult {
  Eigen::VectorXd x;
  std::vector<double> residuals;  // relative residual norms, starting with the initial one
  int iterations = 0;
  bool converged = false;
};

// conjugate gradients for symmetric positive definite operators; the
// optional preconditioner is the inverse diagonal
SolveResult cg_solve(const LinearOperator& A, const Eigen::VectorXd& b, double tol, int max_iter,
                     const Eigen::VectorXd* inverse_diagonal = nullptr);

// conjugate gradients on the normal equations A^T A x = A^T b, residuals of A x = b
SolveResult cgnr_solve(const LinearOperator& A, const Eigen::VectorXd& b, double tol, int max_iter);

}  // namespace gcah2

#pragma once

#include "ksfem/sparse/csr.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ksfem::sparse {

/// Symmetric operator S + Z Z^T: a sparse part plus a positive semidefinite
/// low-rank correction (the separable nonlocal term of a Hamiltonian).
class SymmetricOperator {
public:
  SymmetricOperator() = default;
  explicit SymmetricOperator(CsrMatrix sparse, Matrix low_rank = {});

  int size() const noexcept { return sparse_.rows(); }
  const CsrMatrix &sparse() const noexcept { return sparse_; }
  const Matrix &low_rank() const noexcept { return low_rank_; }

  Matrix apply(const Matrix &x) const;
  Vector apply(const Vector &x) const;
  Vector diagonal() const;
  /// Cheap upper bound on the 2-norm (sparse inf-norm plus ||Z||_F^2).
  double norm_bound() const;
  Matrix to_dense() const;

private:
  CsrMatrix sparse_;
  Matrix low_rank_;
};

struct EigenResult {
  Vector eigenvalues;          ///< ascending
  Matrix vectors;              ///< M-orthonormal columns
  Vector residual_norms;       ///< ||A x - lambda M x||_2 per column
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace_history;  ///< sum of Ritz values per iteration
  bool dense = false;
};

class EigenSolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct LobpcgOptions {
  /// Relative residual: ||r_i|| <= tol * (||A|| + |lambda_i| ||M||) ||x_i||.
  double tol = 1e-9;
  int max_iter = 2000;
  std::uint64_t seed = 0x5eed5eedULL;  ///< used only for rank-collapse restarts
};

/// Lowest `nev` eigenpairs of A x = lambda M x by locally optimal block
/// preconditioned conjugate gradients with soft locking. The preconditioner
/// is Jacobi on A + sigma M with sigma = 1 - min_i A_ii / M_ii.
EigenResult lobpcg(const SymmetricOperator &a, const CsrMatrix &m, int nev, const Matrix &x0,
                   const LobpcgOptions &options = {});

/// Dense generalized symmetric eigensolver (Cholesky reduction,
/// tridiagonalization, implicit QL). Returns the `nev` lowest pairs.
EigenResult dense_eig(const Matrix &a, const Matrix &m, int nev);

/// Dimension below which lowest_eigenpairs uses dense_eig.
inline constexpr int kDenseFallbackLimit = 400;

/// Dispatches to dense_eig below kDenseFallbackLimit unknowns, LOBPCG above.
EigenResult lowest_eigenpairs(const SymmetricOperator &a, const CsrMatrix &m, int nev, const Matrix &x0,
                              const LobpcgOptions &options = {});

} // namespace ksfem::sparse

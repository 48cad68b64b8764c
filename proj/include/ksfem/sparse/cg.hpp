#pragma once

#include "ksfem/sparse/csr.hpp"

namespace ksfem::sparse {

enum class Preconditioner { none, jacobi };

struct CgOptions {
  double tol = 1e-10;  ///< relative: stop when ||Ax - b||_2 <= tol ||b||_2
  int max_iter = 10000;
  Preconditioner preconditioner = Preconditioner::jacobi;
};

struct CgStats {
  int iterations = 0;
  double residual = 0.0;  ///< final ||Ax - b||_2 / ||b||_2
};

/// Preconditioned conjugate gradients for SPD A. Throws NonConvergence
/// carrying the last relative residual when max_iter is exhausted.
Vector cg_solve(const CsrMatrix &a, const Vector &b, const CgOptions &options = {}, const Vector *x0 = nullptr,
                CgStats *stats = nullptr);

} // namespace ksfem::sparse

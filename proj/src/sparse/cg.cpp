#include "ksfem/sparse/cg.hpp"

#include <fmt/format.h>

namespace ksfem::sparse {

Vector cg_solve(const CsrMatrix &a, const Vector &b, const CgOptions &options, const Vector *x0, CgStats *stats) {
  const int n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("cg_solve: dimension mismatch");

  Vector inv_diag = Vector::Ones(n);
  if (options.preconditioner == Preconditioner::jacobi) {
    inv_diag = a.diagonal();
    for (int i = 0; i < n; ++i) {
      if (!(inv_diag[i] > 0.0)) throw std::invalid_argument("cg_solve: Jacobi preconditioner needs a positive diagonal");
      inv_diag[i] = 1.0 / inv_diag[i];
    }
  }

  const double bnorm = b.norm();
  Vector x = x0 ? *x0 : Vector::Zero(n);
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return Vector::Zero(n);
  }
  const double target = options.tol * bnorm;

  Vector r = b - a.multiply(x);
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  Vector ap(n);
  double rz = r.dot(z);
  double rnorm = r.norm();
  int it = 0;
  while (rnorm > target) {
    if (it >= options.max_iter)
      throw NonConvergence(fmt::format("cg_solve: no convergence after {} iterations (relative residual {:.3e})", it,
                                       rnorm / bnorm),
                           rnorm / bnorm, it);
    a.multiply(p, ap);
    const double alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    ++it;
    rnorm = r.norm();
    if (rnorm <= target) {
      // guard against drift of the recursive residual
      r = b - a.multiply(x);
      rnorm = r.norm();
      if (rnorm <= target) break;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (stats) *stats = {it, rnorm / bnorm};
  return x;
}

} // namespace ksfem::sparse

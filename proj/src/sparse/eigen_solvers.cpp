#include "ksfem/sparse/eigen_solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <random>

namespace ksfem::sparse {

SymmetricOperator::SymmetricOperator(CsrMatrix sparse, Matrix low_rank)
    : sparse_(std::move(sparse)), low_rank_(std::move(low_rank)) {
  if (low_rank_.size() == 0) low_rank_.resize(sparse_.rows(), 0);
  if (low_rank_.rows() != sparse_.rows()) throw std::invalid_argument("SymmetricOperator: low-rank factor has wrong row count");
}

Matrix SymmetricOperator::apply(const Matrix &x) const {
  Matrix y = sparse_.multiply(x);
  if (low_rank_.cols() > 0) y.noalias() += low_rank_ * (low_rank_.transpose() * x);
  return y;
}

Vector SymmetricOperator::apply(const Vector &x) const {
  Vector y = sparse_.multiply(x);
  if (low_rank_.cols() > 0) y.noalias() += low_rank_ * (low_rank_.transpose() * x);
  return y;
}

Vector SymmetricOperator::diagonal() const {
  Vector d = sparse_.diagonal();
  if (low_rank_.cols() > 0) d += low_rank_.rowwise().squaredNorm();
  return d;
}

double SymmetricOperator::norm_bound() const { return sparse_.norm_inf() + low_rank_.squaredNorm(); }

Matrix SymmetricOperator::to_dense() const {
  Matrix d = sparse_.to_dense();
  if (low_rank_.cols() > 0) d.noalias() += low_rank_ * low_rank_.transpose();
  return d;
}

namespace {

Matrix random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal;
  Matrix r(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index i = 0; i < rows; ++i) r(i, c) = normal(rng);
  return r;
}

// Cholesky QR in the M inner product, applied twice. `mv` must hold M*v on
// entry and is updated consistently. Fails on numerical rank loss.
bool m_orthonormalize(Matrix &v, Matrix &mv) {
  if (v.cols() == 0) return true;
  for (int pass = 0; pass < 2; ++pass) {
    Matrix g = v.transpose() * mv;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) return false;
    const Vector d = llt.matrixL().toDenseMatrix().diagonal();
    if (!(d.minCoeff() > 1e-8 * d.maxCoeff())) return false;
    const Matrix rinv = llt.matrixU().solve(Matrix::Identity(g.rows(), g.cols()));
    v = v * rinv;
    mv = mv * rinv;
  }
  return true;
}

// Removes the M-components of v along the M-orthonormal columns of basis.
void project_out(Matrix &v, const Matrix &basis, const Matrix &m_basis) {
  if (basis.cols() == 0 || v.cols() == 0) return;
  v -= basis * (m_basis.transpose() * v);
}

} // namespace

EigenResult lobpcg(const SymmetricOperator &a, const CsrMatrix &m, int nev, const Matrix &x0,
                   const LobpcgOptions &options) {
  const int n = a.size();
  if (m.rows() != n || m.cols() != n) throw std::invalid_argument("lobpcg: A and M dimensions differ");
  if (nev < 1 || nev > n) throw std::invalid_argument("lobpcg: need 1 <= nev <= dimension");
  if (x0.size() != 0 && x0.rows() != n) throw std::invalid_argument("lobpcg: initial block has wrong row count");

  std::mt19937_64 rng(options.seed);
  Matrix x(n, nev);
  const Eigen::Index given = std::min<Eigen::Index>(x0.cols(), nev);
  if (given > 0) x.leftCols(given) = x0.leftCols(given);
  if (given < nev) x.rightCols(nev - given) = random_block(n, nev - given, rng);

  Matrix mx = m.multiply(x);
  if (!m_orthonormalize(x, mx)) {
    x = random_block(n, nev, rng);
    mx = m.multiply(x);
    if (!m_orthonormalize(x, mx)) throw EigenSolverError("lobpcg: initial block is rank deficient");
  }
  Matrix ax = a.apply(x);

  const Vector da = a.diagonal(), dm = m.diagonal();
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) min_ratio = std::min(min_ratio, da[i] / dm[i]);
  const double sigma = 1.0 - min_ratio;
  const Vector precond = (da + sigma * dm).cwiseInverse();
  const double norm_a = a.norm_bound(), norm_m = m.norm_inf();

  EigenResult result;
  Vector theta;
  auto rayleigh_ritz = [&](const Matrix &s, const Matrix &as, const Matrix &ms) {
    Matrix h = s.transpose() * as;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Matrix c = es.eigenvectors().leftCols(nev);
    theta = es.eigenvalues().head(nev);
    x = s * c;
    ax = as * c;
    mx = ms * c;
    return es.eigenvectors();
  };
  rayleigh_ritz(Matrix(x), Matrix(ax), Matrix(mx));

  Matrix p(n, 0), ap(n, 0), mp(n, 0);
  bool restarted = false;
  Vector res(nev);
  auto residuals = [&] {
    const Matrix r = ax - mx * theta.asDiagonal();
    for (int j = 0; j < nev; ++j) res[j] = r.col(j).norm();
    return r;
  };
  auto is_converged = [&](int j) {
    return res[j] <= options.tol * (norm_a + std::abs(theta[j]) * norm_m) * x.col(j).norm();
  };

  int it = 0;
  for (;; ++it) {
    Matrix r = residuals();
    std::vector<int> active;
    for (int j = 0; j < nev; ++j)
      if (!is_converged(j)) active.push_back(j);

    if (active.empty() || it % 50 == 49) {
      // refresh products to shed accumulated drift, then re-test
      mx = m.multiply(x);
      if (!m_orthonormalize(x, mx)) throw EigenSolverError("lobpcg: iterate block lost rank");
      ax = a.apply(x);
      rayleigh_ritz(Matrix(x), Matrix(ax), Matrix(mx));
      r = residuals();
      active.clear();
      for (int j = 0; j < nev; ++j)
        if (!is_converged(j)) active.push_back(j);
      if (active.empty()) {
        result.converged = true;
        break;
      }
    }
    if (it >= options.max_iter) break;

    const auto na = static_cast<Eigen::Index>(active.size());
    Matrix w(n, na);
    for (Eigen::Index k = 0; k < na; ++k) w.col(k) = precond.cwiseProduct(r.col(active[static_cast<std::size_t>(k)]));
    project_out(w, x, mx);
    Matrix mw = m.multiply(w);
    if (!m_orthonormalize(w, mw)) {
      if (restarted) throw EigenSolverError("lobpcg: search block collapsed twice");
      restarted = true;
      w = random_block(n, na, rng);
      project_out(w, x, mx);
      mw = m.multiply(w);
      if (!m_orthonormalize(w, mw)) throw EigenSolverError("lobpcg: search block collapsed after restart");
      p.resize(n, 0);
      ap.resize(n, 0);
      mp.resize(n, 0);
    }
    Matrix aw = a.apply(w);

    if (p.cols() > 0) {
      project_out(p, x, mx);
      project_out(p, w, mw);
      mp = m.multiply(p);
      if (m_orthonormalize(p, mp)) {
        ap = a.apply(p);
      } else {
        p.resize(n, 0);
        ap.resize(n, 0);
        mp.resize(n, 0);
      }
    }

    const Eigen::Index ns = nev + na + p.cols();
    Matrix s(n, ns), as(n, ns), ms(n, ns);
    s << x, w, p;
    as << ax, aw, ap;
    ms << mx, mw, mp;

    const Matrix c = rayleigh_ritz(s, as, ms);
    // new conjugate directions: W and P components of the active Ritz vectors
    const Eigen::Index tail = ns - nev;
    Matrix cp(tail, na);
    for (Eigen::Index k = 0; k < na; ++k) cp.col(k) = c.col(active[static_cast<std::size_t>(k)]).tail(tail);
    p = s.rightCols(tail) * cp;
    ap = as.rightCols(tail) * cp;
    mp = ms.rightCols(tail) * cp;

    result.trace_history.push_back(theta.sum());
  }

  if (!result.converged) {
    int open = 0;
    for (int j = 0; j < nev; ++j) open += is_converged(j) ? 0 : 1;
    throw EigenSolverError(fmt::format("lobpcg: {} of {} eigenpairs unconverged after {} iterations (worst residual {:.3e})",
                                       open, nev, it, res.maxCoeff()));
  }
  result.eigenvalues = theta;
  result.vectors = x;
  result.residual_norms = res;
  result.iterations = it;
  return result;
}

EigenResult dense_eig(const Matrix &a, const Matrix &m, int nev) {
  const auto n = a.rows();
  if (a.cols() != n || m.rows() != n || m.cols() != n) throw std::invalid_argument("dense_eig: dimension mismatch");
  if (n > 4000) throw std::invalid_argument("dense_eig: dimension above 4000");
  if (nev < 1 || nev > n) throw std::invalid_argument("dense_eig: need 1 <= nev <= dimension");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw EigenSolverError("dense_eig: M is not positive definite");

  // Reduce to C = L^{-1} A L^{-T}, solve the standard problem, back-transform.
  Matrix c = llt.matrixL().solve(a);
  c = llt.matrixL().solve(c.transpose()).transpose().eval();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  if (es.info() != Eigen::Success) throw EigenSolverError("dense_eig: tridiagonal QL iteration failed");

  EigenResult r;
  r.dense = true;
  r.converged = true;
  r.eigenvalues = es.eigenvalues().head(nev);
  r.vectors = llt.matrixU().solve(es.eigenvectors().leftCols(nev));
  const Matrix res = a * r.vectors - m * r.vectors * r.eigenvalues.asDiagonal();
  r.residual_norms = res.colwise().norm().transpose();
  return r;
}

EigenResult lowest_eigenpairs(const SymmetricOperator &a, const CsrMatrix &m, int nev, const Matrix &x0,
                              const LobpcgOptions &options) {
  if (a.size() < kDenseFallbackLimit) return dense_eig(a.to_dense(), m.to_dense(), nev);
  return lobpcg(a, m, nev, x0, options);
}

} // namespace ksfem::sparse

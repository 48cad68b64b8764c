#include "ksfem/analysis/hessian.hpp"

#include "ksfem/fem/assembly.hpp"
#include "ksfem/sparse/cg.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace ksfem::analysis {

namespace {

const sparse::CgOptions kMassSolve{1e-13, 5000, sparse::Preconditioner::jacobi};

Matrix symmetric_multipliers(const ksdft::KohnShamModel &model, const Matrix &phi) {
  const Matrix l = model.lagrange_multipliers(phi);
  return 0.5 * (l + l.transpose());
}

Matrix mass_solve(const sparse::CsrMatrix &m, const Matrix &r) {
  Matrix g(r.rows(), r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j) g.col(j) = sparse::cg_solve(m, Vector(r.col(j)), kMassSolve);
  return g;
}

} // namespace

SecondOrderOperator::SecondOrderOperator(const ksdft::KohnShamModel &model, const Matrix &phi)
    : model_(model), phi_(phi), lambda_(symmetric_multipliers(model, phi)),
      phi_q_(fem::evaluate_block(model.space(), phi)), a_(model.hamiltonian_for_density(model.density(phi))),
      xc2_(model.xc_second(model.density(phi))) {}

Matrix SecondOrderOperator::project(const Matrix &x) const {
  return x - phi_ * (phi_.transpose() * model_.mass().multiply(x));
}

double SecondOrderOperator::tangent_defect(const Matrix &x) const {
  const double scale = std::sqrt(std::max(0.0, (x.array() * model_.mass().multiply(x).array()).sum()));
  if (scale == 0.0) return 0.0;
  return (phi_.transpose() * model_.mass().multiply(x)).cwiseAbs().maxCoeff() / scale;
}

Matrix SecondOrderOperator::dual(const Matrix &psi) const {
  if (psi.rows() != phi_.rows() || psi.cols() != phi_.cols())
    throw std::invalid_argument("second-order operator: block has the wrong shape");
  const auto &space = model_.space();
  Matrix r = a_.apply(psi) - model_.mass().multiply(psi) * lambda_.transpose();

  const bool xc = model_.system().xc.active();
  const auto *hartree = model_.hartree();
  if (!xc && !hartree) return r;

  // σ = Σⱼ φⱼψⱼ at the density quadrature points
  const Matrix psi_q = fem::evaluate_block(space, psi);
  fem::QuadField sigma{(phi_q_.array() * psi_q.array()).rowwise().sum()};
  fem::QuadField f{Vector::Zero(sigma.values.size())};
  if (xc) f.values += 2.0 * xc2_.values.cwiseProduct(sigma.values);
  if (hartree) f.values += 2.0 * hartree->variational_potential(sigma).values;
  for (Eigen::Index i = 0; i < phi_.cols(); ++i)
    r.col(i) += fem::load_vector(space, fem::QuadField{f.values.cwiseProduct(phi_q_.col(i))});
  return r;
}

Matrix SecondOrderOperator::apply(const Matrix &psi) const { return project(mass_solve(model_.mass(), dual(psi))); }

double SecondOrderOperator::form(const Matrix &psi, const Matrix &gamma) const {
  return (gamma.array() * dual(psi).array()).sum();
}

Matrix hessian_apply(const ksdft::KohnShamModel &model, const ksdft::GroundState &gs, const Matrix &psi) {
  const SecondOrderOperator op(model, gs.orbitals.coeffs);
  if (op.tangent_defect(psi) > 1e-8) throw std::invalid_argument("hessian_apply: direction is not in the tangent space");
  return op.apply(psi);
}

Matrix lagrangian_gradient(const ksdft::KohnShamModel &model, const Matrix &x, const Matrix &lambda) {
  return 2.0 * (model.apply_hamiltonian(x) - model.mass().multiply(x) * lambda);
}

Matrix hessian_apply_fd(const ksdft::KohnShamModel &model, const ksdft::GroundState &gs, const Matrix &psi,
                        double step) {
  const Matrix &phi = gs.orbitals.coeffs;
  const Matrix lambda = symmetric_multipliers(model, phi);
  const Matrix r = (lagrangian_gradient(model, phi + step * psi, lambda) -
                    lagrangian_gradient(model, phi - step * psi, lambda)) /
                   (4.0 * step);
  const Matrix g = mass_solve(model.mass(), r);
  return g - phi * (phi.transpose() * model.mass().multiply(g));
}

InfSupResult infsup_audit(const ksdft::KohnShamModel &model, const ksdft::GroundState &gs, int subspace_dim) {
  if (subspace_dim < 1) throw std::invalid_argument("infsup_audit: subspace_dim must be at least 1");
  const Matrix &phi = gs.orbitals.coeffs;
  const int n = static_cast<int>(phi.cols());
  if (n + subspace_dim > model.space().n_dofs())
    throw std::invalid_argument("infsup_audit: subspace exceeds the number of degrees of freedom");
  const SecondOrderOperator op(model, phi);

  const auto a = model.hamiltonian_for_density(model.density(phi));
  Matrix x0 = ksdft::atomic_guess(model, n + subspace_dim);
  x0.leftCols(n) = phi;
  const auto eig = sparse::lowest_eigenpairs(a, model.mass(), n + subspace_dim, x0, {1e-9, 5000});
  const Matrix u = ksdft::orthonormalize_block(model.mass(), op.project(eig.vectors.rightCols(subspace_dim)));

  const int dim = n * subspace_dim;
  // basis element (a, i): column i equals u_a, other columns zero
  std::vector<Matrix> duals;
  duals.reserve(static_cast<std::size_t>(dim));
  for (int av = 0; av < subspace_dim; ++av)
    for (int i = 0; i < n; ++i) {
      Matrix e = Matrix::Zero(phi.rows(), n);
      e.col(i) = u.col(av);
      duals.push_back(op.dual(e));
    }
  Matrix h(dim, dim);
  for (int p = 0; p < dim; ++p)
    for (int q = 0; q < dim; ++q) {
      const int bq = q / n, jq = q % n;
      h(q, p) = u.col(bq).dot(duals[static_cast<std::size_t>(p)].col(jq));
    }
  h = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  InfSupResult out;
  out.dimension = dim;
  out.gamma = es.eigenvalues().cwiseAbs().minCoeff();
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2 * n, dim); ++k) out.smallest_eigenvalues.push_back(es.eigenvalues()[k]);
  out.positive = out.gamma > 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  return out;
}

} // namespace ksfem::analysis

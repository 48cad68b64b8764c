#include "ksfem/ksdft/model.hpp"

#include "ksfem/fem/assembly.hpp"
#include "ksfem/log.hpp"

#include <stdexcept>

namespace ksfem::ksdft {

KohnShamModel::KohnShamModel(physics::ModelSystem system, std::shared_ptr<const fem::FeSpace> space)
    : system_(std::move(system)), space_(std::move(space)) {
  if (!space_) throw std::invalid_argument("KohnShamModel: null space");
  system_.validate();
  if (system_.n_electrons > space_->n_dofs())
    throw std::invalid_argument("KohnShamModel: more electrons than degrees of freedom");
  stiffness_ = fem::assemble_stiffness(*space_);
  mass_ = fem::assemble_mass(*space_);
  projector_loads_ = physics::projector_loads(system_.pseudo, *space_);
  vloc_ = fem::sample(*space_, [&](const Point &x) { return physics::local_potential_at(system_.pseudo, x); });
  if (system_.hartree) hartree_ = std::make_unique<physics::HartreeSolver>(space_, system_.hartree_rule);
}

fem::DensityField KohnShamModel::density(const Matrix &phi) const { return fem::density_from_block(*space_, phi); }

Potentials KohnShamModel::potentials(const fem::DensityField &rho) const {
  Potentials p;
  p.effective = vloc_;
  if (hartree_) {
    const auto h = hartree_->solve(rho);
    p.effective.values += h.variational.values;
    p.hartree_energy = h.energy;
  }
  if (system_.xc.active())
    for (Eigen::Index q = 0; q < p.effective.values.size(); ++q)
      p.effective.values[q] += system_.xc.potential(std::max(rho.values[q], 0.0));
  return p;
}

fem::QuadField KohnShamModel::xc_second(const fem::DensityField &rho) const {
  fem::QuadField out{Vector::Zero(rho.values.size())};
  if (system_.xc.active())
    for (Eigen::Index q = 0; q < rho.values.size(); ++q) out.values[q] = system_.xc.second(std::max(rho.values[q], 0.0));
  return out;
}

double KohnShamModel::orthonormality_defect(const Matrix &phi) const {
  const Matrix g = phi.transpose() * mass_.multiply(phi);
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

EnergyTerms KohnShamModel::energy_terms(const Matrix &phi) const {
  if (phi.rows() != space_->n_dofs()) throw std::invalid_argument("energy: orbital block has wrong row count");
  if (const double d = orthonormality_defect(phi); d > 1e-8) log_warn("energy: orbitals off the constraint set by {:.2e}", d);
  const auto rho = density(phi);
  if (rho.values.size() > 0 && rho.values.minCoeff() < -1e-12)
    throw std::logic_error("energy: negative density at a quadrature point");

  EnergyTerms e;
  const Matrix kphi = stiffness_.multiply(phi);
  e.kinetic = 0.5 * (phi.array() * kphi.array()).sum();
  e.local = fem::integrate_product(*space_, vloc_, rho);
  if (projector_loads_.cols() > 0) e.nonlocal = (projector_loads_.transpose() * phi).squaredNorm();
  if (hartree_) e.hartree = hartree_->solve(rho).energy;
  if (system_.xc.active()) {
    fem::QuadField exc{Vector(rho.values.size())};
    for (Eigen::Index q = 0; q < rho.values.size(); ++q) exc.values[q] = system_.xc.energy_density(std::max(rho.values[q], 0.0));
    e.xc = fem::integrate(*space_, exc);
  }
  return e;
}

sparse::SymmetricOperator KohnShamModel::hamiltonian(const fem::QuadField &effective) const {
  const auto w = fem::assemble_weighted_mass(*space_, effective);
  return sparse::SymmetricOperator(stiffness_.scaled(0.5).added(w, 1.0), projector_loads_);
}

sparse::SymmetricOperator KohnShamModel::hamiltonian_for_density(const fem::DensityField &rho) const {
  return hamiltonian(potentials(rho).effective);
}

Matrix KohnShamModel::apply_hamiltonian(const Matrix &phi) const {
  return hamiltonian_for_density(density(phi)).apply(phi);
}

Matrix KohnShamModel::lagrange_multipliers(const Matrix &phi) const { return phi.transpose() * apply_hamiltonian(phi); }

Matrix orthonormalize_block(const sparse::CsrMatrix &mass, const Matrix &block) {
  Matrix q = block;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    Vector v = q.col(j);
    const double original = std::sqrt(std::max(0.0, v.dot(mass.multiply(v))));
    if (!(original > 0.0) || !std::isfinite(original))
      throw std::runtime_error(fmt::format("orthonormalize: column {} has zero M-norm", j));
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < j; ++k) {
        const Vector mk = mass.multiply(Vector(q.col(k)));
        v -= mk.dot(v) * q.col(k);
      }
    const double nrm = std::sqrt(std::max(0.0, v.dot(mass.multiply(v))));
    if (nrm < 1e-12 * original)
      throw std::runtime_error(fmt::format("orthonormalize: block is rank deficient at column {}", j));
    q.col(j) = v / nrm;
  }
  return q;
}

OrbitalSet orthonormalize(std::shared_ptr<const fem::FeSpace> space, const sparse::CsrMatrix &mass, const Matrix &block) {
  return {std::move(space), orthonormalize_block(mass, block)};
}

} // namespace ksfem::ksdft

#pragma once

#include "ksfem/fem/space.hpp"
#include "ksfem/physics/system.hpp"
#include "ksfem/sparse/csr.hpp"
#include "ksfem/sparse/eigen_solvers.hpp"

#include <memory>
#include <optional>

namespace ksfem::ksdft {

/// N orbitals as columns of an n_dofs x N coefficient block. Members of the
/// constraint set satisfy ΦᵀMΦ = I.
struct OrbitalSet {
  std::shared_ptr<const fem::FeSpace> space;
  Matrix coeffs;

  int count() const noexcept { return static_cast<int>(coeffs.cols()); }
};

struct EnergyTerms {
  double kinetic = 0.0;   ///< ½ Σ φᵢᵀKφᵢ
  double local = 0.0;     ///< ∫ V_loc ρ
  double nonlocal = 0.0;  ///< Σᵢⱼ (φᵢ, ζⱼ)²
  double hartree = 0.0;   ///< ½ D(ρ, ρ)
  double xc = 0.0;        ///< ∫ ℰ(ρ)
  double total() const noexcept { return kinetic + local + nonlocal + hartree + xc; }
};

/// Density-dependent potentials at the density quadrature points.
struct Potentials {
  fem::QuadField effective;  ///< V_loc + v_H + ℰ′(ρ)
  double hartree_energy = 0.0;
};

/// A model system bound to a discretization: the discrete energy functional,
/// its gradient 2A_ΦΦ and the Hamiltonian A_ρ = ½K + W(V_loc + v_H[ρ] + ℰ′(ρ)) + ZZᵀ.
///
/// v_H is the variational Hartree potential, so 2A_ΦΦ is the exact gradient
/// of energy() on the discrete space.
class KohnShamModel {
public:
  KohnShamModel(physics::ModelSystem system, std::shared_ptr<const fem::FeSpace> space);

  const physics::ModelSystem &system() const noexcept { return system_; }
  const fem::FeSpace &space() const noexcept { return *space_; }
  std::shared_ptr<const fem::FeSpace> space_ptr() const noexcept { return space_; }
  int n_electrons() const noexcept { return system_.n_electrons; }
  bool is_linear() const noexcept { return system_.is_linear(); }

  const sparse::CsrMatrix &stiffness() const noexcept { return stiffness_; }
  const sparse::CsrMatrix &mass() const noexcept { return mass_; }
  /// Projector load vectors z_j (n_dofs x M).
  const Matrix &projector_loads() const noexcept { return projector_loads_; }
  const fem::QuadField &local_potential() const noexcept { return vloc_; }
  /// Null when the system has no Hartree term.
  const physics::HartreeSolver *hartree() const noexcept { return hartree_.get(); }

  fem::DensityField density(const Matrix &phi) const;
  Potentials potentials(const fem::DensityField &rho) const;
  /// ℰ″(ρ) at the quadrature points (zero without exchange-correlation).
  fem::QuadField xc_second(const fem::DensityField &rho) const;

  EnergyTerms energy_terms(const Matrix &phi) const;
  double energy(const Matrix &phi) const { return energy_terms(phi).total(); }

  sparse::SymmetricOperator hamiltonian(const fem::QuadField &effective) const;
  sparse::SymmetricOperator hamiltonian_for_density(const fem::DensityField &rho) const;
  /// A_Φ Φ with A built from Φ's own density.
  Matrix apply_hamiltonian(const Matrix &phi) const;

  /// Λ = ΦᵀA_ΦΦ, i.e. Λ_ij = φⱼᵀA_Φφᵢ.
  Matrix lagrange_multipliers(const Matrix &phi) const;

  /// Orthonormality defect ‖ΦᵀMΦ − I‖_max.
  double orthonormality_defect(const Matrix &phi) const;

private:
  physics::ModelSystem system_;
  std::shared_ptr<const fem::FeSpace> space_;
  sparse::CsrMatrix stiffness_, mass_;
  Matrix projector_loads_;
  fem::QuadField vloc_;
  std::unique_ptr<physics::HartreeSolver> hartree_;
};

/// Modified Gram-Schmidt in the M inner product (two passes). Throws
/// std::runtime_error when a column's M-norm after projection falls below
/// 1e-12 of its original M-norm.
OrbitalSet orthonormalize(std::shared_ptr<const fem::FeSpace> space, const sparse::CsrMatrix &mass, const Matrix &block);
Matrix orthonormalize_block(const sparse::CsrMatrix &mass, const Matrix &block);

} // namespace ksfem::ksdft

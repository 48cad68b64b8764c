#pragma once

#include "ksfem/ksdft/scf.hpp"

#include <vector>

namespace ksfem::analysis {

/// The second-order form of the Lagrangian at Φ,
///
///   ℒ(Ψ, Γ) = Σᵢ ⟨A_Φψᵢ, γᵢ⟩ − Σᵢⱼ λᵢⱼ(ψⱼ, γᵢ)
///             + 2∫ℰ″(ρ)(Σⱼφⱼψⱼ)(Σᵢφᵢγᵢ) + 2D(Σⱼφⱼψⱼ, Σᵢφᵢγᵢ),
///
/// with Λ = ΦᵀA_ΦΦ and D the discrete (symmetrized) Coulomb form.
class SecondOrderOperator {
public:
  SecondOrderOperator(const ksdft::KohnShamModel &model, const Matrix &phi);

  const Matrix &orbitals() const noexcept { return phi_; }
  const Matrix &multipliers() const noexcept { return lambda_; }

  /// Coefficient block R with ℒ(Ψ, Γ) = Σ Γ ⊙ R for every Γ.
  Matrix dual(const Matrix &psi) const;
  /// M⁻¹R projected onto the tangent space {ΦᵀMX = 0}.
  Matrix apply(const Matrix &psi) const;
  double form(const Matrix &psi, const Matrix &gamma) const;

  /// X − Φ(ΦᵀMX).
  Matrix project(const Matrix &x) const;
  /// ‖ΦᵀMX‖_max relative to ‖X‖₀.
  double tangent_defect(const Matrix &x) const;

private:
  const ksdft::KohnShamModel &model_;
  Matrix phi_, lambda_, phi_q_;
  sparse::SymmetricOperator a_;
  fem::QuadField xc2_;
};

/// Riesz representative of Γ ↦ ℒ(Ψ, Γ) in the tangent space at the ground state.
/// Throws std::invalid_argument when Ψ is not tangent within 1e-8.
Matrix hessian_apply(const ksdft::KohnShamModel &model, const ksdft::GroundState &gs, const Matrix &psi);

/// 2(A_X X − MXΛ), the gradient of the Lagrangian with Λ held fixed.
Matrix lagrangian_gradient(const ksdft::KohnShamModel &model, const Matrix &x, const Matrix &lambda);

/// Central finite difference of the Lagrangian gradient along Ψ, halved,
/// mapped to the tangent space like hessian_apply.
Matrix hessian_apply_fd(const ksdft::KohnShamModel &model, const ksdft::GroundState &gs, const Matrix &psi,
                        double step = 1e-4);

struct InfSupResult {
  double gamma = 0.0;                    ///< smallest singular value of the restricted form
  std::vector<double> smallest_eigenvalues;  ///< ascending, at most 2N of them
  int dimension = 0;                      ///< N · subspace_dim
  bool positive = false;
};

/// Restricts ℒ to span{u_a e_iᵀ}, with u_a the next `subspace_dim` unoccupied
/// eigenvectors of A_Φ (M-orthogonalized against Φ), and reports the smallest
/// singular value of the resulting symmetric matrix.
InfSupResult infsup_audit(const ksdft::KohnShamModel &model, const ksdft::GroundState &gs, int subspace_dim);

} // namespace ksfem::analysis

#pragma once

#include "ksfem/analysis/cross_mesh.hpp"
#include "ksfem/ksdft/model.hpp"

namespace ksfem::analysis {

/// Best orthogonal U in min_U ‖ΨU − Φ‖₀ and the distances after alignment.
struct Alignment {
  Matrix U;
  double aligned_distance_L2 = 0.0;
  double aligned_distance_H1 = 0.0;
  double unaligned_distance_L2 = 0.0;
  /// ΨᵀMΦ is (numerically) rank deficient: the subspaces are partly orthogonal
  /// and U is not unique.
  bool degenerate = false;
};

/// U = XYᵀ from the SVD ΨᵀMΦ = XΣYᵀ.
Matrix procrustes_rotation(const Matrix &overlap, bool *degenerate = nullptr);

/// Ψ and Φ on the same space.
Alignment procrustes_align(const ksdft::OrbitalSet &phi, const ksdft::OrbitalSet &psi);
/// Ψ on the coarse space of `cross`, Φ on its fine space.
Alignment procrustes_align(const CrossQuadrature &cross, const Matrix &phi_fine, const Matrix &psi_coarse);

/// Ψ = Φ(I + S) + W with S symmetric and WᵀMΦ = 0.
struct TangentSplit {
  Matrix S;
  Matrix W;
  /// ‖Ψ − Φ − ΦS − W‖₀, nonzero only when ΦᵀMΨ is not symmetric.
  double reconstruction_residual = 0.0;
  double w_norm_L2 = 0.0;  ///< ‖W‖₀ (Frobenius)
};

/// Requires ‖Ψ − Φ‖₀ < 1; Ψ is expected to be Procrustes-aligned to Φ.
TangentSplit tangent_split(const sparse::CsrMatrix &mass, const Matrix &phi, const Matrix &psi);

} // namespace ksfem::analysis

#pragma once

#include "ksfem/fem/assembly.hpp"
#include "ksfem/fem/space.hpp"

#include <memory>
#include <vector>

namespace ksfem::analysis {

/// Quadrature on the common refinement of two uniform meshes of the same box.
///
/// Every fine tetrahedron is clipped against the coarse tetrahedra it
/// overlaps, so both spaces' functions are polynomial on each piece and
/// products of them are integrated exactly. When the fine mesh nests in the
/// coarse one no clipping happens and the pieces are the fine elements.
class CrossQuadrature {
public:
  CrossQuadrature(std::shared_ptr<const fem::FeSpace> coarse, std::shared_ptr<const fem::FeSpace> fine);

  const fem::FeSpace &coarse() const noexcept { return *coarse_; }
  const fem::FeSpace &fine() const noexcept { return *fine_; }
  std::size_t size() const noexcept { return weights_.size(); }
  /// Number of fine elements that had to be clipped.
  std::size_t clipped_elements() const noexcept { return clipped_; }
  double total_weight() const;

  /// Overlap matrix (aᵢ, bⱼ) for coarse coefficient columns a and fine columns b.
  Matrix overlap(const Matrix &a, const Matrix &b) const;
  /// Frobenius L² and H¹ norms of a − b, column by column.
  fem::ErrorNorms difference(const Matrix &a, const Matrix &b) const;

private:
  std::shared_ptr<const fem::FeSpace> coarse_, fine_;
  std::vector<Point> points_;
  std::vector<double> weights_;
  std::vector<int> coarse_tet_, fine_tet_;
  std::size_t clipped_ = 0;
};

/// Values and gradients of the coefficient columns of `coeffs` at x inside element t.
void evaluate_block_at(const fem::FeSpace &space, std::size_t t, const Point &x, const Matrix &coeffs, Vector &values,
                       Matrix &gradients);

} // namespace ksfem::analysis

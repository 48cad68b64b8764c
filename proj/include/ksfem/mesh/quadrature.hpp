#pragma once

#include <array>
#include <vector>

namespace ksfem::mesh {

/// Symmetric rule on the reference tetrahedron. Points are barycentric and
/// weights are normalized to sum to one, so the physical weight of a point is
/// volume * weight.
struct Quadrature {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
  int order = 0;

  std::size_t size() const noexcept { return weights.size(); }
};

/// Positive-weight rule exact for polynomials of total degree `order`,
/// 1 <= order <= 6. Orders 3-5 share the 14-point degree-5 rule.
Quadrature quadrature_rule(int order);

} // namespace ksfem::mesh

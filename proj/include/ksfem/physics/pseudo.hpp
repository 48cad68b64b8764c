#pragma once

#include "ksfem/fem/space.hpp"

#include <string>
#include <vector>

namespace ksfem::physics {

struct Nucleus {
  Point position{};
  double charge = 0.0;       ///< valence charge Z
  double core_radius = 1.0;  ///< erf screening radius r_c
};

enum class ProjectorKind { s, px, py, pz };

/// Separable projector ζ = sqrt(strength) · g, with g an L²-normalized
/// Gaussian (s) or first-moment Gaussian (p) of half-width `width`.
struct Projector {
  Point center{};
  double width = 1.0;
  double strength = 0.0;
  ProjectorKind kind = ProjectorKind::s;
};

struct PseudoSpec {
  std::vector<Nucleus> nuclei;
  std::vector<Projector> projectors;
  /// Optional confining term ½ω²|x|² added to V_loc (0 disables it).
  double harmonic_omega = 0.0;

  std::size_t num_projectors() const noexcept { return projectors.size(); }
  /// Throws std::invalid_argument on non-positive radii/widths or negative strengths.
  void validate() const;
};

std::string to_string(ProjectorKind kind);
ProjectorKind projector_kind_from_string(const std::string &name);

/// V_loc(x) = Σ −Z erf(|x−R|/r_c)/|x−R| (+ ½ω²|x|²); −2Z/(√π r_c) at x = R.
double local_potential_at(const PseudoSpec &spec, const Point &x);
double projector_value(const Projector &p, const Point &x);

/// Load vectors z_j = (∫ ζ_j b_a)_a of every projector, one column each.
Matrix projector_loads(const PseudoSpec &spec, const fem::FeSpace &space);

/// V_nl Φ = Σ_j z_j (z_jᵀ Φ) for a block of coefficient columns.
Matrix apply_nonlocal(const Matrix &loads, const Matrix &block);

} // namespace ksfem::physics

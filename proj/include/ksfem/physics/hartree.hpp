#pragma once

#include "ksfem/fem/space.hpp"
#include "ksfem/sparse/cg.hpp"
#include "ksfem/sparse/csr.hpp"

#include <memory>
#include <string>

namespace ksfem::physics {

enum class BoundaryRule { multipole2, direct };

std::string to_string(BoundaryRule rule);
BoundaryRule boundary_rule_from_string(const std::string &name);

struct HartreeSolution {
  /// Lifted finite-element solution of −ΔV = 4πρ: free-dof coefficients...
  fem::FeFunction potential;
  /// ...and the Dirichlet data g on the boundary nodes (boundary-node order).
  Vector boundary_values;
  /// V at the density quadrature points, boundary lift included.
  fem::QuadField values;
  /// Potential v with D_h(σ, ρ) = ∫ σ v for every σ: the symmetric
  /// (variational) counterpart of `values`. Used in the Hamiltonian.
  fem::QuadField variational;
  /// ½ D_h(ρ, ρ) = ½ ∫ ρ V.
  double energy = 0.0;
};

/// Poisson solver for the Hartree potential on a fixed space.
///
/// The discrete Coulomb form D_h(σ, ρ) = ∫ σ V[ρ] is not exactly symmetric
/// once the Dirichlet data is lifted from a boundary rule, so the solver also
/// returns the potential of its symmetric part ½(D_h(σ,ρ) + D_h(ρ,σ)). The
/// diagonal D_h(ρ,ρ), and hence the energy, is unchanged.
class HartreeSolver {
public:
  HartreeSolver(std::shared_ptr<const fem::FeSpace> space, BoundaryRule rule = BoundaryRule::multipole2,
                double cg_tol = 1e-12);

  const fem::FeSpace &space() const noexcept { return *space_; }
  BoundaryRule rule() const noexcept { return rule_; }

  HartreeSolution solve(const fem::DensityField &rho) const;
  /// Only the variational potential (two Poisson solves, no bookkeeping).
  fem::QuadField variational_potential(const fem::DensityField &rho) const;

  /// Dirichlet data g(x_b) ≈ ∫ ρ(y)/|x_b − y| dy on the boundary nodes.
  Vector boundary_data(const fem::DensityField &rho) const;

private:
  struct Parts {
    Vector u0;  // K⁻¹ b_f
    Vector u1;  // K⁻¹ K_fb g
    Vector g;   // boundary data
    Vector c;   // b_b − K_bf u0
  };
  Parts solve_parts(const fem::DensityField &rho) const;
  fem::QuadField adjoint_field(const Vector &c) const;

  std::shared_ptr<const fem::FeSpace> space_;
  BoundaryRule rule_;
  sparse::CgOptions cg_;
  sparse::CsrMatrix k_ff_, k_fb_;
  std::vector<Point> boundary_coords_;
};

HartreeSolution solve_hartree(std::shared_ptr<const fem::FeSpace> space, const fem::DensityField &rho,
                              BoundaryRule rule = BoundaryRule::multipole2);

/// Direct double sum D(ρ₁, ρ₂) = Σ_{p≠q} w_p w_q ρ₁(x_p) ρ₂(x_q)/|x_p − x_q|
/// plus a self term that treats each quadrature cell as a uniform ball of
/// its own volume. O(P²): a test oracle for small meshes only.
double coulomb_D(const fem::FeSpace &space, const fem::DensityField &rho1, const fem::DensityField &rho2);

} // namespace ksfem::physics

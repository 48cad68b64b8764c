#pragma once

#include "ksfem/fem/space.hpp"
#include "ksfem/sparse/csr.hpp"

#include <functional>

namespace ksfem::fem {

using sparse::CsrMatrix;

/// K_ij = ∫ ∇b_i·∇b_j over free dofs.
CsrMatrix assemble_stiffness(const FeSpace &space);
/// M_ij = ∫ b_i b_j over free dofs.
CsrMatrix assemble_mass(const FeSpace &space);
/// ∫ w b_i b_j with w given on the density quadrature set.
CsrMatrix assemble_weighted_mass(const FeSpace &space, const QuadField &w);
/// Stiffness block coupling free rows to boundary-node columns
/// (n_dofs x n_boundary), used to lift Dirichlet data.
CsrMatrix assemble_boundary_coupling(const FeSpace &space);

/// ∫ f b_a for the free dofs.
Vector load_vector(const FeSpace &space, const QuadField &f);
/// ∫ f b_a for every node (free and boundary), indexed by node.
Vector load_vector_all_nodes(const FeSpace &space, const QuadField &f);
/// Column-wise load vectors of a block of quadrature fields (n_qp x k).
Matrix load_block(const FeSpace &space, const Matrix &f);

/// Values of a free-dof coefficient vector at the density quadrature points.
QuadField evaluate(const FeSpace &space, const Vector &coeffs);
/// Values from coefficients on every node (boundary values included).
QuadField evaluate_nodal(const FeSpace &space, const Vector &node_values);
/// Column-wise evaluation of a coefficient block (result n_qp x k).
Matrix evaluate_block(const FeSpace &space, const Matrix &coeffs);
/// ρ = Σ_i φ_i² at the density quadrature points.
DensityField density_from_block(const FeSpace &space, const Matrix &coeffs);

/// f sampled at the density quadrature points.
QuadField sample(const FeSpace &space, const std::function<double(const Point &)> &f);
/// Σ_q w_q f_q over the density quadrature set.
double integrate(const FeSpace &space, const QuadField &f);
/// ∫ f g over the density quadrature set.
double integrate_product(const FeSpace &space, const QuadField &f, const QuadField &g);

/// Lagrange interpolant at the dof coordinates. Throws on non-finite values.
FeFunction project_function(std::shared_ptr<const FeSpace> space, const std::function<double(const Point &)> &f);

/// Value and gradient of a free-dof function at an arbitrary point of Ω.
double point_value(const FeSpace &space, const Vector &coeffs, const Point &x);
Point point_gradient(const FeSpace &space, const Vector &coeffs, const Point &x);

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;
};

/// ‖u−v‖₀ = √(dᵀMd), ‖u−v‖₁ = √(dᵀ(M+K)d) with d = u−v.
ErrorNorms norms(const FeFunction &u, const FeFunction &v);
ErrorNorms norms(const CsrMatrix &stiffness, const CsrMatrix &mass, const Vector &u, const Vector &v);

} // namespace ksfem::fem

#pragma once

#include "ksfem/common.hpp"
#include "ksfem/mesh/mesh.hpp"
#include "ksfem/mesh/quadrature.hpp"

#include <memory>
#include <span>
#include <vector>

namespace ksfem::fem {

/// Basis values and barycentric derivatives of the P1/P2 reference element at
/// the points of one quadrature rule.
struct ReferenceTables {
  mesh::Quadrature rule;
  int nodes_per_element = 0;
  /// values[q * npe + a]
  std::vector<double> values;
  /// bary_derivs[(q * npe + a) * 4 + k] = d N_a / d lambda_k
  std::vector<double> bary_derivs;
};

/// Lagrange basis of degree 1 or 2 on a tetrahedron in barycentric form.
/// P2 local order: 4 vertices, then edges (0,1),(0,2),(0,3),(1,2),(1,3),(2,3).
void basis_values(int degree, const std::array<double, 4> &bary, std::span<double> out);
void basis_bary_derivs(int degree, const std::array<double, 4> &bary, std::span<double> out);

inline constexpr std::array<std::array<int, 2>, 6> kLocalEdges = {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Where an element-local node pair lands in an assembled matrix.
struct ElementSlots {
  int npe = 0;
  /// slot[t * npe * npe + a * npe + b]: index into values(), -1 if the pair
  /// touches a constrained node.
  std::vector<std::int64_t> slot;
};

/// P1/P2 Lagrange space on a uniform mesh with homogeneous Dirichlet
/// conditions imposed by eliminating boundary nodes.
///
/// Nodes are all Lagrange nodes (vertices first, then P2 edge midpoints in
/// sorted vertex-pair order). Free dofs are the interior nodes in node order;
/// boundary nodes carry a separate index used by lifted problems.
class FeSpace {
public:
  FeSpace(std::shared_ptr<const mesh::Mesh> mesh, int degree);

  const mesh::Mesh &mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const mesh::Mesh> mesh_ptr() const noexcept { return mesh_; }
  int degree() const noexcept { return degree_; }
  int nodes_per_element() const noexcept { return degree_ == 1 ? 4 : 10; }

  int n_dofs() const noexcept { return n_dofs_; }
  int n_nodes() const noexcept { return static_cast<int>(node_coords_.size()); }
  int n_boundary() const noexcept { return n_nodes() - n_dofs_; }
  std::size_t n_tets() const noexcept { return mesh_->num_tets(); }

  const std::vector<Point> &node_coords() const noexcept { return node_coords_; }
  /// Free-dof index of a node, -1 on the boundary.
  int node_dof(int node) const { return node_dof_[static_cast<std::size_t>(node)]; }
  /// Boundary index of a node, -1 in the interior.
  int node_boundary(int node) const { return node_bnd_[static_cast<std::size_t>(node)]; }
  const std::vector<int> &dof_nodes() const noexcept { return dof_node_; }
  const std::vector<int> &boundary_nodes() const noexcept { return bnd_node_; }
  std::vector<Point> dof_coords() const;

  std::span<const int> element_nodes(std::size_t t) const {
    return {elem_nodes_.data() + t * static_cast<std::size_t>(nodes_per_element()),
            static_cast<std::size_t>(nodes_per_element())};
  }
  /// Local-to-global free-dof map; -1 marks constrained nodes.
  std::span<const int> element_dofs(std::size_t t) const {
    return {elem_dofs_.data() + t * static_cast<std::size_t>(nodes_per_element()),
            static_cast<std::size_t>(nodes_per_element())};
  }

  double volume(std::size_t t) const { return volume_[t]; }
  /// Gradients of the four barycentric coordinates.
  const std::array<Point, 4> &grad_bary(std::size_t t) const { return grad_bary_[t]; }

  /// Rule used for the bilinear forms K and M (order 2 for P1, 4 for P2).
  const ReferenceTables &assembly_tables() const noexcept { return assembly_; }
  /// Rule used for every density-dependent integral (order 5).
  const ReferenceTables &density_tables() const noexcept { return density_; }
  std::size_t qp_per_element() const noexcept { return density_.rule.size(); }
  std::size_t n_quad_points() const noexcept { return n_tets() * qp_per_element(); }

  Point quad_point(std::size_t t, std::size_t q) const;
  double quad_weight(std::size_t t, std::size_t q) const { return volume_[t] * density_.rule.weights[q]; }

  /// Free-free sparsity pattern shared by every assembled operator.
  const ElementSlots &free_slots() const noexcept { return free_slots_; }
  const std::vector<std::int64_t> &free_row_ptr() const noexcept { return free_row_ptr_; }
  const std::vector<int> &free_col_idx() const noexcept { return free_col_idx_; }

private:
  void build_nodes();
  void build_geometry();
  void build_pattern();

  std::shared_ptr<const mesh::Mesh> mesh_;
  int degree_;
  int n_dofs_ = 0;
  std::vector<Point> node_coords_;
  std::vector<int> node_dof_, node_bnd_, dof_node_, bnd_node_;
  std::vector<int> elem_nodes_, elem_dofs_;
  std::vector<double> volume_;
  std::vector<std::array<Point, 4>> grad_bary_;
  ReferenceTables assembly_, density_;
  ElementSlots free_slots_;
  std::vector<std::int64_t> free_row_ptr_;
  std::vector<int> free_col_idx_;
};

ReferenceTables make_reference_tables(int degree, int order);

/// Nodal coefficient vector of a space's free dofs.
struct FeFunction {
  std::shared_ptr<const FeSpace> space;
  Vector coeffs;
};

/// Real values at every density quadrature point, element-major:
/// values[t * qp_per_element + q].
struct QuadField {
  Vector values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Electron density sampled on the density quadrature set.
using DensityField = QuadField;

} // namespace ksfem::fem

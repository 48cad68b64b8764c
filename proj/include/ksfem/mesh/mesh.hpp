#pragma once

#include "ksfem/common.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace ksfem::mesh {

using Tet = std::array<int, 4>;

/// Result of structured point location: the containing tetrahedron and the
/// barycentric coordinates of the point with respect to its stored vertex
/// order.
struct Location {
  std::int64_t tet = -1;
  std::array<double, 4> bary{};
};

/// Uniform Kuhn triangulation of the box [-L, L]^3. Every cube of the n^3
/// lattice is cut into the six tetrahedra sharing its main diagonal, with the
/// same orientation in every cube, so the triangulation for 2n nests inside
/// the one for n.
///
/// Vertices are numbered lexicographically by lattice index (z slowest):
/// v = i + (n+1) * (j + (n+1) * k). Tetrahedra of cube (i,j,k) occupy the
/// index range [6c, 6c+6) with c = i + n * (j + n * k).
class Mesh {
public:
  static Mesh build_uniform(double half_width, int cells);

  Mesh refined() const;

  double half_width() const noexcept { return half_width_; }
  int cells_per_axis() const noexcept { return cells_; }
  double cell_size() const noexcept { return 2.0 * half_width_ / cells_; }
  /// Maximum tetrahedron diameter.
  double h() const noexcept { return h_; }
  int level() const noexcept { return level_; }

  const std::vector<Point> &vertices() const noexcept { return vertices_; }
  const std::vector<Tet> &tets() const noexcept { return tets_; }
  const std::vector<int> &boundary_vertices() const noexcept { return boundary_; }
  bool is_boundary(int v) const { return on_boundary_[static_cast<std::size_t>(v)]; }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_tets() const noexcept { return tets_.size(); }

  double signed_volume(std::size_t t) const;
  double volume(std::size_t t) const { return signed_volume(t); }
  double diameter(std::size_t t) const;
  double inradius(std::size_t t) const;

  /// Locates x in the structured lattice. Points outside the box are clamped
  /// to the nearest cube, so barycentric coordinates may then be negative.
  Location locate(const Point &x) const;

  /// Barycentric coordinates of x with respect to tetrahedron t.
  std::array<double, 4> barycentric(std::size_t t, const Point &x) const;

  /// ASCII VTK legacy unstructured grid (cell type 10).
  void write_vtk(std::ostream &os) const;

private:
  Mesh() = default;

  double half_width_ = 0.0;
  int cells_ = 0;
  int level_ = 0;
  double h_ = 0.0;
  std::vector<Point> vertices_;
  std::vector<Tet> tets_;
  std::vector<int> boundary_;
  std::vector<bool> on_boundary_;
};

Mesh build_uniform_mesh(double half_width, int cells);
Mesh refine(const Mesh &mesh);

} // namespace ksfem::mesh

#include "ksfem/fem/space.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <stdexcept>

namespace ksfem::fem {

void basis_values(int degree, const std::array<double, 4> &l, std::span<double> out) {
  if (degree == 1) {
    for (int a = 0; a < 4; ++a) out[a] = l[a];
    return;
  }
  for (int a = 0; a < 4; ++a) out[a] = l[a] * (2.0 * l[a] - 1.0);
  for (int e = 0; e < 6; ++e) out[4 + e] = 4.0 * l[kLocalEdges[e][0]] * l[kLocalEdges[e][1]];
}

void basis_bary_derivs(int degree, const std::array<double, 4> &l, std::span<double> out) {
  const int npe = degree == 1 ? 4 : 10;
  std::fill(out.begin(), out.begin() + npe * 4, 0.0);
  if (degree == 1) {
    for (int a = 0; a < 4; ++a) out[a * 4 + a] = 1.0;
    return;
  }
  for (int a = 0; a < 4; ++a) out[a * 4 + a] = 4.0 * l[a] - 1.0;
  for (int e = 0; e < 6; ++e) {
    const int i = kLocalEdges[e][0], j = kLocalEdges[e][1];
    out[(4 + e) * 4 + i] = 4.0 * l[j];
    out[(4 + e) * 4 + j] = 4.0 * l[i];
  }
}

ReferenceTables make_reference_tables(int degree, int order) {
  ReferenceTables t;
  t.rule = mesh::quadrature_rule(order);
  t.nodes_per_element = degree == 1 ? 4 : 10;
  const auto npe = static_cast<std::size_t>(t.nodes_per_element);
  t.values.resize(t.rule.size() * npe);
  t.bary_derivs.resize(t.rule.size() * npe * 4);
  for (std::size_t q = 0; q < t.rule.size(); ++q) {
    basis_values(degree, t.rule.points[q], std::span<double>(t.values.data() + q * npe, npe));
    basis_bary_derivs(degree, t.rule.points[q], std::span<double>(t.bary_derivs.data() + q * npe * 4, npe * 4));
  }
  return t;
}

FeSpace::FeSpace(std::shared_ptr<const mesh::Mesh> mesh, int degree) : mesh_(std::move(mesh)), degree_(degree) {
  if (!mesh_) throw std::invalid_argument("FeSpace: null mesh");
  if (degree_ != 1 && degree_ != 2) throw std::invalid_argument("FeSpace: degree must be 1 or 2");
  assembly_ = make_reference_tables(degree_, degree_ == 1 ? 2 : 4);
  density_ = make_reference_tables(degree_, 5);
  build_nodes();
  build_geometry();
  build_pattern();
}

void FeSpace::build_nodes() {
  const auto &m = *mesh_;
  const double L = m.half_width();
  const double tol = 1e-10 * L;
  const auto on_boundary = [&](const Point &x) {
    return std::any_of(x.begin(), x.end(), [&](double c) { return std::abs(std::abs(c) - L) <= tol; });
  };

  node_coords_ = m.vertices();
  std::vector<bool> bnd(node_coords_.size());
  for (std::size_t v = 0; v < node_coords_.size(); ++v) bnd[v] = m.is_boundary(static_cast<int>(v));

  const int npe = nodes_per_element();
  elem_nodes_.resize(m.num_tets() * static_cast<std::size_t>(npe));

  std::vector<std::pair<int, int>> edges;
  if (degree_ == 2) {
    edges.reserve(m.num_tets() * 6);
    for (const auto &t : m.tets())
      for (const auto &e : kLocalEdges) {
        const int a = t[e[0]], b = t[e[1]];
        edges.emplace_back(std::min(a, b), std::max(a, b));
      }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const auto &vx = m.vertices();
    for (const auto &[a, b] : edges) {
      const Point mid{0.5 * (vx[a][0] + vx[b][0]), 0.5 * (vx[a][1] + vx[b][1]), 0.5 * (vx[a][2] + vx[b][2])};
      node_coords_.push_back(mid);
      bnd.push_back(on_boundary(mid));
    }
  }

  const int nv = static_cast<int>(m.num_vertices());
  for (std::size_t t = 0; t < m.num_tets(); ++t) {
    const auto &tet = m.tets()[t];
    int *en = elem_nodes_.data() + t * npe;
    for (int a = 0; a < 4; ++a) en[a] = tet[a];
    if (degree_ == 2)
      for (int e = 0; e < 6; ++e) {
        const int a = tet[kLocalEdges[e][0]], b = tet[kLocalEdges[e][1]];
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        en[4 + e] = nv + static_cast<int>(std::lower_bound(edges.begin(), edges.end(), key) - edges.begin());
      }
  }

  node_dof_.assign(node_coords_.size(), -1);
  node_bnd_.assign(node_coords_.size(), -1);
  for (std::size_t n = 0; n < node_coords_.size(); ++n) {
    if (bnd[n]) {
      node_bnd_[n] = static_cast<int>(bnd_node_.size());
      bnd_node_.push_back(static_cast<int>(n));
    } else {
      node_dof_[n] = static_cast<int>(dof_node_.size());
      dof_node_.push_back(static_cast<int>(n));
    }
  }
  n_dofs_ = static_cast<int>(dof_node_.size());
  elem_dofs_.resize(elem_nodes_.size());
  for (std::size_t k = 0; k < elem_nodes_.size(); ++k) elem_dofs_[k] = node_dof_[elem_nodes_[k]];
}

void FeSpace::build_geometry() {
  const auto &m = *mesh_;
  volume_.resize(m.num_tets());
  grad_bary_.resize(m.num_tets());
  for (std::size_t t = 0; t < m.num_tets(); ++t) {
    const auto &tet = m.tets()[t];
    const auto &p0 = m.vertices()[tet[0]];
    Eigen::Matrix3d j;
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 3; ++r) j(r, c) = m.vertices()[tet[c + 1]][r] - p0[r];
    const double det = j.determinant();
    if (!(det > 0.0)) throw std::logic_error("FeSpace: non-positive element volume");
    volume_[t] = det / 6.0;
    const Eigen::Matrix3d inv = j.inverse();
    auto &g = grad_bary_[t];
    for (int k = 0; k < 3; ++k) g[k + 1] = {inv(k, 0), inv(k, 1), inv(k, 2)};
    g[0] = {-(g[1][0] + g[2][0] + g[3][0]), -(g[1][1] + g[2][1] + g[3][1]), -(g[1][2] + g[2][2] + g[3][2])};
  }
}

void FeSpace::build_pattern() {
  const int npe = nodes_per_element();
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n_dofs_));
  for (std::size_t t = 0; t < n_tets(); ++t) {
    const auto dofs = element_dofs(t);
    for (int a = 0; a < npe; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < npe; ++b)
        if (dofs[b] >= 0) rows[dofs[a]].push_back(dofs[b]);
    }
  }
  free_row_ptr_.assign(static_cast<std::size_t>(n_dofs_) + 1, 0);
  for (int i = 0; i < n_dofs_; ++i) {
    auto &r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    free_row_ptr_[i + 1] = free_row_ptr_[i] + static_cast<std::int64_t>(r.size());
  }
  free_col_idx_.reserve(static_cast<std::size_t>(free_row_ptr_.back()));
  for (auto &r : rows) {
    free_col_idx_.insert(free_col_idx_.end(), r.begin(), r.end());
    std::vector<int>().swap(r);
  }

  free_slots_.npe = npe;
  free_slots_.slot.assign(n_tets() * npe * npe, -1);
  for (std::size_t t = 0; t < n_tets(); ++t) {
    const auto dofs = element_dofs(t);
    for (int a = 0; a < npe; ++a) {
      if (dofs[a] < 0) continue;
      const auto b0 = free_col_idx_.begin() + free_row_ptr_[dofs[a]];
      const auto b1 = free_col_idx_.begin() + free_row_ptr_[dofs[a] + 1];
      for (int b = 0; b < npe; ++b)
        if (dofs[b] >= 0)
          free_slots_.slot[(t * npe + a) * npe + b] = std::lower_bound(b0, b1, dofs[b]) - free_col_idx_.begin();
    }
  }
}

std::vector<Point> FeSpace::dof_coords() const {
  std::vector<Point> c;
  c.reserve(dof_node_.size());
  for (int n : dof_node_) c.push_back(node_coords_[n]);
  return c;
}

Point FeSpace::quad_point(std::size_t t, std::size_t q) const {
  const auto &tet = mesh_->tets()[t];
  const auto &l = density_.rule.points[q];
  Point x{0.0, 0.0, 0.0};
  for (int a = 0; a < 4; ++a) {
    const auto &v = mesh_->vertices()[tet[a]];
    for (int d = 0; d < 3; ++d) x[d] += l[a] * v[d];
  }
  return x;
}

} // namespace ksfem::fem

#include "ksfem/fem/assembly.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace ksfem::fem {

namespace {

constexpr int kMaxNpe = 10;

CsrMatrix empty_free_matrix(const FeSpace &space) {
  std::vector<double> values(space.free_col_idx().size(), 0.0);
  return CsrMatrix(space.n_dofs(), space.n_dofs(), space.free_row_ptr(), space.free_col_idx(), std::move(values));
}

// Adds a symmetric local matrix (only a <= b filled) into the free pattern.
void scatter_symmetric(const FeSpace &space, std::size_t t, const double (&local)[kMaxNpe][kMaxNpe],
                       std::vector<double> &values) {
  const int npe = space.nodes_per_element();
  const auto &slots = space.free_slots().slot;
  const std::size_t base = t * static_cast<std::size_t>(npe * npe);
  for (int a = 0; a < npe; ++a)
    for (int b = 0; b < npe; ++b) {
      const auto s = slots[base + static_cast<std::size_t>(a * npe + b)];
      if (s >= 0) values[static_cast<std::size_t>(s)] += a <= b ? local[a][b] : local[b][a];
    }
}

// Physical gradients of all basis functions at quadrature point q of a table.
void basis_gradients(const FeSpace &space, const ReferenceTables &tab, std::size_t t, std::size_t q,
                     double (&grad)[kMaxNpe][3]) {
  const int npe = tab.nodes_per_element;
  const auto &gb = space.grad_bary(t);
  const double *d = tab.bary_derivs.data() + q * static_cast<std::size_t>(npe) * 4;
  for (int a = 0; a < npe; ++a)
    for (int c = 0; c < 3; ++c)
      grad[a][c] = d[a * 4 + 0] * gb[0][c] + d[a * 4 + 1] * gb[1][c] + d[a * 4 + 2] * gb[2][c] + d[a * 4 + 3] * gb[3][c];
}

void element_stiffness(const FeSpace &space, std::size_t t, double (&local)[kMaxNpe][kMaxNpe]) {
  const auto &tab = space.assembly_tables();
  const int npe = tab.nodes_per_element;
  for (int a = 0; a < npe; ++a)
    for (int b = a; b < npe; ++b) local[a][b] = 0.0;
  double grad[kMaxNpe][3];
  for (std::size_t q = 0; q < tab.rule.size(); ++q) {
    basis_gradients(space, tab, t, q, grad);
    const double w = tab.rule.weights[q] * space.volume(t);
    for (int a = 0; a < npe; ++a)
      for (int b = a; b < npe; ++b)
        local[a][b] += w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1] + grad[a][2] * grad[b][2]);
  }
}

void element_mass(const ReferenceTables &tab, double volume, const double *weight, double (&local)[kMaxNpe][kMaxNpe]) {
  const int npe = tab.nodes_per_element;
  for (int a = 0; a < npe; ++a)
    for (int b = a; b < npe; ++b) local[a][b] = 0.0;
  for (std::size_t q = 0; q < tab.rule.size(); ++q) {
    const double w = tab.rule.weights[q] * volume * (weight ? weight[q] : 1.0);
    const double *n = tab.values.data() + q * static_cast<std::size_t>(npe);
    for (int a = 0; a < npe; ++a) {
      const double wa = w * n[a];
      for (int b = a; b < npe; ++b) local[a][b] += wa * n[b];
    }
  }
}

void check_field(const FeSpace &space, const QuadField &f, const char *who) {
  if (f.size() != space.n_quad_points())
    throw std::invalid_argument(fmt::format("{}: field has {} values, space has {} quadrature points", who, f.size(),
                                            space.n_quad_points()));
}

} // namespace

CsrMatrix assemble_stiffness(const FeSpace &space) {
  CsrMatrix k = empty_free_matrix(space);
  double local[kMaxNpe][kMaxNpe];
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    element_stiffness(space, t, local);
    scatter_symmetric(space, t, local, k.values());
  }
  return k;
}

CsrMatrix assemble_mass(const FeSpace &space) {
  CsrMatrix m = empty_free_matrix(space);
  double local[kMaxNpe][kMaxNpe];
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    element_mass(space.assembly_tables(), space.volume(t), nullptr, local);
    scatter_symmetric(space, t, local, m.values());
  }
  return m;
}

CsrMatrix assemble_weighted_mass(const FeSpace &space, const QuadField &w) {
  check_field(space, w, "assemble_weighted_mass");
  if (!w.values.allFinite()) throw std::invalid_argument("assemble_weighted_mass: non-finite weight");
  CsrMatrix m = empty_free_matrix(space);
  const std::size_t nq = space.qp_per_element();
  double local[kMaxNpe][kMaxNpe];
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    element_mass(space.density_tables(), space.volume(t), w.values.data() + t * nq, local);
    scatter_symmetric(space, t, local, m.values());
  }
  return m;
}

CsrMatrix assemble_boundary_coupling(const FeSpace &space) {
  const int npe = space.nodes_per_element();
  std::vector<sparse::Triplet> trip;
  double local[kMaxNpe][kMaxNpe];
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    const auto nodes = space.element_nodes(t);
    bool mixed = false;
    for (int a = 0; a < npe && !mixed; ++a) mixed = space.node_boundary(nodes[a]) >= 0;
    if (!mixed) continue;
    element_stiffness(space, t, local);
    for (int a = 0; a < npe; ++a) {
      const int row = space.node_dof(nodes[a]);
      if (row < 0) continue;
      for (int b = 0; b < npe; ++b) {
        const int col = space.node_boundary(nodes[b]);
        if (col >= 0) trip.push_back({row, col, a <= b ? local[a][b] : local[b][a]});
      }
    }
  }
  return CsrMatrix::from_triplets(space.n_dofs(), space.n_boundary(), std::move(trip));
}

Vector load_vector_all_nodes(const FeSpace &space, const QuadField &f) {
  check_field(space, f, "load_vector");
  const auto &tab = space.density_tables();
  const int npe = tab.nodes_per_element;
  const std::size_t nq = tab.rule.size();
  Vector b = Vector::Zero(space.n_nodes());
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    const auto nodes = space.element_nodes(t);
    double acc[kMaxNpe] = {};
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = tab.rule.weights[q] * f.values[static_cast<Eigen::Index>(t * nq + q)];
      const double *n = tab.values.data() + q * static_cast<std::size_t>(npe);
      for (int a = 0; a < npe; ++a) acc[a] += w * n[a];
    }
    for (int a = 0; a < npe; ++a) b[nodes[a]] += space.volume(t) * acc[a];
  }
  return b;
}

Vector load_vector(const FeSpace &space, const QuadField &f) {
  const Vector all = load_vector_all_nodes(space, f);
  Vector b(space.n_dofs());
  for (int i = 0; i < space.n_dofs(); ++i) b[i] = all[space.dof_nodes()[static_cast<std::size_t>(i)]];
  return b;
}

Matrix load_block(const FeSpace &space, const Matrix &f) {
  if (static_cast<std::size_t>(f.rows()) != space.n_quad_points())
    throw std::invalid_argument("load_block: row count differs from quadrature point count");
  const auto &tab = space.density_tables();
  const int npe = tab.nodes_per_element;
  const std::size_t nq = tab.rule.size();
  const Eigen::Index k = f.cols();
  Matrix b = Matrix::Zero(space.n_dofs(), k);
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    const auto dofs = space.element_dofs(t);
    const double vol = space.volume(t);
    for (std::size_t q = 0; q < nq; ++q) {
      const double *n = tab.values.data() + q * static_cast<std::size_t>(npe);
      const auto row = static_cast<Eigen::Index>(t * nq + q);
      for (int a = 0; a < npe; ++a) {
        if (dofs[a] < 0) continue;
        const double w = vol * tab.rule.weights[q] * n[a];
        for (Eigen::Index c = 0; c < k; ++c) b(dofs[a], c) += w * f(row, c);
      }
    }
  }
  return b;
}

QuadField evaluate(const FeSpace &space, const Vector &coeffs) {
  if (coeffs.size() != space.n_dofs()) throw std::invalid_argument("evaluate: coefficient length differs from n_dofs");
  Matrix block = coeffs;
  return {evaluate_block(space, block).col(0)};
}

QuadField evaluate_nodal(const FeSpace &space, const Vector &node_values) {
  if (node_values.size() != space.n_nodes()) throw std::invalid_argument("evaluate_nodal: length differs from n_nodes");
  const auto &tab = space.density_tables();
  const int npe = tab.nodes_per_element;
  const std::size_t nq = tab.rule.size();
  QuadField out{Vector(static_cast<Eigen::Index>(space.n_quad_points()))};
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    const auto nodes = space.element_nodes(t);
    for (std::size_t q = 0; q < nq; ++q) {
      const double *n = tab.values.data() + q * static_cast<std::size_t>(npe);
      double v = 0.0;
      for (int a = 0; a < npe; ++a) v += n[a] * node_values[nodes[a]];
      out.values[static_cast<Eigen::Index>(t * nq + q)] = v;
    }
  }
  return out;
}

Matrix evaluate_block(const FeSpace &space, const Matrix &coeffs) {
  if (coeffs.rows() != space.n_dofs()) throw std::invalid_argument("evaluate_block: row count differs from n_dofs");
  const auto &tab = space.density_tables();
  const int npe = tab.nodes_per_element;
  const std::size_t nq = tab.rule.size();
  const Eigen::Index k = coeffs.cols();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(space.n_quad_points()), k);
  double local[kMaxNpe];
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    const auto dofs = space.element_dofs(t);
    for (Eigen::Index c = 0; c < k; ++c) {
      for (int a = 0; a < npe; ++a) local[a] = dofs[a] >= 0 ? coeffs(dofs[a], c) : 0.0;
      for (std::size_t q = 0; q < nq; ++q) {
        const double *n = tab.values.data() + q * static_cast<std::size_t>(npe);
        double v = 0.0;
        for (int a = 0; a < npe; ++a) v += n[a] * local[a];
        out(static_cast<Eigen::Index>(t * nq + q), c) = v;
      }
    }
  }
  return out;
}

DensityField density_from_block(const FeSpace &space, const Matrix &coeffs) {
  const Matrix values = evaluate_block(space, coeffs);
  return {values.rowwise().squaredNorm()};
}

QuadField sample(const FeSpace &space, const std::function<double(const Point &)> &f) {
  const std::size_t nq = space.qp_per_element();
  QuadField out{Vector(static_cast<Eigen::Index>(space.n_quad_points()))};
  for (std::size_t t = 0; t < space.n_tets(); ++t)
    for (std::size_t q = 0; q < nq; ++q) out.values[static_cast<Eigen::Index>(t * nq + q)] = f(space.quad_point(t, q));
  return out;
}

double integrate(const FeSpace &space, const QuadField &f) {
  check_field(space, f, "integrate");
  const std::size_t nq = space.qp_per_element();
  const auto &w = space.density_tables().rule.weights;
  double total = 0.0;
  for (std::size_t t = 0; t < space.n_tets(); ++t) {
    double s = 0.0;
    for (std::size_t q = 0; q < nq; ++q) s += w[q] * f.values[static_cast<Eigen::Index>(t * nq + q)];
    total += space.volume(t) * s;
  }
  return total;
}

double integrate_product(const FeSpace &space, const QuadField &f, const QuadField &g) {
  check_field(space, g, "integrate_product");
  return integrate(space, QuadField{f.values.cwiseProduct(g.values)});
}

FeFunction project_function(std::shared_ptr<const FeSpace> space, const std::function<double(const Point &)> &f) {
  Vector c(space->n_dofs());
  const auto &coords = space->node_coords();
  for (int i = 0; i < space->n_dofs(); ++i) {
    const Point &x = coords[static_cast<std::size_t>(space->dof_nodes()[static_cast<std::size_t>(i)])];
    const double v = f(x);
    if (!std::isfinite(v))
      throw std::invalid_argument(fmt::format("project_function: non-finite value at ({}, {}, {})", x[0], x[1], x[2]));
    c[i] = v;
  }
  return {std::move(space), std::move(c)};
}

namespace {

// Local coefficients and basis data at a located point.
struct PointBasis {
  std::size_t tet = 0;
  std::array<double, 4> bary{};
  double values[kMaxNpe]{};
  double derivs[kMaxNpe * 4]{};
};

PointBasis locate_basis(const FeSpace &space, const Point &x) {
  const auto loc = space.mesh().locate(x);
  PointBasis pb;
  pb.tet = static_cast<std::size_t>(loc.tet);
  pb.bary = loc.bary;
  basis_values(space.degree(), pb.bary, std::span<double>(pb.values, kMaxNpe));
  basis_bary_derivs(space.degree(), pb.bary, std::span<double>(pb.derivs, kMaxNpe * 4));
  return pb;
}

} // namespace

double point_value(const FeSpace &space, const Vector &coeffs, const Point &x) {
  const auto pb = locate_basis(space, x);
  const auto dofs = space.element_dofs(pb.tet);
  double v = 0.0;
  for (int a = 0; a < space.nodes_per_element(); ++a)
    if (dofs[a] >= 0) v += pb.values[a] * coeffs[dofs[a]];
  return v;
}

Point point_gradient(const FeSpace &space, const Vector &coeffs, const Point &x) {
  const auto pb = locate_basis(space, x);
  const auto dofs = space.element_dofs(pb.tet);
  const auto &gb = space.grad_bary(pb.tet);
  Point g{0.0, 0.0, 0.0};
  for (int a = 0; a < space.nodes_per_element(); ++a) {
    if (dofs[a] < 0) continue;
    for (int k = 0; k < 4; ++k) {
      const double s = coeffs[dofs[a]] * pb.derivs[a * 4 + k];
      for (int c = 0; c < 3; ++c) g[c] += s * gb[k][c];
    }
  }
  return g;
}

ErrorNorms norms(const CsrMatrix &stiffness, const CsrMatrix &mass, const Vector &u, const Vector &v) {
  if (u.size() != v.size() || u.size() != mass.rows()) throw std::invalid_argument("norms: length mismatch");
  const Vector d = u - v;
  const double l2sq = std::max(0.0, d.dot(mass.multiply(d)));
  const double ksq = std::max(0.0, d.dot(stiffness.multiply(d)));
  return {std::sqrt(l2sq), std::sqrt(l2sq + ksq)};
}

ErrorNorms norms(const FeFunction &u, const FeFunction &v) {
  if (!u.space || u.space != v.space) throw std::invalid_argument("norms: functions live on different spaces");
  return norms(assemble_stiffness(*u.space), assemble_mass(*u.space), u.coeffs, v.coeffs);
}

} // namespace ksfem::fem

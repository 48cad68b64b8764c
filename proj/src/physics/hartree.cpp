#include "ksfem/physics/hartree.hpp"

#include "ksfem/fem/assembly.hpp"

#include <numbers>
#include <stdexcept>

namespace ksfem::physics {

std::string to_string(BoundaryRule rule) { return rule == BoundaryRule::direct ? "direct" : "multipole2"; }

BoundaryRule boundary_rule_from_string(const std::string &name) {
  if (name == "multipole2") return BoundaryRule::multipole2;
  if (name == "direct") return BoundaryRule::direct;
  throw std::invalid_argument("unknown Hartree boundary rule '" + name + "'");
}

namespace {

constexpr int kMoments = 10;

// Monomials whose densities' moments feed the expansion: 1, x, y, z, xx, yy,
// zz, xy, xz, yz.
std::array<double, kMoments> monomials(const Point &x) {
  return {1.0, x[0], x[1], x[2], x[0] * x[0], x[1] * x[1], x[2] * x[2], x[0] * x[1], x[0] * x[2], x[1] * x[2]};
}

// Far-field kernels: g(x) = Σ_k kernel_k(x) · moment_k reproduces
// m0/r + d·x/r³ + (3 xᵀSx − r² tr S)/(2r⁵) with S the second moments.
std::array<double, kMoments> multipole_kernels(const Point &x) {
  const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  const double r = std::sqrt(r2);
  const double r3 = r2 * r, r5 = r3 * r2;
  return {1.0 / r,
          x[0] / r3,
          x[1] / r3,
          x[2] / r3,
          (3.0 * x[0] * x[0] - r2) / (2.0 * r5),
          (3.0 * x[1] * x[1] - r2) / (2.0 * r5),
          (3.0 * x[2] * x[2] - r2) / (2.0 * r5),
          3.0 * x[0] * x[1] / r5,
          3.0 * x[0] * x[2] / r5,
          3.0 * x[1] * x[2] / r5};
}

} // namespace

HartreeSolver::HartreeSolver(std::shared_ptr<const fem::FeSpace> space, BoundaryRule rule, double cg_tol)
    : space_(std::move(space)), rule_(rule), cg_{cg_tol, 20000, sparse::Preconditioner::jacobi} {
  if (!space_) throw std::invalid_argument("HartreeSolver: null space");
  k_ff_ = fem::assemble_stiffness(*space_);
  k_fb_ = fem::assemble_boundary_coupling(*space_);
  boundary_coords_.reserve(space_->boundary_nodes().size());
  for (int node : space_->boundary_nodes()) boundary_coords_.push_back(space_->node_coords()[static_cast<std::size_t>(node)]);
}

Vector HartreeSolver::boundary_data(const fem::DensityField &rho) const {
  const auto &s = *space_;
  const std::size_t nq = s.qp_per_element();
  Vector g = Vector::Zero(static_cast<Eigen::Index>(boundary_coords_.size()));
  if (rule_ == BoundaryRule::multipole2) {
    std::array<double, kMoments> mom{};
    for (std::size_t t = 0; t < s.n_tets(); ++t)
      for (std::size_t q = 0; q < nq; ++q) {
        const double wr = s.quad_weight(t, q) * rho.values[static_cast<Eigen::Index>(t * nq + q)];
        if (wr == 0.0) continue;
        const auto m = monomials(s.quad_point(t, q));
        for (int k = 0; k < kMoments; ++k) mom[k] += wr * m[k];
      }
    for (std::size_t b = 0; b < boundary_coords_.size(); ++b) {
      const auto ker = multipole_kernels(boundary_coords_[b]);
      double v = 0.0;
      for (int k = 0; k < kMoments; ++k) v += ker[k] * mom[k];
      g[static_cast<Eigen::Index>(b)] = v;
    }
    return g;
  }
  for (std::size_t t = 0; t < s.n_tets(); ++t)
    for (std::size_t q = 0; q < nq; ++q) {
      const double wr = s.quad_weight(t, q) * rho.values[static_cast<Eigen::Index>(t * nq + q)];
      if (wr == 0.0) continue;
      const Point y = s.quad_point(t, q);
      for (std::size_t b = 0; b < boundary_coords_.size(); ++b)
        g[static_cast<Eigen::Index>(b)] += wr / distance(boundary_coords_[b], y);
    }
  return g;
}

fem::QuadField HartreeSolver::adjoint_field(const Vector &c) const {
  // h(x) = Σ_b c_b k(x_b, x) with k the kernel of the boundary rule
  const auto &s = *space_;
  const std::size_t nq = s.qp_per_element();
  fem::QuadField h{Vector::Zero(static_cast<Eigen::Index>(s.n_quad_points()))};
  if (rule_ == BoundaryRule::multipole2) {
    std::array<double, kMoments> coef{};
    for (std::size_t b = 0; b < boundary_coords_.size(); ++b) {
      const auto ker = multipole_kernels(boundary_coords_[b]);
      for (int k = 0; k < kMoments; ++k) coef[k] += c[static_cast<Eigen::Index>(b)] * ker[k];
    }
    for (std::size_t t = 0; t < s.n_tets(); ++t)
      for (std::size_t q = 0; q < nq; ++q) {
        const auto m = monomials(s.quad_point(t, q));
        double v = 0.0;
        for (int k = 0; k < kMoments; ++k) v += coef[k] * m[k];
        h.values[static_cast<Eigen::Index>(t * nq + q)] = v;
      }
    return h;
  }
  for (std::size_t t = 0; t < s.n_tets(); ++t)
    for (std::size_t q = 0; q < nq; ++q) {
      const Point y = s.quad_point(t, q);
      double v = 0.0;
      for (std::size_t b = 0; b < boundary_coords_.size(); ++b)
        v += c[static_cast<Eigen::Index>(b)] / distance(boundary_coords_[b], y);
      h.values[static_cast<Eigen::Index>(t * nq + q)] = v;
    }
  return h;
}

HartreeSolver::Parts HartreeSolver::solve_parts(const fem::DensityField &rho) const {
  const auto &s = *space_;
  if (rho.size() != s.n_quad_points()) throw std::invalid_argument("solve_hartree: density lives on another space");
  const Vector b = fem::load_vector_all_nodes(s, rho);
  Vector bf(s.n_dofs()), bb(s.n_boundary());
  for (int i = 0; i < s.n_dofs(); ++i) bf[i] = b[s.dof_nodes()[static_cast<std::size_t>(i)]];
  for (int i = 0; i < s.n_boundary(); ++i) bb[i] = b[s.boundary_nodes()[static_cast<std::size_t>(i)]];

  Parts p;
  p.u0 = sparse::cg_solve(k_ff_, bf, cg_);
  p.g = boundary_data(rho);
  p.u1 = sparse::cg_solve(k_ff_, k_fb_.multiply(p.g), cg_);
  // c = b_b − K_bf u0, using K_bf = K_fbᵀ
  p.c = bb;
  for (int i = 0; i < k_fb_.rows(); ++i)
    for (auto k = k_fb_.row_ptr()[i]; k < k_fb_.row_ptr()[i + 1]; ++k)
      p.c[k_fb_.col_idx()[static_cast<std::size_t>(k)]] -= k_fb_.values()[static_cast<std::size_t>(k)] * p.u0[i];
  return p;
}

fem::QuadField HartreeSolver::variational_potential(const fem::DensityField &rho) const {
  const auto &s = *space_;
  const Parts p = solve_parts(rho);
  constexpr double four_pi = 4.0 * std::numbers::pi;
  Vector nodal(s.n_nodes());
  for (int i = 0; i < s.n_dofs(); ++i) nodal[s.dof_nodes()[static_cast<std::size_t>(i)]] = four_pi * p.u0[i] - 0.5 * p.u1[i];
  for (int i = 0; i < s.n_boundary(); ++i) nodal[s.boundary_nodes()[static_cast<std::size_t>(i)]] = 0.5 * p.g[i];
  fem::QuadField v = fem::evaluate_nodal(s, nodal);
  v.values += 0.5 * adjoint_field(p.c).values;
  return v;
}

HartreeSolution HartreeSolver::solve(const fem::DensityField &rho) const {
  const auto &s = *space_;
  const Parts p = solve_parts(rho);
  constexpr double four_pi = 4.0 * std::numbers::pi;
  HartreeSolution out;
  out.potential = {space_, four_pi * p.u0 - p.u1};
  out.boundary_values = p.g;

  Vector nodal(s.n_nodes()), sym(s.n_nodes());
  for (int i = 0; i < s.n_dofs(); ++i) {
    const auto node = s.dof_nodes()[static_cast<std::size_t>(i)];
    nodal[node] = out.potential.coeffs[i];
    sym[node] = four_pi * p.u0[i] - 0.5 * p.u1[i];
  }
  for (int i = 0; i < s.n_boundary(); ++i) {
    const auto node = s.boundary_nodes()[static_cast<std::size_t>(i)];
    nodal[node] = p.g[i];
    sym[node] = 0.5 * p.g[i];
  }
  out.values = fem::evaluate_nodal(s, nodal);
  out.variational = fem::evaluate_nodal(s, sym);
  out.variational.values += 0.5 * adjoint_field(p.c).values;
  out.energy = 0.5 * fem::integrate_product(s, rho, out.values);
  return out;
}

HartreeSolution solve_hartree(std::shared_ptr<const fem::FeSpace> space, const fem::DensityField &rho, BoundaryRule rule) {
  return HartreeSolver(std::move(space), rule).solve(rho);
}

double coulomb_D(const fem::FeSpace &space, const fem::DensityField &rho1, const fem::DensityField &rho2) {
  const std::size_t np = space.n_quad_points();
  if (rho1.size() != np || rho2.size() != np) throw std::invalid_argument("coulomb_D: quadrature-set mismatch");
  const std::size_t nq = space.qp_per_element();
  std::vector<Point> x(np);
  std::vector<double> w(np);
  for (std::size_t t = 0; t < space.n_tets(); ++t)
    for (std::size_t q = 0; q < nq; ++q) {
      x[t * nq + q] = space.quad_point(t, q);
      w[t * nq + q] = space.quad_weight(t, q);
    }
  const double *f = rho1.values.data(), *g = rho2.values.data();
  double total = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    // self cell as a uniform ball of volume w: ∫∫ 1/|x−y| = (6/5) w² / R
    const double radius = std::cbrt(3.0 * w[p] / (4.0 * std::numbers::pi));
    double row = f[p] * g[p] * 1.2 * w[p] * w[p] / radius;
    for (std::size_t q = p + 1; q < np; ++q)
      row += w[p] * w[q] * (f[p] * g[q] + f[q] * g[p]) / distance(x[p], x[q]);
    total += row;
  }
  return total;
}

} // namespace ksfem::physics

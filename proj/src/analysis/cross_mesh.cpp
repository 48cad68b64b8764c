#include "ksfem/analysis/cross_mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace ksfem::analysis {

namespace {

using Tet = std::array<Point, 4>;

Point lerp(const Point &a, const Point &b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

double tet_volume(const Tet &t) {
  const Point a{t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]};
  const Point b{t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]};
  const Point c{t[3][0] - t[0][0], t[3][1] - t[0][1], t[3][2] - t[0][2]};
  return std::abs(a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                  a[2] * (b[0] * c[1] - b[1] * c[0])) /
         6.0;
}

// Keeps the part of each tet where level(x) >= 0, as tets. `level` is affine.
template <class Level>
std::vector<Tet> clip(const std::vector<Tet> &in, const Level &level, double eps) {
  std::vector<Tet> out;
  for (const auto &t : in) {
    std::array<double, 4> s{};
    std::array<int, 4> inside{}, outside{};
    int ni = 0, no = 0;
    for (int k = 0; k < 4; ++k) {
      s[k] = level(t[k]);
      if (s[k] >= -eps) {
        s[k] = std::max(s[k], 0.0);
        inside[ni++] = k;
      } else {
        outside[no++] = k;
      }
    }
    if (no == 0) {
      out.push_back(t);
      continue;
    }
    if (ni == 0) continue;
    auto cut = [&](int i, int j) { return lerp(t[i], t[j], s[i] / (s[i] - s[j])); };
    // prism (a,b,c)-(a',b',c') as three tets
    auto prism = [&](const Point &a, const Point &b, const Point &c, const Point &a2, const Point &b2, const Point &c2) {
      out.push_back({a, b, c, a2});
      out.push_back({b, c, a2, b2});
      out.push_back({c, a2, b2, c2});
    };
    if (ni == 1) {
      const int a = inside[0];
      out.push_back({t[a], cut(a, outside[0]), cut(a, outside[1]), cut(a, outside[2])});
    } else if (ni == 3) {
      const int d = outside[0];
      prism(t[inside[0]], t[inside[1]], t[inside[2]], cut(inside[0], d), cut(inside[1], d), cut(inside[2], d));
    } else {
      const int a = inside[0], b = inside[1], c = outside[0], d = outside[1];
      prism(t[a], cut(a, c), cut(a, d), t[b], cut(b, c), cut(b, d));
    }
  }
  return out;
}

} // namespace

void evaluate_block_at(const fem::FeSpace &space, std::size_t t, const Point &x, const Matrix &coeffs, Vector &values,
                       Matrix &gradients) {
  const int npe = space.nodes_per_element();
  std::array<double, 10> phi{};
  std::array<double, 40> dphi{};
  const auto bary = space.mesh().barycentric(t, x);
  fem::basis_values(space.degree(), bary, std::span<double>(phi.data(), static_cast<std::size_t>(npe)));
  fem::basis_bary_derivs(space.degree(), bary, std::span<double>(dphi.data(), static_cast<std::size_t>(4 * npe)));
  const auto dofs = space.element_dofs(t);
  const auto &gb = space.grad_bary(t);
  const auto cols = coeffs.cols();
  values.setZero(cols);
  gradients.setZero(cols, 3);
  for (int a = 0; a < npe; ++a) {
    if (dofs[static_cast<std::size_t>(a)] < 0) continue;
    Point g{0.0, 0.0, 0.0};
    for (int k = 0; k < 4; ++k)
      for (int c = 0; c < 3; ++c) g[c] += dphi[static_cast<std::size_t>(a * 4 + k)] * gb[static_cast<std::size_t>(k)][c];
    const auto row = coeffs.row(dofs[static_cast<std::size_t>(a)]);
    values += phi[static_cast<std::size_t>(a)] * row.transpose();
    for (int c = 0; c < 3; ++c) gradients.col(c) += g[c] * row.transpose();
  }
}

CrossQuadrature::CrossQuadrature(std::shared_ptr<const fem::FeSpace> coarse, std::shared_ptr<const fem::FeSpace> fine)
    : coarse_(std::move(coarse)), fine_(std::move(fine)) {
  if (!coarse_ || !fine_) throw std::invalid_argument("CrossQuadrature: null space");
  const auto &cm = coarse_->mesh();
  const auto &fm = fine_->mesh();
  if (std::abs(cm.half_width() - fm.half_width()) > 1e-12 * cm.half_width())
    throw std::invalid_argument("CrossQuadrature: meshes cover different boxes");

  const auto rule = mesh::quadrature_rule(2 * std::max(coarse_->degree(), fine_->degree()));
  const double L = cm.half_width(), hc = cm.cell_size();
  const int nc = cm.cells_per_axis();
  constexpr double kEps = 1e-12;

  auto emit = [&](const Tet &t, std::size_t fine_tet, std::size_t coarse_tet, double vol) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Point x{0.0, 0.0, 0.0};
      for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 3; ++c) x[c] += rule.points[q][static_cast<std::size_t>(k)] * t[static_cast<std::size_t>(k)][c];
      points_.push_back(x);
      weights_.push_back(vol * rule.weights[q]);
      fine_tet_.push_back(static_cast<int>(fine_tet));
      coarse_tet_.push_back(static_cast<int>(coarse_tet));
    }
  };

  for (std::size_t ft = 0; ft < fm.num_tets(); ++ft) {
    Tet tet;
    for (int k = 0; k < 4; ++k) tet[static_cast<std::size_t>(k)] = fm.vertices()[static_cast<std::size_t>(fm.tets()[ft][static_cast<std::size_t>(k)])];
    const double fine_vol = fm.volume(ft);
    Point centroid{0.0, 0.0, 0.0};
    for (const auto &v : tet)
      for (int c = 0; c < 3; ++c) centroid[c] += 0.25 * v[c];

    // nested case: the whole element sits inside one coarse element
    const auto home = cm.locate(centroid);
    bool contained = true;
    for (const auto &v : tet) {
      const auto b = cm.barycentric(static_cast<std::size_t>(home.tet), v);
      for (double bk : b) contained = contained && bk >= -kEps;
    }
    if (contained) {
      emit(tet, ft, static_cast<std::size_t>(home.tet), fine_vol);
      continue;
    }

    ++clipped_;
    std::array<int, 3> lo{}, hi{};
    for (int c = 0; c < 3; ++c) {
      double mn = tet[0][c], mx = tet[0][c];
      for (const auto &v : tet) {
        mn = std::min(mn, v[c]);
        mx = std::max(mx, v[c]);
      }
      lo[c] = std::clamp(static_cast<int>(std::floor((mn + L) / hc + 1e-9)), 0, nc - 1);
      hi[c] = std::clamp(static_cast<int>(std::floor((mx + L) / hc - 1e-9)), 0, nc - 1);
    }
    double covered = 0.0;
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const std::int64_t cube = i + static_cast<std::int64_t>(nc) * (j + static_cast<std::int64_t>(nc) * k);
          for (int p = 0; p < 6; ++p) {
            const auto ct = static_cast<std::size_t>(6 * cube + p);
            std::vector<Tet> pieces{tet};
            const auto &ctet = cm.tets()[ct];
            for (int face = 0; face < 4 && !pieces.empty(); ++face) {
              const Point &g = coarse_->grad_bary(ct)[static_cast<std::size_t>(face)];
              const Point &v = cm.vertices()[static_cast<std::size_t>(ctet[static_cast<std::size_t>((face + 1) % 4)])];
              pieces = clip(pieces, [&](const Point &x) {
                return g[0] * (x[0] - v[0]) + g[1] * (x[1] - v[1]) + g[2] * (x[2] - v[2]);
              }, kEps);
            }
            for (const auto &piece : pieces) {
              const double vol = tet_volume(piece);
              if (vol <= 1e-14 * fine_vol) continue;
              covered += vol;
              emit(piece, ft, ct, vol);
            }
          }
        }
    if (std::abs(covered - fine_vol) > 1e-9 * fine_vol)
      throw std::logic_error("CrossQuadrature: clipped pieces do not tile a fine element");
  }
}

double CrossQuadrature::total_weight() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

Matrix CrossQuadrature::overlap(const Matrix &a, const Matrix &b) const {
  if (a.rows() != coarse_->n_dofs() || b.rows() != fine_->n_dofs())
    throw std::invalid_argument("CrossQuadrature::overlap: coefficient blocks do not match the spaces");
  Matrix out = Matrix::Zero(a.cols(), b.cols());
  Vector va, vb;
  Matrix ga, gb;
  for (std::size_t p = 0; p < points_.size(); ++p) {
    evaluate_block_at(*coarse_, static_cast<std::size_t>(coarse_tet_[p]), points_[p], a, va, ga);
    evaluate_block_at(*fine_, static_cast<std::size_t>(fine_tet_[p]), points_[p], b, vb, gb);
    out.noalias() += weights_[p] * va * vb.transpose();
  }
  return out;
}

fem::ErrorNorms CrossQuadrature::difference(const Matrix &a, const Matrix &b) const {
  if (a.rows() != coarse_->n_dofs() || b.rows() != fine_->n_dofs() || a.cols() != b.cols())
    throw std::invalid_argument("CrossQuadrature::difference: coefficient blocks do not match");
  double l2 = 0.0, grad = 0.0;
  Vector va, vb;
  Matrix ga, gb;
  for (std::size_t p = 0; p < points_.size(); ++p) {
    evaluate_block_at(*coarse_, static_cast<std::size_t>(coarse_tet_[p]), points_[p], a, va, ga);
    evaluate_block_at(*fine_, static_cast<std::size_t>(fine_tet_[p]), points_[p], b, vb, gb);
    l2 += weights_[p] * (va - vb).squaredNorm();
    grad += weights_[p] * (ga - gb).squaredNorm();
  }
  return {std::sqrt(l2), std::sqrt(l2 + grad)};
}

} // namespace ksfem::analysis

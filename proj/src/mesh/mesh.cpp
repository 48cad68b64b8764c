#include "ksfem/mesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ksfem::mesh {
namespace {

// Permutations of the axes in the order tets are laid out inside a cube. The
// tet for permutation p walks corner -> +e[p0] -> +e[p1] -> +e[p2] and
// contains the points with f[p0] >= f[p1] >= f[p2] in local coordinates.
constexpr std::array<std::array<int, 3>, 6> kPerms = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
constexpr std::array<bool, 6> kOdd = {false, true, true, false, false, true};

Point sub(const Point &a, const Point &b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Point cross(const Point &a, const Point &b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Point &a, const Point &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

} // namespace

Mesh Mesh::build_uniform(double half_width, int cells) {
  if (cells < 1) throw std::invalid_argument("build_uniform_mesh: need at least one cell per axis");
  if (!std::isfinite(half_width) || half_width <= 0.0)
    throw std::invalid_argument("build_uniform_mesh: half-width must be finite and positive");

  Mesh m;
  m.half_width_ = half_width;
  m.cells_ = cells;
  const int np = cells + 1;
  const double step = 2.0 * half_width / cells;
  m.h_ = step * std::sqrt(3.0);

  m.vertices_.reserve(static_cast<std::size_t>(np) * np * np);
  m.on_boundary_.reserve(m.vertices_.capacity());
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i) {
        // Lattice coordinates are formed from the integer index so that
        // boundary vertices land exactly on +-L.
        const auto coord = [&](int idx) { return idx == cells ? half_width : -half_width + idx * step; };
        m.vertices_.push_back({coord(i), coord(j), coord(k)});
        const bool bnd = i == 0 || j == 0 || k == 0 || i == cells || j == cells || k == cells;
        m.on_boundary_.push_back(bnd);
      }
  const double tol = 1e-10 * half_width;
  for (std::size_t v = 0; v < m.vertices_.size(); ++v) {
    const auto &x = m.vertices_[v];
    const bool geometric = std::any_of(x.begin(), x.end(), [&](double c) { return std::abs(std::abs(c) - half_width) <= tol; });
    if (geometric != m.on_boundary_[v]) throw std::logic_error("build_uniform_mesh: boundary tagging mismatch");
    if (geometric) m.boundary_.push_back(static_cast<int>(v));
  }

  const auto vid = [np](int i, int j, int k) { return i + np * (j + np * k); };
  m.tets_.reserve(static_cast<std::size_t>(6) * cells * cells * cells);
  for (int k = 0; k < cells; ++k)
    for (int j = 0; j < cells; ++j)
      for (int i = 0; i < cells; ++i)
        for (std::size_t p = 0; p < kPerms.size(); ++p) {
          std::array<int, 3> c{i, j, k};
          Tet t{};
          t[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[static_cast<std::size_t>(kPerms[p][static_cast<std::size_t>(s)])];
            t[static_cast<std::size_t>(s) + 1] = vid(c[0], c[1], c[2]);
          }
          if (kOdd[p]) std::swap(t[2], t[3]);
          m.tets_.push_back(t);
        }
  return m;
}

Mesh Mesh::refined() const {
  Mesh fine = build_uniform(half_width_, 2 * cells_);
  fine.level_ = level_ + 1;
  return fine;
}

double Mesh::signed_volume(std::size_t t) const {
  const auto &tet = tets_[t];
  const auto &p0 = vertices_[static_cast<std::size_t>(tet[0])];
  const Point a = sub(vertices_[static_cast<std::size_t>(tet[1])], p0);
  const Point b = sub(vertices_[static_cast<std::size_t>(tet[2])], p0);
  const Point c = sub(vertices_[static_cast<std::size_t>(tet[3])], p0);
  return dot(a, cross(b, c)) / 6.0;
}

double Mesh::diameter(std::size_t t) const {
  const auto &tet = tets_[t];
  double d = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      d = std::max(d, distance(vertices_[static_cast<std::size_t>(tet[static_cast<std::size_t>(a)])],
                               vertices_[static_cast<std::size_t>(tet[static_cast<std::size_t>(b)])]));
  return d;
}

double Mesh::inradius(std::size_t t) const {
  const auto &tet = tets_[t];
  double area = 0.0;
  for (int skip = 0; skip < 4; ++skip) {
    std::array<Point, 3> f{};
    int n = 0;
    for (int a = 0; a < 4; ++a)
      if (a != skip) f[static_cast<std::size_t>(n++)] = vertices_[static_cast<std::size_t>(tet[static_cast<std::size_t>(a)])];
    area += 0.5 * norm(cross(sub(f[1], f[0]), sub(f[2], f[0])));
  }
  return 3.0 * volume(t) / area;
}

Location Mesh::locate(const Point &x) const {
  const double step = cell_size();
  std::array<int, 3> cell{};
  std::array<double, 3> f{};
  for (std::size_t d = 0; d < 3; ++d) {
    const double s = (x[d] + half_width_) / step;
    int c = static_cast<int>(std::floor(s));
    c = std::clamp(c, 0, cells_ - 1);
    cell[d] = c;
    f[d] = s - c;
  }
  std::size_t p = 0;
  for (; p < kPerms.size(); ++p) {
    const auto &q = kPerms[p];
    if (f[static_cast<std::size_t>(q[0])] >= f[static_cast<std::size_t>(q[1])] &&
        f[static_cast<std::size_t>(q[1])] >= f[static_cast<std::size_t>(q[2])])
      break;
  }
  const auto &q = kPerms[p];
  Location loc;
  const std::int64_t cube = cell[0] + static_cast<std::int64_t>(cells_) * (cell[1] + static_cast<std::int64_t>(cells_) * cell[2]);
  loc.tet = 6 * cube + static_cast<std::int64_t>(p);
  const double f0 = f[static_cast<std::size_t>(q[0])], f1 = f[static_cast<std::size_t>(q[1])], f2 = f[static_cast<std::size_t>(q[2])];
  loc.bary = {1.0 - f0, f0 - f1, f1 - f2, f2};
  if (kOdd[p]) std::swap(loc.bary[2], loc.bary[3]);
  return loc;
}

std::array<double, 4> Mesh::barycentric(std::size_t t, const Point &x) const {
  const auto &tet = tets_[t];
  const auto &p0 = vertices_[static_cast<std::size_t>(tet[0])];
  const Point a = sub(vertices_[static_cast<std::size_t>(tet[1])], p0);
  const Point b = sub(vertices_[static_cast<std::size_t>(tet[2])], p0);
  const Point c = sub(vertices_[static_cast<std::size_t>(tet[3])], p0);
  const Point r = sub(x, p0);
  const double det = dot(a, cross(b, c));
  const double l1 = dot(r, cross(b, c)) / det;
  const double l2 = dot(a, cross(r, c)) / det;
  const double l3 = dot(a, cross(b, r)) / det;
  return {1.0 - l1 - l2 - l3, l1, l2, l3};
}

void Mesh::write_vtk(std::ostream &os) const {
  os << "# vtk DataFile Version 3.0\n";
  os << "ksfem uniform mesh n=" << cells_ << " L=" << half_width_ << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << vertices_.size() << " double\n";
  os.precision(17);
  for (const auto &v : vertices_) os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  os << "CELLS " << tets_.size() << ' ' << tets_.size() * 5 << '\n';
  for (const auto &t : tets_) os << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  os << "CELL_TYPES " << tets_.size() << '\n';
  for (std::size_t t = 0; t < tets_.size(); ++t) os << "10\n";
}

Mesh build_uniform_mesh(double half_width, int cells) { return Mesh::build_uniform(half_width, cells); }

Mesh refine(const Mesh &mesh) { return mesh.refined(); }

} // namespace ksfem::mesh

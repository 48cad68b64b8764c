#include "ksfem/physics/pseudo.hpp"

#include "ksfem/fem/assembly.hpp"

#include <fmt/format.h>

#include <numbers>
#include <stdexcept>

namespace ksfem::physics {

void PseudoSpec::validate() const {
  for (std::size_t i = 0; i < nuclei.size(); ++i) {
    const auto &n = nuclei[i];
    if (!(n.core_radius > 0.0) || !std::isfinite(n.core_radius))
      throw std::invalid_argument(fmt::format("nucleus {}: core radius must be positive", i));
    if (!std::isfinite(n.charge)) throw std::invalid_argument(fmt::format("nucleus {}: charge must be finite", i));
  }
  for (std::size_t j = 0; j < projectors.size(); ++j) {
    const auto &p = projectors[j];
    if (!(p.width > 0.0) || !std::isfinite(p.width))
      throw std::invalid_argument(fmt::format("projector {}: width must be positive", j));
    if (!(p.strength >= 0.0) || !std::isfinite(p.strength))
      throw std::invalid_argument(fmt::format("projector {}: strength must be nonnegative", j));
  }
  if (!(harmonic_omega >= 0.0) || !std::isfinite(harmonic_omega))
    throw std::invalid_argument("harmonic_omega must be nonnegative");
}

std::string to_string(ProjectorKind kind) {
  switch (kind) {
  case ProjectorKind::s: return "s";
  case ProjectorKind::px: return "px";
  case ProjectorKind::py: return "py";
  case ProjectorKind::pz: return "pz";
  }
  return "?";
}

ProjectorKind projector_kind_from_string(const std::string &name) {
  if (name == "s") return ProjectorKind::s;
  if (name == "px") return ProjectorKind::px;
  if (name == "py") return ProjectorKind::py;
  if (name == "pz") return ProjectorKind::pz;
  throw std::invalid_argument("unknown projector kind '" + name + "'");
}

double local_potential_at(const PseudoSpec &spec, const Point &x) {
  double v = 0.0;
  for (const auto &n : spec.nuclei) {
    const double r = distance(x, n.position);
    const double s = r / n.core_radius;
    if (s < 1e-6)
      // erf(s)/s = 2/√π (1 − s²/3 + ...)
      v -= n.charge * 2.0 / (std::sqrt(std::numbers::pi) * n.core_radius) * (1.0 - s * s / 3.0);
    else
      v -= n.charge * std::erf(s) / r;
  }
  if (spec.harmonic_omega > 0.0) v += 0.5 * spec.harmonic_omega * spec.harmonic_omega * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  return v;
}

double projector_value(const Projector &p, const Point &x) {
  const double w = p.width;
  const Point d{x[0] - p.center[0], x[1] - p.center[1], x[2] - p.center[2]};
  const double r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
  const double g = std::pow(std::numbers::pi * w * w, -0.75) * std::exp(-r2 / (2.0 * w * w));
  double shape = g;
  switch (p.kind) {
  case ProjectorKind::s: break;
  case ProjectorKind::px: shape = std::numbers::sqrt2 * d[0] / w * g; break;
  case ProjectorKind::py: shape = std::numbers::sqrt2 * d[1] / w * g; break;
  case ProjectorKind::pz: shape = std::numbers::sqrt2 * d[2] / w * g; break;
  }
  return std::sqrt(p.strength) * shape;
}

Matrix projector_loads(const PseudoSpec &spec, const fem::FeSpace &space) {
  Matrix z(space.n_dofs(), static_cast<Eigen::Index>(spec.projectors.size()));
  for (std::size_t j = 0; j < spec.projectors.size(); ++j) {
    const auto &p = spec.projectors[j];
    z.col(static_cast<Eigen::Index>(j)) =
        fem::load_vector(space, fem::sample(space, [&](const Point &x) { return projector_value(p, x); }));
  }
  return z;
}

Matrix apply_nonlocal(const Matrix &loads, const Matrix &block) {
  if (loads.cols() == 0) return Matrix::Zero(block.rows(), block.cols());
  return loads * (loads.transpose() * block);
}

} // namespace ksfem::physics

#include "ksfem/physics/system.hpp"

#include <numbers>
#include <stdexcept>

namespace ksfem::physics {

void ModelSystem::validate() const {
  pseudo.validate();
  if (n_electrons < 1) throw std::invalid_argument("n_electrons must be at least 1");
  if (!(half_width > 0.0) || !std::isfinite(half_width)) throw std::invalid_argument("half_width must be positive");
}

namespace {

ModelSystem harmonic() {
  ModelSystem s;
  s.name = "harmonic";
  s.pseudo.harmonic_omega = 1.0;
  s.n_electrons = 1;
  s.half_width = 10.0;
  return s;
}

ModelSystem free_box() {
  ModelSystem s;
  s.name = "free_box";
  s.n_electrons = 1;
  s.half_width = std::numbers::pi / 2;
  return s;
}

ModelSystem diatomic() {
  ModelSystem s;
  s.name = "diatomic";
  // s projectors lift both σ states; p_y/p_z projectors lift the π pair above σ_u
  const double half_bond = 1.0, width = 1.2;
  for (double sign : {-1.0, 1.0}) {
    const Point r{sign * half_bond, 0.0, 0.0};
    s.pseudo.nuclei.push_back({r, 2.0, 2.0});
    s.pseudo.projectors.push_back({r, width, 0.3, ProjectorKind::s});
    s.pseudo.projectors.push_back({r, width, 0.5, ProjectorKind::py});
    s.pseudo.projectors.push_back({r, width, 0.5, ProjectorKind::pz});
  }
  s.xc = XcFunctional::dirac();
  s.hartree = true;
  s.n_electrons = 2;
  s.half_width = 5.0;
  return s;
}

ModelSystem tetrahedral() {
  ModelSystem s;
  s.name = "tetrahedral";
  s.pseudo.nuclei.push_back({{0.0, 0.0, 0.0}, 2.0, 1.0});
  s.pseudo.projectors.push_back({{0.0, 0.0, 0.0}, 0.8, 0.5, ProjectorKind::s});
  const double a = 1.6 / std::sqrt(3.0);
  for (const Point &d : {Point{a, a, a}, Point{a, -a, -a}, Point{-a, a, -a}, Point{-a, -a, a}})
    s.pseudo.nuclei.push_back({d, 0.5, 0.8});
  s.xc = XcFunctional::lda_pz81();
  s.hartree = true;
  s.n_electrons = 4;
  s.half_width = 7.0;
  return s;
}

} // namespace

ModelSystem preset_system(const std::string &name) {
  if (name == "harmonic") return harmonic();
  if (name == "free_box") return free_box();
  if (name == "diatomic") return diatomic();
  if (name == "tetrahedral") return tetrahedral();
  throw std::invalid_argument("unknown system preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"diatomic", "free_box", "harmonic", "tetrahedral"}; }

} // namespace ksfem::physics

#pragma once

#include "ksfem/physics/hartree.hpp"
#include "ksfem/physics/pseudo.hpp"
#include "ksfem/physics/xc.hpp"

#include <string>
#include <vector>

namespace ksfem::physics {

/// Everything that defines a Kohn-Sham model apart from its discretization.
struct ModelSystem {
  std::string name = "custom";
  PseudoSpec pseudo;
  XcFunctional xc;
  bool hartree = false;
  BoundaryRule hartree_rule = BoundaryRule::multipole2;
  int n_electrons = 1;
  /// Default half-width L of the box [-L, L]³.
  double half_width = 10.0;

  /// No density-dependent term: the problem is a linear eigenproblem.
  bool is_linear() const noexcept { return !hartree && !xc.active(); }
  void validate() const;
};

/// Built-in systems:
///  - "harmonic": V = ½|x|² on [-10,10]³, N = 1, linear (λ = 3/2, 5/2, ...).
///  - "free_box": V = 0 on [-π/2, π/2]³, N = 1, linear (λ₁ = 3/2).
///  - "diatomic": two Z = 2, r_c = 2 centres at (±1, 0, 0) on [-5,5]³, two
///    electrons, s and p_y/p_z projectors, Hartree and Dirac exchange.
///  - "tetrahedral": XH₄-like centre plus four ligands, N = 4, Hartree and
///    LDA (Dirac + PZ81).
ModelSystem preset_system(const std::string &name);
std::vector<std::string> preset_names();

} // namespace ksfem::physics

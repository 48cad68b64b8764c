#pragma once

// Perdew-Zunger parameterization of the Ceperley-Alder correlation energy
// of the unpolarized homogeneous electron gas (hartree units).
// J. P. Perdew and A. Zunger, Phys. Rev. B 23, 5048 (1981), Table XII and
// Eqs. (C3), (C4); unpolarized column.

namespace ksfem::physics::pz81 {

// rs >= 1: ε_c = γ / (1 + β1 √rs + β2 rs)
inline constexpr double kGamma = -0.1423;
inline constexpr double kBeta1 = 1.0529;
inline constexpr double kBeta2 = 0.3334;

// rs < 1: ε_c = A ln rs + B + C rs ln rs + D rs
inline constexpr double kA = 0.0311;
inline constexpr double kB = -0.048;
inline constexpr double kC = 0.0020;
inline constexpr double kD = -0.0116;

} // namespace ksfem::physics::pz81

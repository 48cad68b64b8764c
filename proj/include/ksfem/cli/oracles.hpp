#pragma once

#include <string>
#include <vector>

namespace ksfem::cli {

struct OracleResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< the checked quantity (an error or a rate)
  double tolerance = 0.0;
  std::string detail;
};

/// Gaussian density ρ = π^{-3/2}e^{-r²}: Hartree boundary data against
/// erf(r)/r, convergence of V(2,0,0) and of the Hartree energy ½√(2/π).
std::vector<OracleResult> hartree_gaussian_oracle();
/// Harmonic oscillator on [-6,6]³: λ₁ = 3/2 and λ₂ = 5/2 approached at rate h² by P1.
std::vector<OracleResult> oscillator_oracle();
/// ℰ′ and ℰ″ against central differences of ℰ and ℰ′ for every functional.
std::vector<OracleResult> xc_fd_oracle();

} // namespace ksfem::cli

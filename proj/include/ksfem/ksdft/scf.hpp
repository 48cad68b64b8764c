#pragma once

#include "ksfem/ksdft/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksfem::ksdft {

enum class MixingKind { linear, anderson };
enum class GuessKind { atomic_gaussian, random };

struct MixingConfig {
  MixingKind kind = MixingKind::linear;
  double beta = 0.3;
  int depth = 5;  ///< Anderson history length
};

struct ScfConfig {
  MixingConfig mixing;
  double density_tol = 1e-8;  ///< ‖ρ_out − ρ_in‖₀
  int max_iter = 200;
  double eig_tol = 1e-9;      ///< relative eigen-residual passed to the eigensolver
  GuessKind initial_guess = GuessKind::atomic_gaussian;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct ScfRecord {
  int iteration = 0;
  double density_residual = 0.0;
  double energy = 0.0;
};

struct GroundState {
  OrbitalSet orbitals;
  Matrix multipliers;              ///< Λ = ΦᵀA_ΦΦ
  Vector eigenvalues;              ///< eigenvalues of Λ, ascending
  Vector hamiltonian_eigenvalues;  ///< lowest N+2 eigenvalues of A_Φ
  double total_energy = 0.0;
  EnergyTerms terms;
  std::vector<ScfRecord> history;
  bool converged = false;
  /// No unoccupied eigenvalue of A_Φ lies below the highest occupied one.
  bool aufbau = false;
  int iterations = 0;
  std::string method = "scf";

  /// λ_i for i = 1, 2, ...: eigenvalues of Λ, continued by the Hamiltonian
  /// spectrum when i exceeds N.
  double eigenvalue(int i) const;
};

/// Raised when the N-th and (N+1)-th Hamiltonian eigenvalues coincide, which
/// would require fractional occupation.
class DegenerateFermiLevel : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Normalized Gaussians (then p-type moments) centred on the nuclei,
/// M-orthonormalized. Systems without nuclei use the origin.
Matrix atomic_guess(const KohnShamModel &model, int count);
Matrix random_guess(const KohnShamModel &model, int count, std::uint64_t seed);

/// Self-consistent field iteration with density mixing. Returns a flagged,
/// unconverged state when max_iter is reached.
GroundState scf_solve(const KohnShamModel &model, const ScfConfig &config, const Matrix *initial = nullptr);

struct DirectMinConfig {
  double tol = 1e-7;          ///< M-norm of the projected gradient
  int max_iter = 2000;
  double armijo_c = 1e-4;
  double initial_step = 1.0;
  int max_halvings = 40;
  double shift = 1.0;         ///< σ in the preconditioner (½K + σM)⁻¹
};

/// Preconditioned Riemannian steepest descent on the constraint set with
/// Armijo backtracking and Gram-Schmidt retraction.
GroundState direct_minimize(const KohnShamModel &model, const Matrix &phi0, const DirectMinConfig &config = {});

/// Projected gradient G = 2(M⁻¹A_ΦΦ − ΦΛ) and its M-norm.
double projected_gradient_norm(const KohnShamModel &model, const Matrix &phi);

} // namespace ksfem::ksdft

#pragma once

#include "ksfem/ksdft/scf.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace ksfem::ksdft {

inline constexpr int kGroundStateFormat = 1;

/// Raised for unreadable, truncated or mismatched ground-state files.
class GroundStateFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Discretization a stored ground state was computed on.
struct StoredDiscretization {
  double half_width = 0.0;
  int cells = 0;
  int degree = 0;
  int n_dofs = 0;
};

/// JSON text with every number written in round-trip precision.
std::string ground_state_to_json(const GroundState &gs, const std::string &system_name = "");
/// Rebuilds a GroundState on `space`; the stored discretization must match it.
GroundState ground_state_from_json(const std::string &text, std::shared_ptr<const fem::FeSpace> space);
StoredDiscretization stored_discretization(const std::string &text);

void save_ground_state(const std::filesystem::path &path, const GroundState &gs, const std::string &system_name = "");
GroundState load_ground_state(const std::filesystem::path &path, std::shared_ptr<const fem::FeSpace> space);

} // namespace ksfem::ksdft

#pragma once

#include "ksfem/analysis/study.hpp"
#include "ksfem/ksdft/scf.hpp"
#include "ksfem/physics/system.hpp"

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksfem::cli {

/// Schema violations, each formatted as "<JSON pointer>: <message>".
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string> &issues() const noexcept { return issues_; }

private:
  std::vector<std::string> issues_;
};

inline constexpr const char *kCommands[] = {"solve", "study", "infsup", "oracle-check"};

struct StudySettings {
  int degree = 1;
  std::vector<int> levels;
  bool analytic_reference = false;
  analysis::LevelSpec reference;
  int infsup_dim = 0;
};

struct RunConfig {
  std::string command;
  physics::ModelSystem system;
  analysis::LevelSpec mesh{8, 1};
  std::string method = "scf";  ///< "scf" or "direct"
  ksdft::ScfConfig scf;
  StudySettings study;
  int subspace_dim = 2;
  std::string output_dir = "ksfem_output";
  std::uint64_t seed = 1;
  /// The validated configuration with every default filled in.
  nlohmann::json echo;
};

/// Applies `--set key=value`: the key is a dot path, the value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json &config, const std::string &assignment);

/// Validates `config` for `command` and fills defaults. Throws ConfigError
/// with every violation found.
RunConfig parse_config(const nlohmann::json &config, const std::string &command);

nlohmann::json system_to_json(const physics::ModelSystem &system);
nlohmann::json scf_to_json(const ksdft::ScfConfig &scf);

/// 16 hex digits identifying a reference solve: system, n, degree and solver tolerances.
std::string reference_cache_key(const physics::ModelSystem &system, const analysis::LevelSpec &level,
                                const ksdft::ScfConfig &scf);

} // namespace ksfem::cli

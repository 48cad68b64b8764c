#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ksfem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnconverged = 2;

/// The `ksfem` command line: solve, study, infsup, oracle-check.
int run(int argc, const char *const *argv);
int run(const std::vector<std::string> &args);

/// KSFEM_CACHE_DIR, else $XDG_CACHE_HOME/ksfem, else $HOME/.cache/ksfem.
std::filesystem::path cache_directory();
/// KSFEM_THREADS (0 or unset: hardware concurrency). Throws on malformed values.
int thread_count();

std::string build_id();

} // namespace ksfem::cli

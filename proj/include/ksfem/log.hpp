#pragma once

#include <fmt/format.h>

#include <string>

namespace ksfem {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

/// Process-wide threshold for messages written to stderr (default warn).
void set_log_level(LogLevel level);
LogLevel log_level();
void log_message(LogLevel level, const std::string &text);

template <typename... Args> void log_info(fmt::format_string<Args...> f, Args &&...args) {
  if (log_level() <= LogLevel::info) log_message(LogLevel::info, fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args> void log_warn(fmt::format_string<Args...> f, Args &&...args) {
  if (log_level() <= LogLevel::warn) log_message(LogLevel::warn, fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args> void log_debug(fmt::format_string<Args...> f, Args &&...args) {
  if (log_level() <= LogLevel::debug) log_message(LogLevel::debug, fmt::format(f, std::forward<Args>(args)...));
}

} // namespace ksfem

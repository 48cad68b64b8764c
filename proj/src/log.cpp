#include "ksfem/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace ksfem {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};
std::mutex g_mutex;
constexpr const char *kNames[] = {"debug", "info", "warn", "error"};
} // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_message(LogLevel level, const std::string &text) {
  if (level < g_level.load() || level == LogLevel::off) return;
  std::lock_guard lock(g_mutex);
  fmt::print(stderr, "[ksfem {}] {}\n", kNames[static_cast<int>(level)], text);
}

} // namespace ksfem

#include "mre/log.hpp"

#include <atomic>
#include <iostream>

namespace mre {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warning};

void emit(LogLevel level, const char* tag, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(g_level.load())) return;
  std::cerr << "[mre " << tag << "] " << message << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warning(const std::string& message) { emit(LogLevel::Warning, "warn", message); }
void log_info(const std::string& message) { emit(LogLevel::Info, "info", message); }
void log_debug(const std::string& message) { emit(LogLevel::Debug, "debug", message); }

}  // namespace mre

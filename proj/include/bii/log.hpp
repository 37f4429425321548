#ifndef BII_LOG_HPP
#define BII_LOG_HPP

#include <atomic>
#include <chrono>
#include <iostream>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace bii {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<LogLevel>& log_threshold() {
  static std::atomic<LogLevel> level{LogLevel::warn};
  return level;
}

inline const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    case LogLevel::off: return "off";
  }
  return "?";
}

/// One JSON object per line on stderr.
inline void log_event(LogLevel level, const std::string& event, nlohmann::json fields = nlohmann::json::object()) {
  if (level < log_threshold().load()) return;
  static std::mutex mu;
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  fields["ts_ms"] = now;
  fields["level"] = level_name(level);
  fields["event"] = event;
  std::lock_guard lock(mu);
  std::cerr << fields.dump() << '\n';
}

}  // namespace bii

#endif  // BII_LOG_HPP

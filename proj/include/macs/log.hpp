#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>

namespace macs::log {

enum class Level : int { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<int>& threshold() {
  static std::atomic<int> level{static_cast<int>(Level::warn)};
  return level;
}

inline void set_level(Level level) { threshold().store(static_cast<int>(level)); }

inline bool enabled(Level level) {
  return static_cast<int>(level) >= threshold().load(std::memory_order_relaxed);
}

template <typename... Args>
void write(Level level, Args&&... args) {
  if (!enabled(level)) return;
  static constexpr std::string_view tags[] = {"debug", "info", "warn", "error"};
  std::ostringstream line;
  line << "[macs " << tags[static_cast<int>(level)] << "] ";
  (line << ... << std::forward<Args>(args));
  line << '\n';
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << line.str();
}

template <typename... Args>
void debug(Args&&... args) { write(Level::debug, std::forward<Args>(args)...); }
template <typename... Args>
void info(Args&&... args) { write(Level::info, std::forward<Args>(args)...); }
template <typename... Args>
void warn(Args&&... args) { write(Level::warn, std::forward<Args>(args)...); }
template <typename... Args>
void error(Args&&... args) { write(Level::error, std::forward<Args>(args)...); }

}  // namespace macs::log

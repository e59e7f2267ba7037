#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace remap {

inline std::atomic<bool>& quiet_flag() {
  static std::atomic<bool> quiet{false};
  return quiet;
}

inline void log_info(std::string_view msg) {
  if (!quiet_flag().load()) std::cerr << msg << '\n';
}

// Warnings print even in quiet mode.
inline void log_warn(std::string_view msg) { std::cerr << "warning: " << msg << '\n'; }

}  // namespace remap

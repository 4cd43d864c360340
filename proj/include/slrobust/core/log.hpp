#pragma once

#include <iostream>
#include <mutex>
#include <string_view>

namespace slrobust {

inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

inline void log_warning(std::string_view msg) {
  std::lock_guard lock(log_mutex());
  std::clog << "warning: " << msg << '\n';
}

inline void log_info(std::string_view msg) {
  std::lock_guard lock(log_mutex());
  std::clog << msg << '\n';
}

}  // namespace slrobust

/*
 * Copyright 2026 The selfmetro Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace selfmetro {

enum class LogLevel { quiet = 0, warning = 1, info = 2 };

namespace detail {
inline std::atomic<int>& log_level_storage() {
  static std::atomic<int> level{static_cast<int>(LogLevel::warning)};
  return level;
}
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

inline void set_log_level(LogLevel level) {
  detail::log_level_storage() = static_cast<int>(level);
}

inline LogLevel log_level() {
  return static_cast<LogLevel>(detail::log_level_storage().load());
}

inline void log_warning(std::string_view msg) {
  if (log_level() < LogLevel::warning) return;
  std::lock_guard lock(detail::log_mutex());
  std::clog << "[selfmetro] warning: " << msg << '\n';
}

inline void log_info(std::string_view msg) {
  if (log_level() < LogLevel::info) return;
  std::lock_guard lock(detail::log_mutex());
  std::clog << "[selfmetro] " << msg << '\n';
}

}  // namespace selfmetro

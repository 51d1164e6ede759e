// Copyright 2026 The attachfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attachfuzz/logging.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace attachfuzz {
namespace {

std::atomic<LogLevel> min_level{LogLevel::kWarning};
std::mutex log_mutex;

constexpr std::string_view Tag(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "D";
    case LogLevel::kInfo: return "I";
    case LogLevel::kWarning: return "W";
    case LogLevel::kError: return "E";
  }
  return "?";
}

}  // namespace

void SetLogLevel(LogLevel level) { min_level = level; }

void Log(LogLevel level, std::string_view message) {
  if (level < min_level.load()) return;
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << "[" << Tag(level) << "] " << message << "\n";
}

}  // namespace attachfuzz

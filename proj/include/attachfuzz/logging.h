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

#ifndef ATTACHFUZZ_LOGGING_H_
#define ATTACHFUZZ_LOGGING_H_

#include <string_view>

namespace attachfuzz {

enum class LogLevel { kDebug, kInfo, kWarning, kError };

// Messages below this level are dropped. Defaults to kWarning.
void SetLogLevel(LogLevel level);
void Log(LogLevel level, std::string_view message);

}  // namespace attachfuzz

#endif  // ATTACHFUZZ_LOGGING_H_

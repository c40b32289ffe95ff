// Copyright 2026 The emfisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace emfisim {

enum class ErrorCode {
    InvalidReal,
    InvalidQuant,
    OutOfBounds,
    UnknownTensor,
    LengthMismatch,
    ManifestMismatch,
    ShapeMismatch,
    DegenerateBaseline,
    InvalidArgument,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// Domain error carrying a stable code so callers (and the CLI) can map
/// failures to exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace emfisim

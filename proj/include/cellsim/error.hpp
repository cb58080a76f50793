/*
 * Copyright 2026 The cellsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cellsim {

/// Every failure the library reports carries one of these codes. The C API
/// forwards them unchanged as `cs_status` values, so the numbering is part of
/// the ABI: append only.
enum class Errc : int {
    InvalidArgument = 1,
    Overlap,
    EmptyCpuSet,
    DuplicateIrq,
    Syntax,
    Semantic,
    BadMagic,
    UnsupportedVersion,
    TruncatedRecord,
    InvariantViolation,
    AlreadyEnabled,
    NotEnabled,
    ConfigMismatch,
    ValidationFailed,
    NameCollision,
    OutOfRegion,
    BadState,
    NoSuchCell,
    RootCellImmortal,
    CellsStillExist,
    NoSuchResource,
    UnownedIrq,
    NoSuchLine,
    SelfChannel,
    BadSize,
    NotEndpoint,
    BadVector,
    BadAlignment,
    EmptySamples,
    NoSuchChannel,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

class SyntaxError : public Error {
public:
    SyntaxError(int line, int col, const std::string& message)
        : Error(Errc::Syntax, std::to_string(line) + ":" + std::to_string(col) + ": " + message),
          line_(line),
          col_(col),
          message_(message) {}

    int line() const noexcept { return line_; }
    int col() const noexcept { return col_; }
    const std::string& message() const noexcept { return message_; }

private:
    int line_;
    int col_;
    std::string message_;
};

}  // namespace cellsim

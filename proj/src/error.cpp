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

#include "cellsim/error.hpp"

namespace cellsim {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::Overlap: return "OverlapError";
        case Errc::EmptyCpuSet: return "EmptyCpuSet";
        case Errc::DuplicateIrq: return "DuplicateIrq";
        case Errc::Syntax: return "SyntaxError";
        case Errc::Semantic: return "SemanticError";
        case Errc::BadMagic: return "BadMagic";
        case Errc::UnsupportedVersion: return "UnsupportedVersion";
        case Errc::TruncatedRecord: return "TruncatedRecord";
        case Errc::InvariantViolation: return "InvariantViolation";
        case Errc::AlreadyEnabled: return "AlreadyEnabled";
        case Errc::NotEnabled: return "NotEnabled";
        case Errc::ConfigMismatch: return "ConfigMismatch";
        case Errc::ValidationFailed: return "ValidationFailed";
        case Errc::NameCollision: return "NameCollision";
        case Errc::OutOfRegion: return "OutOfRegion";
        case Errc::BadState: return "BadState";
        case Errc::NoSuchCell: return "NoSuchCell";
        case Errc::RootCellImmortal: return "RootCellImmortal";
        case Errc::CellsStillExist: return "CellsStillExist";
        case Errc::NoSuchResource: return "NoSuchResource";
        case Errc::UnownedIrq: return "UnownedIrq";
        case Errc::NoSuchLine: return "NoSuchLine";
        case Errc::SelfChannel: return "SelfChannel";
        case Errc::BadSize: return "BadSize";
        case Errc::NotEndpoint: return "NotEndpoint";
        case Errc::BadVector: return "BadVector";
        case Errc::BadAlignment: return "BadAlignment";
        case Errc::EmptySamples: return "EmptySamples";
        case Errc::NoSuchChannel: return "NoSuchChannel";
        case Errc::Io: return "IoError";
    }
    return "Unknown";
}

}  // namespace cellsim

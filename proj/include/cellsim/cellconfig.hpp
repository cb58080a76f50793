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

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cellsim/ledger.hpp"
#include "cellsim/machine.hpp"
#include "cellsim/resource.hpp"

namespace cellsim {

inline constexpr std::size_t kMaxCellName = 31;
inline constexpr std::size_t kMaxDeviceName = 15;
inline constexpr std::uint32_t kConfigMagic = 0x4A484346;  // "JHCF"
inline constexpr std::uint16_t kConfigVersion = 1;

struct CommDecl {
    std::string peer;
    std::uint64_t size = 0;
    std::uint16_t vectors = 1;
    friend bool operator==(const CommDecl&, const CommDecl&) = default;
};

enum class WorkloadKind : std::uint8_t { Idle = 0, Stress = 1, LatencyResponder = 2, Script = 3 };

struct Workload {
    WorkloadKind kind = WorkloadKind::Idle;
    std::string script_path;  // Script only
    friend bool operator==(const Workload&, const Workload&) = default;
};

std::string_view workload_name(WorkloadKind kind);

struct CellConfig {
    std::string name;
    std::set<std::uint32_t> cpus;
    std::vector<MemRegion> mem;     // flags are the cell's access rights
    std::vector<Resource> devices;  // MmioDevice, PciDevice or IoPortRange
    std::set<std::uint32_t> irqs;
    std::vector<CommDecl> comm;
    Workload workload;

    friend bool operator==(const CellConfig&, const CellConfig&) = default;
};

/// Sorts mem by base, devices by (kind, base), comm by peer. Every config the
/// library hands out is in this canonical order.
void normalize(CellConfig& cfg);

/// Throws Error(Semantic) when a CellConfig invariant does not hold.
void check_config(const CellConfig& cfg);

/// All resources the config requests, as platform-comparable resources.
std::vector<Resource> requested_resources(const CellConfig& cfg);

/// Parses the cell DSL. Throws SyntaxError or Error(Semantic).
CellConfig parse_config(std::string_view text);
/// Renders the DSL form; parse_config(to_text(c)) == c for normalized c.
std::string to_text(const CellConfig& cfg);

std::vector<std::uint8_t> emit_binary(const CellConfig& cfg);
/// Errors: BadMagic, UnsupportedVersion, TruncatedRecord, InvariantViolation.
CellConfig load_binary(std::span<const std::uint8_t> bytes);

struct Violation {
    enum class Kind : std::uint8_t { NoSuchResource, NotOwnedByRoot, SharedRegionBusy, CommMismatch };
    Kind kind = Kind::NoSuchResource;
    ResourceKey resource;
    CellId owner = kRootCell;  // NotOwnedByRoot only
    std::string detail;

    std::string str() const;
    friend bool operator==(const Violation&, const Violation&) = default;
};

/// One Violation per requested resource that is missing from the platform
/// or not currently owned by the root cell. Empty means the config can be
/// carved out of the root cell.
std::vector<Violation> validate_against(const CellConfig& cfg, const MachinePlatform& platform,
                                        const OwnershipLedger& ledger);

}  // namespace cellsim

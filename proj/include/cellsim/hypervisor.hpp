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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cellsim/cellconfig.hpp"
#include "cellsim/comm.hpp"
#include "cellsim/error.hpp"
#include "cellsim/ledger.hpp"
#include "cellsim/machine.hpp"
#include "cellsim/rng.hpp"

namespace cellsim {

enum class HvState : std::uint8_t { Disabled, Enabled };
enum class CellState : std::uint8_t { Created, Running, Stopped, Failed };

std::string_view state_name(CellState s);

struct Cell {
    CellId id = 0;
    CellConfig config;
    CellState state = CellState::Created;
    /// page-aligned address -> one page of preloaded bytes
    std::map<std::uint64_t, std::vector<std::uint8_t>> memory_image;
    std::uint64_t dist_emulations = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

enum class CauseKind : std::uint8_t {
    IrqReinjection,
    DistributorEmulation,
    InstructionEmulation,
    AccessViolation,
    Management,
};

std::string_view cause_name(CauseKind kind);

struct TrapEvent {
    std::uint64_t time_ns = 0;
    CellId cell = kRootCell;
    CauseKind cause = CauseKind::Management;
    /// irq line, distributor offset, or faulting address; 0 otherwise
    std::uint64_t value = 0;
    std::string detail;

    friend bool operator==(const TrapEvent&, const TrapEvent&) = default;
};

enum class AccessKind : std::uint8_t { MemRead, MemWrite, IoRead, IoWrite, SensitiveInstr };

struct Access {
    AccessKind kind = AccessKind::MemRead;
    std::uint64_t addr = 0;  // address or port
    std::uint8_t width = 4;
    std::string instr;       // SensitiveInstr only

    static Access mem_read(std::uint64_t addr, std::uint8_t width = 4);
    static Access mem_write(std::uint64_t addr, std::uint8_t width = 4);
    static Access io_read(std::uint16_t port, std::uint8_t width = 1);
    static Access io_write(std::uint16_t port, std::uint8_t width = 1);
    static Access instruction(std::string name);

    std::string str() const;
};

enum class AccessOutcome : std::uint8_t { Direct, Emulated, Violation };

std::string_view outcome_name(AccessOutcome o);

/// create_cell refused the config; one entry per offending resource.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Hypervisor state machine over one platform. Starts Disabled; enable()
/// lifts the root cell in and hands it every resource, create_cell() carves
/// resources back out.
///
/// Single-owner mutable state: no internal locking.
class Hypervisor {
public:
    explicit Hypervisor(MachinePlatform platform);

    HvState state() const { return state_; }
    bool enabled() const { return state_ == HvState::Enabled; }
    const MachinePlatform& platform() const { return platform_; }
    const OwnershipLedger& ledger() const { return ledger_; }
    const std::vector<TrapEvent>& events() const { return events_; }
    const std::map<CellId, Cell>& cells() const { return cells_; }
    std::uint64_t clock_ns() const { return clock_ns_; }

    /// Errors: AlreadyEnabled, ConfigMismatch (root_cfg names a resource the
    /// platform lacks), Semantic.
    void enable(const CellConfig& root_cfg);
    /// Errors: NotEnabled, CellsStillExist.
    void disable();

    /// Errors: NotEnabled, NameCollision, ValidationFailed.
    CellId create_cell(const CellConfig& cfg);
    void load_image(CellId cell, std::uint64_t addr, std::span<const std::uint8_t> data);
    std::vector<std::uint8_t> read_image(CellId cell, std::uint64_t addr, std::size_t len) const;
    void start_cell(CellId cell);
    void stop_cell(CellId cell);
    void destroy_cell(CellId cell);
    void relaunch_cell(CellId cell);

    /// Classifies one guest access. Direct accesses leave no trace; emulated
    /// ones are logged; a violation is logged and fails the cell.
    /// Errors: NotEnabled, NoSuchCell, BadState (cell not Running).
    AccessOutcome handle_access(CellId cell, const Access& access);

    /// Errors: NotEnabled, NoSuchResource.
    CellId owner_of(const ResourceKey& key) const;
    CellId owner_of(const Resource& r) const { return owner_of(key_of(r)); }

    bool has_cell(CellId id) const { return cells_.contains(id); }
    /// Errors: NoSuchCell.
    const Cell& cell(CellId id) const;
    std::optional<CellId> find_cell(std::string_view name) const;

    const std::set<std::string>& sensitive_instructions() const { return sensitive_; }
    void set_sensitive_instructions(std::set<std::string> names) { sensitive_ = std::move(names); }

    /// Moves the clock forward; throws Error(InvalidArgument) on t < now.
    void advance_to(std::uint64_t t_ns);
    void record(CellId cell, CauseKind cause, std::uint64_t value, std::string detail);

    /// Bumps a cell's distributor-emulation counter and logs the event.
    void note_distributor_access(CellId cell, std::uint64_t offset);
    /// Marks a Running cell Failed after a violation and logs it.
    void fail_cell(CellId cell, std::uint64_t addr, std::string detail);

    ChannelTable& comm() { return comm_; }
    const ChannelTable& comm() const { return comm_; }
    /// Stream used for internally drawn latencies (doorbells).
    Rng& rng() { return rng_; }
    void reseed(std::uint64_t seed) { rng_ = Rng(seed); }

    /// Exclusivity + conservation check; empty string when both hold.
    std::string audit() const;

    /// Versioned binary snapshot of the whole state (platform included).
    std::vector<std::uint8_t> snapshot() const;
    /// Errors: BadMagic, UnsupportedVersion, TruncatedRecord, InvariantViolation.
    static Hypervisor restore(std::span<const std::uint8_t> bytes);

    friend bool operator==(const Hypervisor& a, const Hypervisor& b);

private:
    Cell& cell_mut(CellId id);
    void require_enabled() const;
    void require_non_root(CellId id, const char* op) const;
    void manage(CellId cell, std::string op);
    std::optional<AccessOutcome> classify_memory(Cell& c, const Access& access);

    MachinePlatform platform_;
    HvState state_ = HvState::Disabled;
    std::map<CellId, Cell> cells_;
    OwnershipLedger ledger_;
    std::vector<TrapEvent> events_;
    std::uint64_t clock_ns_ = 0;
    CellId next_cell_id_ = 1;
    std::set<std::string> sensitive_{"cpuid"};
    ChannelTable comm_;
    Rng rng_{0};
};

/// JSON-lines: {"t":..,"cell":..,"cause":"...","detail":"..."}
std::string export_events_jsonl(std::span<const TrapEvent> events);

}  // namespace cellsim

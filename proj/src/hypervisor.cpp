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

#include "cellsim/hypervisor.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "cellsim/error.hpp"

namespace cellsim {

std::string_view state_name(CellState s) {
    switch (s) {
        case CellState::Created: return "Created";
        case CellState::Running: return "Running";
        case CellState::Stopped: return "Stopped";
        case CellState::Failed: return "Failed";
    }
    return "?";
}

std::string_view cause_name(CauseKind kind) {
    switch (kind) {
        case CauseKind::IrqReinjection: return "irq-reinjection";
        case CauseKind::DistributorEmulation: return "distributor-emulation";
        case CauseKind::InstructionEmulation: return "instruction-emulation";
        case CauseKind::AccessViolation: return "access-violation";
        case CauseKind::Management: return "management";
    }
    return "?";
}

std::string_view outcome_name(AccessOutcome o) {
    switch (o) {
        case AccessOutcome::Direct: return "Direct";
        case AccessOutcome::Emulated: return "Emulated";
        case AccessOutcome::Violation: return "Violation";
    }
    return "?";
}

static std::string join_violations(const std::vector<Violation>& v) {
    std::string s = "configuration rejected:";
    for (const Violation& x : v) s += "\n  " + x.str();
    return s;
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(Errc::ValidationFailed, join_violations(violations)), violations_(std::move(violations)) {}

static void check_width(std::uint8_t width) {
    if (width != 1 && width != 2 && width != 4 && width != 8)
        throw Error(Errc::InvalidArgument, fmt::format("access width {} not in {{1,2,4,8}}", width));
}

static Access make_access(AccessKind kind, std::uint64_t addr, std::uint8_t width) {
    check_width(width);
    if (addr % width) throw Error(Errc::BadAlignment, fmt::format("0x{:x} not aligned to width {}", addr, width));
    return Access{kind, addr, width, {}};
}

Access Access::mem_read(std::uint64_t addr, std::uint8_t width) { return make_access(AccessKind::MemRead, addr, width); }
Access Access::mem_write(std::uint64_t addr, std::uint8_t width) { return make_access(AccessKind::MemWrite, addr, width); }
Access Access::io_read(std::uint16_t port, std::uint8_t width) {
    check_width(width);
    return Access{AccessKind::IoRead, port, width, {}};
}
Access Access::io_write(std::uint16_t port, std::uint8_t width) {
    check_width(width);
    return Access{AccessKind::IoWrite, port, width, {}};
}
Access Access::instruction(std::string name) { return Access{AccessKind::SensitiveInstr, 0, 0, std::move(name)}; }

std::string Access::str() const {
    switch (kind) {
        case AccessKind::MemRead: return fmt::format("mem-read 0x{:x}/{}", addr, width);
        case AccessKind::MemWrite: return fmt::format("mem-write 0x{:x}/{}", addr, width);
        case AccessKind::IoRead: return fmt::format("io-read 0x{:x}/{}", addr, width);
        case AccessKind::IoWrite: return fmt::format("io-write 0x{:x}/{}", addr, width);
        case AccessKind::SensitiveInstr: return "instr " + instr;
    }
    return "?";
}

Hypervisor::Hypervisor(MachinePlatform platform) : platform_(std::move(platform)) {}

void Hypervisor::require_enabled() const {
    if (state_ != HvState::Enabled) throw Error(Errc::NotEnabled, "hypervisor is not enabled");
}

void Hypervisor::require_non_root(CellId id, const char* op) const {
    if (id == kRootCell) throw Error(Errc::RootCellImmortal, fmt::format("cannot {} the root cell", op));
}

const Cell& Hypervisor::cell(CellId id) const {
    auto it = cells_.find(id);
    if (it == cells_.end()) throw Error(Errc::NoSuchCell, fmt::format("no cell {}", id));
    return it->second;
}

Cell& Hypervisor::cell_mut(CellId id) { return const_cast<Cell&>(std::as_const(*this).cell(id)); }

std::optional<CellId> Hypervisor::find_cell(std::string_view name) const {
    for (const auto& [id, c] : cells_)
        if (c.config.name == name) return id;
    return std::nullopt;
}

void Hypervisor::advance_to(std::uint64_t t_ns) {
    if (t_ns < clock_ns_) throw Error(Errc::InvalidArgument, fmt::format("time {} ns is before the clock ({} ns)", t_ns, clock_ns_));
    clock_ns_ = t_ns;
}

void Hypervisor::record(CellId cell, CauseKind cause, std::uint64_t value, std::string detail) {
    events_.push_back(TrapEvent{clock_ns_, cell, cause, value, std::move(detail)});
}

void Hypervisor::manage(CellId cell, std::string op) { record(cell, CauseKind::Management, 0, std::move(op)); }

void Hypervisor::note_distributor_access(CellId cell, std::uint64_t offset) {
    ++cell_mut(cell).dist_emulations;
    record(cell, CauseKind::DistributorEmulation, offset, fmt::format("offset 0x{:x}", offset));
}

void Hypervisor::fail_cell(CellId cell, std::uint64_t addr, std::string detail) {
    cell_mut(cell).state = CellState::Failed;
    record(cell, CauseKind::AccessViolation, addr, std::move(detail));
}

void Hypervisor::enable(const CellConfig& root_cfg) {
    if (state_ == HvState::Enabled) throw Error(Errc::AlreadyEnabled, "hypervisor already enabled");
    check_config(root_cfg);
    std::string missing;
    for (const Resource& r : requested_resources(root_cfg))
        if (!platform_.contains(key_of(r))) missing += " " + describe(r);
    if (!missing.empty()) throw Error(Errc::ConfigMismatch, "root config names resources the platform lacks:" + missing);

    CellConfig cfg = root_cfg;
    normalize(cfg);
    ledger_.assign_all(platform_, kRootCell);
    cells_.clear();
    cells_.emplace(kRootCell, Cell{kRootCell, std::move(cfg), CellState::Running, {}, 0});
    comm_ = ChannelTable{};
    next_cell_id_ = 1;
    state_ = HvState::Enabled;
    manage(kRootCell, "enable " + platform_.name());
}

void Hypervisor::disable() {
    require_enabled();
    if (cells_.size() > 1) throw Error(Errc::CellsStillExist, fmt::format("{} non-root cell(s) still exist", cells_.size() - 1));
    manage(kRootCell, "disable");
    cells_.clear();
    ledger_.clear();
    comm_ = ChannelTable{};
    state_ = HvState::Disabled;
}

CellId Hypervisor::create_cell(const CellConfig& in) {
    require_enabled();
    check_config(in);
    CellConfig cfg = in;
    normalize(cfg);
    if (find_cell(cfg.name)) throw Error(Errc::NameCollision, "a cell named \"" + cfg.name + "\" already exists");

    std::vector<Violation> violations = validate_against(cfg, platform_, ledger_);
    for (const MemRegion& m : cfg.mem) {
        AddrRange want{m.base, m.size};
        for (const auto& [id, ch] : comm_.channels) {
            if (want.overlaps(ch.region))
                violations.push_back({Violation::Kind::SharedRegionBusy, key_of(Resource{m}), ch.ends[0].cell,
                                      fmt::format("channel {}", id)});
        }
    }
    for (const CommDecl& d : cfg.comm) {
        auto peer = find_cell(d.peer);
        if (!peer) continue;
        for (const CommDecl& back : cell(*peer).config.comm) {
            if (back.peer == cfg.name && (back.size != d.size || back.vectors != d.vectors))
                violations.push_back({Violation::Kind::CommMismatch, {}, *peer,
                                      fmt::format("{}<->{}: 0x{:x}/{} vs 0x{:x}/{}", cfg.name, d.peer, d.size, d.vectors,
                                                  back.size, back.vectors)});
        }
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));

    const CellId id = next_cell_id_;
    const std::size_t event_mark = events_.size();
    const ChannelTable comm_mark = comm_;
    for (const Resource& r : requested_resources(cfg)) ledger_.transfer(key_of(r), kRootCell, id);
    cells_.emplace(id, Cell{id, cfg, CellState::Created, {}, 0});
    ++next_cell_id_;
    manage(id, "create " + cfg.name);

    try {
        for (const CommDecl& d : cfg.comm) {
            auto peer = find_cell(d.peer);
            if (!peer) continue;
            const auto& back = cell(*peer).config.comm;
            if (std::any_of(back.begin(), back.end(), [&](const CommDecl& b) { return b.peer == cfg.name; }))
                create_channel(*this, *peer, id, d.size, d.vectors);
        }
    } catch (...) {
        ledger_.release_all(id, kRootCell);
        cells_.erase(id);
        --next_cell_id_;
        events_.resize(event_mark);
        comm_ = comm_mark;
        throw;
    }
    // Auto-created channels fold into the single create event.
    for (std::size_t i = event_mark + 1; i < events_.size(); ++i) events_[event_mark].detail += "; " + events_[i].detail;
    events_.resize(event_mark + 1);
    return id;
}

static const MemRegion* owned_region(const Cell& c, std::uint64_t addr, std::uint64_t len) {
    for (const MemRegion& m : c.config.mem)
        if (AddrRange{m.base, m.size}.contains(addr, len)) return &m;
    return nullptr;
}

void Hypervisor::load_image(CellId id, std::uint64_t addr, std::span<const std::uint8_t> data) {
    require_enabled();
    Cell& c = cell_mut(id);
    if (c.state != CellState::Created && c.state != CellState::Stopped)
        throw Error(Errc::BadState, fmt::format("cell {} is {}; images load only into Created or Stopped cells", id, state_name(c.state)));
    if (!owned_region(c, addr, data.size()))
        throw Error(Errc::OutOfRegion, fmt::format("[0x{:x}, +0x{:x}) is not inside a region of cell {}", addr, data.size(), id));

    std::size_t done = 0;
    while (done < data.size()) {
        std::uint64_t a = addr + done;
        std::uint64_t page = a & ~(kPageSize - 1);
        std::size_t off = static_cast<std::size_t>(a - page);
        std::size_t n = std::min<std::size_t>(kPageSize - off, data.size() - done);
        auto& bytes = c.memory_image[page];
        if (bytes.empty()) bytes.assign(kPageSize, 0);
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(done), n, bytes.begin() + static_cast<std::ptrdiff_t>(off));
        done += n;
    }
    manage(id, fmt::format("load 0x{:x} {}", addr, data.size()));
}

std::vector<std::uint8_t> Hypervisor::read_image(CellId id, std::uint64_t addr, std::size_t len) const {
    const Cell& c = cell(id);
    if (!owned_region(c, addr, len))
        throw Error(Errc::OutOfRegion, fmt::format("[0x{:x}, +0x{:x}) is not inside a region of cell {}", addr, len, id));
    std::vector<std::uint8_t> out(len, 0);
    for (std::size_t i = 0; i < len;) {
        std::uint64_t a = addr + i;
        std::uint64_t page = a & ~(kPageSize - 1);
        std::size_t off = static_cast<std::size_t>(a - page);
        std::size_t n = std::min<std::size_t>(kPageSize - off, len - i);
        if (auto it = c.memory_image.find(page); it != c.memory_image.end())
            std::copy_n(it->second.begin() + static_cast<std::ptrdiff_t>(off), n, out.begin() + static_cast<std::ptrdiff_t>(i));
        i += n;
    }
    return out;
}

void Hypervisor::start_cell(CellId id) {
    require_enabled();
    Cell& c = cell_mut(id);
    if (c.state != CellState::Created && c.state != CellState::Stopped)
        throw Error(Errc::BadState, fmt::format("cannot start cell {} from {}", id, state_name(c.state)));
    c.state = CellState::Running;
    manage(id, "start");
}

void Hypervisor::stop_cell(CellId id) {
    require_enabled();
    require_non_root(id, "stop");
    Cell& c = cell_mut(id);
    if (c.state != CellState::Running && c.state != CellState::Failed)
        throw Error(Errc::BadState, fmt::format("cannot stop cell {} from {}", id, state_name(c.state)));
    c.state = CellState::Stopped;
    manage(id, "stop");
}

void Hypervisor::destroy_cell(CellId id) {
    require_enabled();
    require_non_root(id, "destroy");
    cell(id);
    std::erase_if(comm_.channels, [&](const auto& kv) { return kv.second.endpoint_index(id) >= 0; });
    ledger_.release_all(id, kRootCell);
    manage(id, "destroy");
    cells_.erase(id);
}

void Hypervisor::relaunch_cell(CellId id) {
    require_enabled();
    require_non_root(id, "relaunch");
    Cell& c = cell_mut(id);
    if (c.state != CellState::Running && c.state != CellState::Stopped && c.state != CellState::Failed)
        throw Error(Errc::BadState, fmt::format("cannot relaunch cell {} from {}", id, state_name(c.state)));
    c.memory_image.clear();
    c.state = CellState::Running;
    manage(id, "relaunch");
}

std::optional<AccessOutcome> Hypervisor::classify_memory(Cell& c, const Access& access) {
    if (auto gic = platform_.gic_distributor(); gic && AddrRange{gic->base, gic->size}.contains(access.addr, access.width)) {
        note_distributor_access(c.id, access.addr - gic->base);
        return AccessOutcome::Emulated;
    }
    for (const auto& [id, ch] : comm_.channels) {
        if (ch.endpoint_index(c.id) >= 0 && ch.region.contains(access.addr, access.width)) return AccessOutcome::Direct;
    }
    const Resource* r = platform_.find_containing(access.addr, access.width);
    if (!r || ledger_.owner(key_of(*r)) != c.id) return std::nullopt;
    if (const auto* m = std::get_if<MemRegion>(r)) {
        PermSet perms = m->flags;
        if (const MemRegion* own = owned_region(c, access.addr, access.width)) perms = own->flags;
        Perm need = access.kind == AccessKind::MemRead ? Perm::Read : Perm::Write;
        if (!perms.has(need)) return std::nullopt;
    }
    return AccessOutcome::Direct;
}

AccessOutcome Hypervisor::handle_access(CellId id, const Access& access) {
    require_enabled();
    Cell& c = cell_mut(id);
    if (c.state != CellState::Running)
        throw Error(Errc::BadState, fmt::format("cell {} is {}, not Running", id, state_name(c.state)));

    switch (access.kind) {
        case AccessKind::SensitiveInstr:
            if (!sensitive_.contains(access.instr)) return AccessOutcome::Direct;
            record(id, CauseKind::InstructionEmulation, 0, access.instr);
            return AccessOutcome::Emulated;
        case AccessKind::MemRead:
        case AccessKind::MemWrite: {
            check_width(access.width);
            if (access.addr % access.width)
                throw Error(Errc::BadAlignment, fmt::format("0x{:x} not aligned to width {}", access.addr, access.width));
            if (auto outcome = classify_memory(c, access)) return *outcome;
            break;
        }
        case AccessKind::IoRead:
        case AccessKind::IoWrite: {
            check_width(access.width);
            const Resource* r = access.addr <= 0xffff
                                    ? platform_.find_io_containing(static_cast<std::uint32_t>(access.addr), access.width)
                                    : nullptr;
            if (r && ledger_.owner(key_of(*r)) == id) return AccessOutcome::Direct;
            break;
        }
    }
    fail_cell(id, access.addr, access.str());
    return AccessOutcome::Violation;
}

CellId Hypervisor::owner_of(const ResourceKey& key) const {
    require_enabled();
    auto owner = ledger_.owner(key);
    if (!owner) throw Error(Errc::NoSuchResource, describe(key) + " is not a platform resource");
    return *owner;
}

std::string Hypervisor::audit() const {
    if (state_ == HvState::Disabled) {
        if (!ledger_.empty() || !cells_.empty()) return "disabled hypervisor still holds cells or ledger entries";
        return {};
    }
    if (!cells_.contains(kRootCell)) return "root cell missing";
    if (!ledger_.conserves(platform_)) return "ledger keys differ from platform resources";
    for (const auto& [key, owner] : ledger_.entries()) {
        auto it = cells_.find(owner);
        if (it == cells_.end()) return fmt::format("{} owned by missing cell {}", describe(key), owner);
        if (owner == kRootCell) continue;
        auto wanted = requested_resources(it->second.config);
        if (std::none_of(wanted.begin(), wanted.end(), [&](const Resource& r) { return key_of(r) == key; }))
            return fmt::format("cell {} owns {} outside its config", owner, describe(key));
    }
    for (const auto& [id, c] : cells_) {
        if (id == kRootCell) continue;
        for (const Resource& r : requested_resources(c.config))
            if (ledger_.owner(key_of(r)) != id) return fmt::format("cell {} lost {}", id, describe(r));
    }
    return {};
}

bool operator==(const Hypervisor& a, const Hypervisor& b) {
    return a.platform_ == b.platform_ && a.state_ == b.state_ && a.cells_ == b.cells_ && a.ledger_ == b.ledger_ &&
           a.events_ == b.events_ && a.clock_ns_ == b.clock_ns_ && a.next_cell_id_ == b.next_cell_id_ &&
           a.sensitive_ == b.sensitive_ && a.comm_ == b.comm_;
}

std::string export_events_jsonl(std::span<const TrapEvent> events) {
    std::string out;
    for (const TrapEvent& e : events) {
        nlohmann::ordered_json j{{"t", e.time_ns}, {"cell", e.cell}, {"cause", cause_name(e.cause)}, {"detail", e.detail}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace cellsim

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

#include "cellsim/cellconfig.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "bytes.hpp"
#include "cellsim/error.hpp"
#include "lexer.hpp"

namespace cellsim {

std::string_view workload_name(WorkloadKind kind) {
    switch (kind) {
        case WorkloadKind::Idle: return "idle";
        case WorkloadKind::Stress: return "stress";
        case WorkloadKind::LatencyResponder: return "latency-responder";
        case WorkloadKind::Script: return "script";
    }
    return "?";
}

void normalize(CellConfig& cfg) {
    std::sort(cfg.mem.begin(), cfg.mem.end(), [](const MemRegion& a, const MemRegion& b) {
        return std::tie(a.base, a.size) < std::tie(b.base, b.size);
    });
    std::stable_sort(cfg.devices.begin(), cfg.devices.end(),
                     [](const Resource& a, const Resource& b) { return key_of(a) < key_of(b); });
    std::sort(cfg.comm.begin(), cfg.comm.end(), [](const CommDecl& a, const CommDecl& b) { return a.peer < b.peer; });
}

static void semantic(const std::string& cell, const std::string& msg) {
    throw Error(Errc::Semantic, cell.empty() ? msg : fmt::format("cell \"{}\": {}", cell, msg));
}

void check_config(const CellConfig& cfg) {
    if (cfg.name.empty()) semantic("", "missing cell name");
    if (cfg.name.size() > kMaxCellName || !is_valid_name(cfg.name))
        semantic("", fmt::format("bad cell name \"{}\" (1..{} of [A-Za-z0-9_-])", cfg.name, kMaxCellName));
    const std::string& n = cfg.name;
    if (cfg.cpus.empty()) semantic(n, "no CPUs (a cell needs at least one CPU and some memory)");
    if (cfg.mem.empty()) semantic(n, "no memory (a cell needs at least one CPU and some memory)");

    std::vector<Resource> ranges;
    for (const MemRegion& m : cfg.mem) {
        try {
            check_resource(m);
        } catch (const Error& e) {
            semantic(n, e.what());
        }
        ranges.emplace_back(m);
    }
    std::vector<ResourceKey> seen;
    for (const Resource& d : cfg.devices) {
        if (!std::holds_alternative<MmioDevice>(d) && !std::holds_alternative<PciDevice>(d) &&
            !std::holds_alternative<IoPortRange>(d))
            semantic(n, describe(d) + " is not a device");
        try {
            check_resource(d);
        } catch (const Error& e) {
            semantic(n, e.what());
        }
        if (const auto* m = std::get_if<MmioDevice>(&d)) {
            if (m->name.size() > kMaxDeviceName) semantic(n, fmt::format("device name \"{}\" longer than {}", m->name, kMaxDeviceName));
            ranges.push_back(d);
        }
        ResourceKey k = key_of(d);
        if (std::find(seen.begin(), seen.end(), k) != seen.end()) semantic(n, describe(d) + " listed twice");
        seen.push_back(k);
    }
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        for (std::size_t j = i + 1; j < ranges.size(); ++j) {
            if (addr_range(ranges[i]).overlaps(addr_range(ranges[j])))
                semantic(n, describe(ranges[i]) + " overlaps " + describe(ranges[j]));
        }
    }
    for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
        const auto* a = std::get_if<IoPortRange>(&cfg.devices[i]);
        if (!a) continue;
        for (std::size_t j = i + 1; j < cfg.devices.size(); ++j) {
            const auto* b = std::get_if<IoPortRange>(&cfg.devices[j]);
            if (b && a->base < b->end() && b->base < a->end())
                semantic(n, describe(cfg.devices[i]) + " overlaps " + describe(cfg.devices[j]));
        }
    }
    for (std::size_t i = 0; i < cfg.comm.size(); ++i) {
        const CommDecl& c = cfg.comm[i];
        if (c.peer.size() > kMaxCellName || !is_valid_name(c.peer)) semantic(n, fmt::format("bad comm peer \"{}\"", c.peer));
        if (c.peer == cfg.name) semantic(n, "comm peer is the cell itself");
        if (c.size == 0 || c.size % kPageSize) semantic(n, fmt::format("comm size 0x{:x} not a positive page multiple", c.size));
        if (c.vectors == 0) semantic(n, "comm needs at least one vector");
        for (std::size_t j = i + 1; j < cfg.comm.size(); ++j)
            if (cfg.comm[j].peer == c.peer) semantic(n, "two comm declarations for peer " + c.peer);
    }
    if (cfg.workload.kind == WorkloadKind::Script) {
        const std::string& p = cfg.workload.script_path;
        if (p.empty() || p.size() > 0xffff || p.find_first_of("\"\n\r") != std::string::npos)
            semantic(n, "bad script path");
    } else if (!cfg.workload.script_path.empty()) {
        semantic(n, "script path given for a non-script workload");
    }
}

std::vector<Resource> requested_resources(const CellConfig& cfg) {
    std::vector<Resource> out;
    for (std::uint32_t c : cfg.cpus) out.emplace_back(Cpu{c});
    for (const MemRegion& m : cfg.mem) out.emplace_back(m);
    for (const Resource& d : cfg.devices) out.push_back(d);
    for (std::uint32_t i : cfg.irqs) out.emplace_back(IrqLine{i});
    return out;
}

CellConfig parse_config(std::string_view text) {
    CellConfig cfg;
    bool named = false;
    bool ran = false;
    for (const lex::Line& line : lex::tokenize(text)) {
        const lex::Token& head = line.tokens.front();
        const std::string& d = head.text;
        if (d == "cell") {
            line.expect_args(1, 1);
            if (named) line.fail(head, "duplicate 'cell' directive");
            cfg.name = line.tokens[1].text;
            named = true;
        } else if (d == "cpu") {
            line.expect_args(1, 1);
            cfg.cpus.merge(lex::parse_list(line, line.tokens[1]));
        } else if (d == "irq") {
            line.expect_args(1, 1);
            cfg.irqs.merge(lex::parse_list(line, line.tokens[1]));
        } else if (d == "mem") {
            line.expect_args(3, 3);
            PermSet perms;
            try {
                perms = PermSet::parse(line.tokens[3].text);
            } catch (const Error& e) {
                line.fail(line.tokens[3], e.what());
            }
            cfg.mem.push_back(MemRegion{lex::parse_hex(line, line.tokens[1]), lex::parse_hex(line, line.tokens[2]), perms});
        } else if (d == "mmio") {
            line.expect_args(3, 3);
            cfg.devices.emplace_back(MmioDevice{line.tokens[1].text, lex::parse_hex(line, line.tokens[2]),
                                                lex::parse_hex(line, line.tokens[3])});
        } else if (d == "pci") {
            line.expect_args(1, 1);
            std::uint64_t bdf = lex::parse_hex(line, line.tokens[1]);
            if (bdf > 0xffff) line.fail(line.tokens[1], "bdf exceeds 16 bits");
            cfg.devices.emplace_back(PciDevice{static_cast<std::uint16_t>(bdf)});
        } else if (d == "ioport") {
            line.expect_args(2, 2);
            std::uint64_t base = lex::parse_hex(line, line.tokens[1]);
            std::uint64_t len = lex::parse_hex(line, line.tokens[2]);
            if (base > 0xffff) line.fail(line.tokens[1], "port exceeds 0xffff");
            if (len > 0xffff) line.fail(line.tokens[2], "port count exceeds 0xffff");
            cfg.devices.emplace_back(IoPortRange{static_cast<std::uint16_t>(base), static_cast<std::uint16_t>(len)});
        } else if (d == "comm") {
            line.expect_args(3, 3);
            CommDecl c;
            bool have_peer = false, have_size = false, have_vectors = false;
            for (std::size_t i = 1; i < line.tokens.size(); ++i) {
                auto [key, val] = lex::split_kv(line, line.tokens[i]);
                if (key == "peer" && !have_peer) {
                    c.peer = val.text;
                    have_peer = true;
                } else if (key == "size" && !have_size) {
                    c.size = lex::parse_hex(line, val);
                    have_size = true;
                } else if (key == "vectors" && !have_vectors) {
                    std::uint64_t v = lex::parse_dec(line, val);
                    if (v > 0xffff) line.fail(val, "too many vectors");
                    c.vectors = static_cast<std::uint16_t>(v);
                    have_vectors = true;
                } else {
                    line.fail(line.tokens[i], "unexpected or repeated comm key '" + key + "'");
                }
            }
            cfg.comm.push_back(std::move(c));
        } else if (d == "run") {
            line.expect_args(1, 2);
            if (ran) line.fail(head, "duplicate 'run' directive");
            ran = true;
            const std::string& w = line.tokens[1].text;
            if (w == "script") {
                line.expect_args(2, 2);
                cfg.workload = {WorkloadKind::Script, line.tokens[2].text};
            } else {
                line.expect_args(1, 1);
                if (w == "idle") cfg.workload = {WorkloadKind::Idle, {}};
                else if (w == "stress") cfg.workload = {WorkloadKind::Stress, {}};
                else if (w == "latency-responder") cfg.workload = {WorkloadKind::LatencyResponder, {}};
                else line.fail(line.tokens[1], "unknown workload '" + w + "'");
            }
        } else {
            line.fail(head, "unknown directive '" + d + "'");
        }
    }
    normalize(cfg);
    check_config(cfg);
    return cfg;
}

std::string to_text(const CellConfig& cfg) {
    std::string out = fmt::format("cell {}\n", lex::quote(cfg.name));
    if (!cfg.cpus.empty()) out += "cpu " + lex::format_list(cfg.cpus) + "\n";
    for (const MemRegion& m : cfg.mem) out += fmt::format("mem 0x{:x} 0x{:x} {}\n", m.base, m.size, m.flags.str());
    for (const Resource& r : cfg.devices) {
        if (const auto* d = std::get_if<MmioDevice>(&r))
            out += fmt::format("mmio {} 0x{:x} 0x{:x}\n", d->name, d->base, d->size);
        else if (const auto* p = std::get_if<PciDevice>(&r))
            out += fmt::format("pci 0x{:04x}\n", p->bdf);
        else if (const auto* io = std::get_if<IoPortRange>(&r))
            out += fmt::format("ioport 0x{:x} 0x{:x}\n", io->base, io->len);
    }
    if (!cfg.irqs.empty()) out += "irq " + lex::format_list(cfg.irqs) + "\n";
    for (const CommDecl& c : cfg.comm)
        out += fmt::format("comm peer={} size=0x{:x} vectors={}\n", c.peer, c.size, c.vectors);
    if (cfg.workload.kind == WorkloadKind::Script)
        out += fmt::format("run script {}\n", lex::quote(cfg.workload.script_path));
    else
        out += fmt::format("run {}\n", workload_name(cfg.workload.kind));
    return out;
}

namespace {

enum : std::uint8_t { kDevMmio = 0, kDevPci = 1, kDevIoPort = 2 };

std::uint16_t count16(std::size_t n, const char* what) {
    if (n > 0xffff) throw Error(Errc::InvalidArgument, fmt::format("too many {} for the binary format", what));
    return static_cast<std::uint16_t>(n);
}

}  // namespace

std::vector<std::uint8_t> emit_binary(const CellConfig& cfg) {
    check_config(cfg);
    CellConfig c = cfg;
    normalize(c);

    bytes::Writer w;
    w.u32(kConfigMagic);
    w.u16(kConfigVersion);
    w.u16(count16(c.cpus.size(), "cpus"));
    w.u16(count16(c.mem.size(), "memory regions"));
    w.u16(count16(c.devices.size(), "devices"));
    w.u16(count16(c.irqs.size(), "irqs"));
    w.u16(count16(c.comm.size(), "comm regions"));
    w.fixed(c.name, 32);
    for (std::uint32_t cpu : c.cpus) w.u32(cpu);
    for (const MemRegion& m : c.mem) {
        w.u64(m.base);
        w.u64(m.size);
        w.u32(m.flags.bits());
    }
    for (const Resource& r : c.devices) {
        if (const auto* d = std::get_if<MmioDevice>(&r)) {
            w.u8(kDevMmio);
            w.fixed(d->name, 16);
            w.u64(d->base);
            w.u64(d->size);
        } else if (const auto* p = std::get_if<PciDevice>(&r)) {
            w.u8(kDevPci);
            w.fixed("", 16);
            w.u64(p->bdf);
            w.u64(0);
        } else if (const auto* io = std::get_if<IoPortRange>(&r)) {
            w.u8(kDevIoPort);
            w.fixed("", 16);
            w.u64(io->base);
            w.u64(io->len);
        }
    }
    for (std::uint32_t irq : c.irqs) w.u32(irq);
    for (const CommDecl& cd : c.comm) {
        w.fixed(cd.peer, 32);
        w.u64(cd.size);
        w.u16(cd.vectors);
    }
    // workload trailer
    w.u8(static_cast<std::uint8_t>(c.workload.kind));
    w.u16(static_cast<std::uint16_t>(c.workload.script_path.size()));
    w.fixed(c.workload.script_path, c.workload.script_path.size());
    return w.take();
}

CellConfig load_binary(std::span<const std::uint8_t> data) {
    bytes::Reader r(data);
    if (r.remaining() < 4) throw Error(Errc::TruncatedRecord, "config shorter than its magic");
    std::uint32_t magic = r.u32();
    if (magic != kConfigMagic) throw Error(Errc::BadMagic, fmt::format("bad config magic 0x{:08x}", magic));
    std::uint16_t version = r.u16();
    if (version != kConfigVersion) throw Error(Errc::UnsupportedVersion, fmt::format("config version {} unsupported", version));

    CellConfig cfg;
    const std::uint16_t n_cpu = r.u16(), n_mem = r.u16(), n_dev = r.u16(), n_irq = r.u16(), n_comm = r.u16();
    cfg.name = r.fixed(32);
    for (unsigned i = 0; i < n_cpu; ++i)
        if (!cfg.cpus.insert(r.u32()).second) throw Error(Errc::InvariantViolation, "duplicate cpu id");
    for (unsigned i = 0; i < n_mem; ++i) {
        MemRegion m;
        m.base = r.u64();
        m.size = r.u64();
        std::uint32_t flags = r.u32();
        if (flags & ~PermSet::kAllBits) throw Error(Errc::InvariantViolation, "unknown permission bits");
        m.flags = PermSet::from_bits(flags);
        cfg.mem.push_back(m);
    }
    for (unsigned i = 0; i < n_dev; ++i) {
        std::uint8_t kind = r.u8();
        std::string name = r.fixed(16);
        std::uint64_t a = r.u64();
        std::uint64_t b = r.u64();
        switch (kind) {
            case kDevMmio: cfg.devices.emplace_back(MmioDevice{name, a, b}); break;
            case kDevPci:
                if (a > 0xffff || b != 0 || !name.empty()) throw Error(Errc::InvariantViolation, "malformed pci record");
                cfg.devices.emplace_back(PciDevice{static_cast<std::uint16_t>(a)});
                break;
            case kDevIoPort:
                if (a > 0xffff || b > 0xffff || !name.empty()) throw Error(Errc::InvariantViolation, "malformed ioport record");
                cfg.devices.emplace_back(IoPortRange{static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b)});
                break;
            default: throw Error(Errc::InvariantViolation, fmt::format("unknown device kind {}", kind));
        }
    }
    for (unsigned i = 0; i < n_irq; ++i)
        if (!cfg.irqs.insert(r.u32()).second) throw Error(Errc::InvariantViolation, "duplicate irq");
    for (unsigned i = 0; i < n_comm; ++i) {
        CommDecl c;
        c.peer = r.fixed(32);
        c.size = r.u64();
        c.vectors = r.u16();
        cfg.comm.push_back(std::move(c));
    }
    std::uint8_t wk = r.u8();
    if (wk > static_cast<std::uint8_t>(WorkloadKind::Script)) throw Error(Errc::InvariantViolation, "unknown workload kind");
    std::uint16_t path_len = r.u16();
    auto path = r.take(path_len);
    cfg.workload = {static_cast<WorkloadKind>(wk), std::string(path.begin(), path.end())};
    if (!r.done()) throw Error(Errc::InvariantViolation, "trailing bytes after config");

    normalize(cfg);
    try {
        check_config(cfg);
    } catch (const Error& e) {
        throw Error(Errc::InvariantViolation, e.what());
    }
    return cfg;
}

std::string Violation::str() const {
    switch (kind) {
        case Kind::NoSuchResource: return "NoSuchResource(" + describe(resource) + ")";
        case Kind::NotOwnedByRoot: return fmt::format("NotOwnedByRoot({}, owner {})", describe(resource), owner);
        case Kind::SharedRegionBusy: return "SharedRegionBusy(" + describe(resource) + ")";
        case Kind::CommMismatch: return "CommMismatch(" + detail + ")";
    }
    return "?";
}

std::vector<Violation> validate_against(const CellConfig& cfg, const MachinePlatform& platform,
                                        const OwnershipLedger& ledger) {
    std::vector<Violation> out;
    for (const Resource& r : requested_resources(cfg)) {
        ResourceKey key = key_of(r);
        if (!platform.contains(key)) {
            out.push_back({Violation::Kind::NoSuchResource, key, kRootCell, {}});
            continue;
        }
        auto owner = ledger.owner(key);
        if (!owner || *owner != kRootCell)
            out.push_back({Violation::Kind::NotOwnedByRoot, key, owner.value_or(kRootCell), owner ? "" : "unowned"});
    }
    return out;
}

}  // namespace cellsim

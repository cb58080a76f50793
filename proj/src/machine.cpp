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

#include "cellsim/machine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "cellsim/error.hpp"
#include "cellsim/hypervisor.hpp"
#include "lexer.hpp"

namespace cellsim {

static bool finite(const DistParams& d) {
    return std::isfinite(d.shift_us) && std::isfinite(d.mu_log) && std::isfinite(d.sigma_log);
}

void check_bus_model(const BusModel& bus) {
    if (!(std::isfinite(bus.base_latency_us) && bus.base_latency_us > 0))
        throw Error(Errc::InvalidArgument, "bus base latency must be positive and finite");
    if (!(bus.contention_prob >= 0.0 && bus.contention_prob <= 1.0))
        throw Error(Errc::InvalidArgument, "contention probability must lie in [0, 1]");
    for (const DistParams* d : {&bus.hv_overhead, &bus.contention}) {
        if (!finite(*d)) throw Error(Errc::InvalidArgument, "bus distribution parameters must be finite");
        if (d->sigma_log < 0) throw Error(Errc::InvalidArgument, "log-normal sigma must be non-negative");
        if (d->shift_us < 0) throw Error(Errc::InvalidArgument, "distribution shift must be non-negative");
    }
}

MachinePlatform build_platform(const PlatformSpec& spec) {
    if (spec.name.empty() || spec.name.size() > 63)
        throw Error(Errc::InvalidArgument, "platform name must be 1..63 bytes");
    for (const Resource& r : spec.resources) check_resource(r);
    check_bus_model(spec.bus);

    std::vector<std::uint32_t> cpus;
    std::set<std::uint32_t> irqs;
    std::set<std::uint16_t> pci;
    std::set<std::string> names;
    std::vector<std::size_t> ranges;
    std::vector<const IoPortRange*> ports;
    for (std::size_t i = 0; i < spec.resources.size(); ++i) {
        const Resource& r = spec.resources[i];
        if (const auto* c = std::get_if<Cpu>(&r)) cpus.push_back(c->index);
        if (const auto* l = std::get_if<IrqLine>(&r)) {
            if (!irqs.insert(l->number).second) throw Error(Errc::DuplicateIrq, fmt::format("irq {} listed twice", l->number));
        }
        if (const auto* p = std::get_if<PciDevice>(&r)) {
            if (!pci.insert(p->bdf).second) throw Error(Errc::InvalidArgument, describe(r) + " listed twice");
        }
        if (const auto* d = std::get_if<MmioDevice>(&r)) {
            if (!names.insert(d->name).second) throw Error(Errc::InvalidArgument, "device name " + d->name + " listed twice");
        }
        if (const auto* p = std::get_if<IoPortRange>(&r)) ports.push_back(p);
        if (is_address_range(r)) ranges.push_back(i);
    }

    if (cpus.empty()) throw Error(Errc::EmptyCpuSet, "platform has no CPUs");
    std::sort(cpus.begin(), cpus.end());
    for (std::size_t i = 0; i < cpus.size(); ++i) {
        if (cpus[i] != i) throw Error(Errc::InvalidArgument, "CPU indices must be unique and contiguous from 0");
    }

    std::sort(ranges.begin(), ranges.end(), [&](std::size_t a, std::size_t b) {
        return addr_range(spec.resources[a]).base < addr_range(spec.resources[b]).base;
    });
    for (std::size_t i = 1; i < ranges.size(); ++i) {
        const Resource& prev = spec.resources[ranges[i - 1]];
        const Resource& cur = spec.resources[ranges[i]];
        if (addr_range(prev).end() > addr_range(cur).base)
            throw Error(Errc::Overlap, describe(prev) + " overlaps " + describe(cur));
    }
    std::sort(ports.begin(), ports.end(), [](auto* a, auto* b) { return a->base < b->base; });
    for (std::size_t i = 1; i < ports.size(); ++i) {
        if (ports[i - 1]->end() > ports[i]->base)
            throw Error(Errc::Overlap, describe(Resource{*ports[i - 1]}) + " overlaps " + describe(Resource{*ports[i]}));
    }

    MachinePlatform p;
    p.name_ = spec.name;
    p.resources_ = spec.resources;
    p.has_pci_ = spec.has_pci;
    p.gic_ = spec.gic;
    p.bus_ = spec.bus;
    p.cpu_count_ = static_cast<std::uint32_t>(cpus.size());
    p.ranges_ = std::move(ranges);
    return p;
}

bool MachinePlatform::contains(const ResourceKey& key) const { return find(key) != nullptr; }

const Resource* MachinePlatform::find(const ResourceKey& key) const {
    for (const Resource& r : resources_)
        if (key_of(r) == key) return &r;
    return nullptr;
}

const Resource* MachinePlatform::find_containing(std::uint64_t addr, std::uint64_t len) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), addr,
                               [&](std::uint64_t a, std::size_t i) { return a < addr_range(resources_[i]).base; });
    if (it == ranges_.begin()) return nullptr;
    const Resource& r = resources_[*std::prev(it)];
    return addr_range(r).contains(addr, len) ? &r : nullptr;
}

const Resource* MachinePlatform::find_io_containing(std::uint32_t port, std::uint32_t len) const {
    for (const Resource& r : resources_) {
        if (const auto* p = std::get_if<IoPortRange>(&r)) {
            if (port >= p->base && port + len <= p->end()) return &r;
        }
    }
    return nullptr;
}

std::optional<MmioDevice> MachinePlatform::gic_distributor() const {
    for (const Resource& r : resources_) {
        if (const auto* d = std::get_if<MmioDevice>(&r); d && d->name == "gic-dist") return *d;
    }
    return std::nullopt;
}

namespace {

bool parse_bool(const lex::Line& line, const lex::Token& t) {
    if (t.text == "yes" || t.text == "on") return true;
    if (t.text == "no" || t.text == "off") return false;
    line.fail(t, "expected yes/no, got \"" + t.text + "\"");
}

DistParams parse_dist(const lex::Line& line) {
    DistParams d;
    for (std::size_t i = 1; i < line.tokens.size(); ++i) {
        const lex::Token& t = line.tokens[i];
        if (t.text == "none") {
            d.lognormal = false;
            continue;
        }
        auto [key, val] = lex::split_kv(line, t);
        if (key == "shift") {
            d.shift_us = lex::parse_double(line, val);
        } else if (key == "lognormal") {
            std::size_t comma = val.text.find(',');
            if (comma == std::string::npos) line.fail(val, "expected lognormal=<mu>,<sigma>");
            d.lognormal = true;
            d.mu_log = lex::parse_double(line, lex::Token{val.text.substr(0, comma), val.col, false});
            d.sigma_log = lex::parse_double(line, lex::Token{val.text.substr(comma + 1), val.col, false});
        } else {
            line.fail(t, "unknown distribution key '" + key + "'");
        }
    }
    return d;
}

std::string format_dist(const DistParams& d) {
    if (!d.lognormal) return fmt::format("shift={} none", d.shift_us);
    return fmt::format("shift={} lognormal={},{}", d.shift_us, d.mu_log, d.sigma_log);
}

}  // namespace

PlatformSpec parse_platform_spec(std::string_view text) {
    PlatformSpec spec;
    bool named = false;
    for (const lex::Line& line : lex::tokenize(text)) {
        const lex::Token& head = line.tokens.front();
        const std::string& d = head.text;
        if (d == "platform") {
            line.expect_args(1, 1);
            if (named) line.fail(head, "duplicate 'platform' directive");
            spec.name = line.tokens[1].text;
            named = true;
        } else if (d == "gic") {
            line.expect_args(1, 1);
            const std::string& v = line.tokens[1].text;
            if (v == "v2") spec.gic = GicVersion::V2;
            else if (v == "v3") spec.gic = GicVersion::V3;
            else line.fail(line.tokens[1], "expected v2 or v3");
        } else if (d == "has-pci") {
            line.expect_args(1, 1);
            spec.has_pci = parse_bool(line, line.tokens[1]);
        } else if (d == "cpu") {
            line.expect_args(1, 1);
            for (std::uint32_t c : lex::parse_list(line, line.tokens[1])) spec.resources.push_back(Cpu{c});
        } else if (d == "irq") {
            line.expect_args(1, 1);
            for (std::uint32_t n : lex::parse_list(line, line.tokens[1])) spec.resources.push_back(IrqLine{n});
        } else if (d == "mem") {
            line.expect_args(2, 3);
            PermSet perms{Perm::Read, Perm::Write, Perm::Execute, Perm::Dma};
            if (line.tokens.size() == 4) {
                try {
                    perms = PermSet::parse(line.tokens[3].text);
                } catch (const Error& e) {
                    line.fail(line.tokens[3], e.what());
                }
            }
            spec.resources.push_back(
                MemRegion{lex::parse_hex(line, line.tokens[1]), lex::parse_hex(line, line.tokens[2]), perms});
        } else if (d == "mmio") {
            line.expect_args(3, 3);
            spec.resources.push_back(MmioDevice{line.tokens[1].text, lex::parse_hex(line, line.tokens[2]),
                                                lex::parse_hex(line, line.tokens[3])});
        } else if (d == "pci") {
            line.expect_args(1, 1);
            std::uint64_t bdf = lex::parse_hex(line, line.tokens[1]);
            if (bdf > 0xffff) line.fail(line.tokens[1], "bdf exceeds 16 bits");
            spec.resources.push_back(PciDevice{static_cast<std::uint16_t>(bdf)});
        } else if (d == "ioport") {
            line.expect_args(2, 2);
            std::uint64_t base = lex::parse_hex(line, line.tokens[1]);
            std::uint64_t len = lex::parse_hex(line, line.tokens[2]);
            if (base > 0xffff || len > 0xffff) line.fail(line.tokens[1], "port range exceeds 16 bits");
            spec.resources.push_back(IoPortRange{static_cast<std::uint16_t>(base), static_cast<std::uint16_t>(len)});
        } else if (d == "bus") {
            line.expect_args(1, 4);
            for (std::size_t i = 1; i < line.tokens.size(); ++i) {
                auto [key, val] = lex::split_kv(line, line.tokens[i]);
                if (key == "base") spec.bus.base_latency_us = lex::parse_double(line, val);
                else if (key == "contention-prob") spec.bus.contention_prob = lex::parse_double(line, val);
                else if (key == "jitter") spec.bus.phase_jitter = parse_bool(line, val);
                else line.fail(line.tokens[i], "unknown bus key '" + key + "'");
            }
        } else if (d == "overhead") {
            line.expect_args(1, 2);
            spec.bus.hv_overhead = parse_dist(line);
        } else if (d == "contention") {
            line.expect_args(1, 2);
            spec.bus.contention = parse_dist(line);
        } else {
            line.fail(head, "unknown directive '" + d + "'");
        }
    }
    if (!named) throw SyntaxError(1, 1, "missing 'platform' directive");
    return spec;
}

std::string to_text(const MachinePlatform& platform) {
    std::string out = fmt::format("platform {}\n", lex::quote(platform.name()));
    out += fmt::format("gic v{}\n", static_cast<int>(platform.gic_version()));
    out += fmt::format("has-pci {}\n", platform.has_pci() ? "yes" : "no");
    std::set<std::uint32_t> cpus, irqs;
    for (const Resource& r : platform.resources()) {
        if (const auto* c = std::get_if<Cpu>(&r)) cpus.insert(c->index);
        if (const auto* l = std::get_if<IrqLine>(&r)) irqs.insert(l->number);
    }
    out += "cpu " + lex::format_list(cpus) + "\n";
    for (const Resource& r : platform.resources()) {
        if (const auto* m = std::get_if<MemRegion>(&r))
            out += fmt::format("mem 0x{:x} 0x{:x} {}\n", m->base, m->size, m->flags.str());
        else if (const auto* d = std::get_if<MmioDevice>(&r))
            out += fmt::format("mmio {} 0x{:x} 0x{:x}\n", d->name, d->base, d->size);
        else if (const auto* p = std::get_if<PciDevice>(&r))
            out += fmt::format("pci 0x{:04x}\n", p->bdf);
        else if (const auto* io = std::get_if<IoPortRange>(&r))
            out += fmt::format("ioport 0x{:x} 0x{:x}\n", io->base, io->len);
    }
    if (!irqs.empty()) out += "irq " + lex::format_list(irqs) + "\n";
    const BusModel& bus = platform.bus();
    out += fmt::format("bus base={} contention-prob={} jitter={}\n", bus.base_latency_us, bus.contention_prob,
                       bus.phase_jitter ? "on" : "off");
    out += "overhead " + format_dist(bus.hv_overhead) + "\n";
    out += "contention " + format_dist(bus.contention) + "\n";
    return out;
}

PlatformSpec jetson_tk1_spec() {
    // Representative Tegra K1 layout; 2 GiB of RAM at 0x80000000 split into
    // carve-outs so inmates can take whole regions.
    PlatformSpec spec;
    spec.name = "jetson-tk1";
    spec.gic = GicVersion::V2;
    spec.has_pci = false;
    for (std::uint32_t c = 0; c < 4; ++c) spec.resources.push_back(Cpu{c});
    const PermSet rwxd{Perm::Read, Perm::Write, Perm::Execute, Perm::Dma};
    spec.resources.push_back(MemRegion{0x8000'0000, 0x1000'0000, rwxd});
    spec.resources.push_back(MemRegion{0x9000'0000, 0x0010'0000, rwxd});
    spec.resources.push_back(MemRegion{0x9010'0000, 0x0010'0000, rwxd});
    spec.resources.push_back(MemRegion{0x9020'0000, 0x6fe0'0000, rwxd});
    spec.resources.push_back(MmioDevice{"gic-dist", 0x5004'1000, 0x1000});
    spec.resources.push_back(MmioDevice{"gic-cpu", 0x5004'2000, 0x2000});
    spec.resources.push_back(MmioDevice{"gpio", 0x6000'd000, 0x1000});
    spec.resources.push_back(MmioDevice{"uart", 0x7000'6000, 0x1000});
    for (std::uint32_t n = 32; n <= 160; ++n) spec.resources.push_back(IrqLine{n});
    return spec;
}

MachinePlatform platform_preset(std::string_view name) {
    if (name == "jetson-tk1") return build_platform(jetson_tk1_spec());
    throw Error(Errc::InvalidArgument, fmt::format("unknown platform preset \"{}\"", name));
}

LoadLevel bus_load(const Hypervisor& hv, CellId measured) {
    LoadLevel level;
    for (const auto& [id, cell] : hv.cells()) {
        if (id != measured && cell.state == CellState::Running && cell.config.workload.kind == WorkloadKind::Stress)
            level.stressed = true;
    }
    return level;
}

}  // namespace cellsim

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

#include "cellsim/resource.hpp"

#include <fmt/format.h>

#include "cellsim/error.hpp"

namespace cellsim {

PermSet PermSet::from_bits(std::uint32_t bits) {
    if (bits & ~kAllBits) throw Error(Errc::InvalidArgument, fmt::format("permission bits 0x{:x} out of range", bits));
    PermSet p;
    p.bits_ = bits;
    return p;
}

PermSet PermSet::parse(std::string_view text) {
    if (text == "-") return {};
    if (text.empty()) throw Error(Errc::InvalidArgument, "empty permission string");
    std::uint32_t bits = 0;
    for (char c : text) {
        std::uint32_t bit = 0;
        switch (c) {
            case 'r': bit = static_cast<std::uint32_t>(Perm::Read); break;
            case 'w': bit = static_cast<std::uint32_t>(Perm::Write); break;
            case 'x': bit = static_cast<std::uint32_t>(Perm::Execute); break;
            case 'd': bit = static_cast<std::uint32_t>(Perm::Dma); break;
            default: throw Error(Errc::InvalidArgument, fmt::format("bad permission '{}' in \"{}\"", c, text));
        }
        if (bits & bit) throw Error(Errc::InvalidArgument, fmt::format("repeated permission '{}' in \"{}\"", c, text));
        bits |= bit;
    }
    return from_bits(bits);
}

std::string PermSet::str() const {
    std::string s;
    if (has(Perm::Read)) s += 'r';
    if (has(Perm::Write)) s += 'w';
    if (has(Perm::Execute)) s += 'x';
    if (has(Perm::Dma)) s += 'd';
    return s.empty() ? "-" : s;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

ResourceKey key_of(const Resource& r) {
    return std::visit(
        overloaded{
            [](const Cpu& c) { return ResourceKey{ResourceKind::Cpu, c.index, 0}; },
            [](const MemRegion& m) { return ResourceKey{ResourceKind::Mem, m.base, m.size}; },
            [](const MmioDevice& d) { return ResourceKey{ResourceKind::Mmio, d.base, d.size}; },
            [](const PciDevice& d) { return ResourceKey{ResourceKind::Pci, d.bdf, 0}; },
            [](const IoPortRange& p) { return ResourceKey{ResourceKind::IoPort, p.base, p.len}; },
            [](const IrqLine& l) { return ResourceKey{ResourceKind::Irq, l.number, 0}; },
        },
        r);
}

ResourceKind kind_of(const Resource& r) { return static_cast<ResourceKind>(r.index()); }

std::string describe(const ResourceKey& k) {
    switch (k.kind) {
        case ResourceKind::Cpu: return fmt::format("cpu {}", k.a);
        case ResourceKind::Mem: return fmt::format("mem 0x{:x}+0x{:x}", k.a, k.b);
        case ResourceKind::Mmio: return fmt::format("mmio 0x{:x}+0x{:x}", k.a, k.b);
        case ResourceKind::Pci: return fmt::format("pci {:04x}", k.a);
        case ResourceKind::IoPort: return fmt::format("ioport 0x{:x}+0x{:x}", k.a, k.b);
        case ResourceKind::Irq: return fmt::format("irq {}", k.a);
    }
    return "?";
}

std::string describe(const Resource& r) {
    if (const auto* d = std::get_if<MmioDevice>(&r)) return fmt::format("mmio {} 0x{:x}+0x{:x}", d->name, d->base, d->size);
    return describe(key_of(r));
}

bool is_address_range(const Resource& r) {
    return std::holds_alternative<MemRegion>(r) || std::holds_alternative<MmioDevice>(r);
}

AddrRange addr_range(const Resource& r) {
    if (const auto* m = std::get_if<MemRegion>(&r)) return {m->base, m->size};
    if (const auto* d = std::get_if<MmioDevice>(&r)) return {d->base, d->size};
    throw Error(Errc::InvalidArgument, describe(r) + " is not an address range");
}

static void check_range(const Resource& r, std::uint64_t base, std::uint64_t size) {
    if (size == 0) throw Error(Errc::InvalidArgument, describe(r) + ": zero size");
    if (base % kPageSize || size % kPageSize) throw Error(Errc::InvalidArgument, describe(r) + ": not page aligned");
    if (base + size < base) throw Error(Errc::InvalidArgument, describe(r) + ": end overflows 64 bits");
}

void check_resource(const Resource& r) {
    std::visit(overloaded{
                   [](const Cpu&) {},
                   [&](const MemRegion& m) { check_range(r, m.base, m.size); },
                   [&](const MmioDevice& d) {
                       if (!is_valid_name(d.name)) throw Error(Errc::InvalidArgument, "bad device name \"" + d.name + "\"");
                       check_range(r, d.base, d.size);
                   },
                   [](const PciDevice&) {},
                   [&](const IoPortRange& p) {
                       if (p.len == 0) throw Error(Errc::InvalidArgument, describe(r) + ": zero length");
                       if (p.end() > 65536) throw Error(Errc::InvalidArgument, describe(r) + ": beyond port 0xffff");
                   },
                   [](const IrqLine&) {},
               },
               r);
}

bool is_valid_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

}  // namespace cellsim

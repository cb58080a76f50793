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

#include "cellsim/comm.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "cellsim/error.hpp"
#include "cellsim/hypervisor.hpp"
#include "cellsim/irq.hpp"

namespace cellsim {

int Channel::endpoint_index(CellId cell) const {
    if (ends[0].cell == cell) return 0;
    if (ends[1].cell == cell) return 1;
    return -1;
}

namespace {

/// Lowest bus-0 device/function not used by the cell's own PCI devices or by
/// its other channel endpoints.
std::uint16_t free_bdf(const Hypervisor& hv, CellId cell) {
    std::vector<std::uint16_t> used;
    for (const Resource& r : hv.cell(cell).config.devices)
        if (const auto* p = std::get_if<PciDevice>(&r)) used.push_back(p->bdf);
    for (const auto& [id, ch] : hv.comm().channels) {
        int e = ch.endpoint_index(cell);
        if (e >= 0) used.push_back(ch.ends[static_cast<std::size_t>(e)].device.bdf);
    }
    for (std::uint16_t bdf = 0; bdf < 256; ++bdf) {
        if (std::find(used.begin(), used.end(), bdf) == used.end()) return bdf;
    }
    throw Error(Errc::BadSize, fmt::format("cell {} has no free virtual PCI slot", cell));
}

/// Top-down first fit inside the memory `owner` holds, skipping ranges other
/// channels already use.
std::optional<AddrRange> carve(const Hypervisor& hv, CellId owner, std::uint64_t size) {
    std::vector<AddrRange> regions;
    for (const ResourceKey& k : hv.ledger().owned_by(owner))
        if (k.kind == ResourceKind::Mem) regions.push_back({k.a, k.b});
    std::sort(regions.begin(), regions.end(), [](const AddrRange& a, const AddrRange& b) { return a.base > b.base; });

    std::vector<AddrRange> taken;
    for (const auto& [id, ch] : hv.comm().channels) taken.push_back(ch.region);
    for (const AddrRange& r : regions) {
        if (r.size < size) continue;
        std::uint64_t top = r.end();
        while (top - r.base >= size) {
            AddrRange want{top - size, size};
            auto hit = std::find_if(taken.begin(), taken.end(), [&](const AddrRange& t) { return t.overlaps(want); });
            if (hit == taken.end()) return want;
            if (hit->base < r.base + size) break;
            top = hit->base;  // slide below the blocking channel
        }
    }
    return std::nullopt;
}

Channel& channel_of(Hypervisor& hv, ChannelId ch) {
    auto it = hv.comm().channels.find(ch);
    if (it == hv.comm().channels.end()) throw Error(Errc::NoSuchChannel, fmt::format("no channel {}", ch));
    return it->second;
}

int endpoint_of(const Channel& c, CellId cell) {
    int e = c.endpoint_index(cell);
    if (e < 0) throw Error(Errc::NotEndpoint, fmt::format("cell {} is not an endpoint of channel {}", cell, c.id));
    return e;
}

}  // namespace

ChannelId create_channel(Hypervisor& hv, CellId a, CellId b, std::uint64_t size, std::uint16_t vectors) {
    if (!hv.enabled()) throw Error(Errc::NotEnabled, "hypervisor is not enabled");
    hv.cell(a);
    hv.cell(b);
    if (a == b) throw Error(Errc::SelfChannel, "a channel needs two distinct cells");
    if (size == 0 || size % kPageSize)
        throw Error(Errc::BadSize, fmt::format("channel size 0x{:x} is not a positive multiple of 0x{:x}", size, kPageSize));
    if (vectors == 0) throw Error(Errc::BadVector, "a channel needs at least one doorbell vector");

    auto region = carve(hv, a, size);
    if (!region) throw Error(Errc::BadSize, fmt::format("cell {} has no free 0x{:x}-byte range to share", a, size));

    Channel ch;
    ch.id = hv.comm().next_id;
    ch.region = *region;
    ch.vectors = vectors;
    ch.buffer.assign(size, 0);
    ch.ends[0].cell = a;
    ch.ends[1].cell = b;
    ch.ends[0].device = VirtPciDevice{free_bdf(hv, a), kVirtPciVendor, kVirtPciDevice, vectors};
    ch.ends[1].device = VirtPciDevice{free_bdf(hv, b), kVirtPciVendor, kVirtPciDevice, vectors};

    hv.comm().channels.emplace(ch.id, ch);
    ++hv.comm().next_id;
    hv.record(a, CauseKind::Management, ch.id, fmt::format("channel {} {}<->{} 0x{:x}@0x{:x}", ch.id, a, b, size, region->base));
    return ch.id;
}

std::optional<IrqDelivery> send(Hypervisor& hv, ChannelId id, CellId from, std::uint64_t offset,
                                std::span<const std::uint8_t> payload, std::uint16_t vector) {
    Channel& ch = channel_of(hv, id);
    const int e = endpoint_of(ch, from);
    if (hv.cell(from).state != CellState::Running)
        throw Error(Errc::BadState, fmt::format("sender cell {} is not Running", from));
    if (offset > ch.buffer.size() || payload.size() > ch.buffer.size() - offset)
        throw Error(Errc::OutOfRegion, fmt::format("[0x{:x}, +0x{:x}) exceeds channel {} (0x{:x} bytes)", offset,
                                                   payload.size(), id, ch.buffer.size()));
    if (vector >= ch.vectors) throw Error(Errc::BadVector, fmt::format("vector {} >= {}", vector, ch.vectors));

    std::copy(payload.begin(), payload.end(), ch.buffer.begin() + static_cast<std::ptrdiff_t>(offset));
    ChannelEndpoint& peer = ch.ends[static_cast<std::size_t>(1 - e)];
    peer.pending.push_back(vector);
    hv.comm().traffic.push_back({hv.clock_ns(), id, e, vector, payload.size()});

    if (hv.cell(peer.cell).state != CellState::Running) return std::nullopt;
    IrqDelivery d;
    d.line = vector;
    d.owner = peer.cell;
    d.raised_at = hv.clock_ns();
    d.path = IrqPath::Reinjected;
    d.latency_us = sample_latency({true, bus_load(hv, peer.cell).stressed}, hv.platform().bus(), hv.rng());
    d.delivered_at = d.raised_at + static_cast<std::uint64_t>(d.latency_us * 1000.0 + 0.5);
    hv.record(peer.cell, CauseKind::IrqReinjection, vector, fmt::format("msi-x channel {} vector {}", id, vector));
    return d;
}

std::vector<std::uint16_t> poll(Hypervisor& hv, ChannelId id, CellId cell) {
    Channel& ch = channel_of(hv, id);
    auto& pending = ch.ends[static_cast<std::size_t>(endpoint_of(ch, cell))].pending;
    std::vector<std::uint16_t> out(pending.begin(), pending.end());
    pending.clear();
    return out;
}

std::vector<std::uint8_t> read_shared(const Hypervisor& hv, ChannelId id, CellId cell, std::uint64_t offset,
                                      std::uint64_t len) {
    auto it = hv.comm().channels.find(id);
    if (it == hv.comm().channels.end()) throw Error(Errc::NoSuchChannel, fmt::format("no channel {}", id));
    const Channel& ch = it->second;
    endpoint_of(ch, cell);
    if (offset > ch.buffer.size() || len > ch.buffer.size() - offset)
        throw Error(Errc::OutOfRegion, fmt::format("read beyond channel {}", id));
    auto first = ch.buffer.begin() + static_cast<std::ptrdiff_t>(offset);
    return {first, first + static_cast<std::ptrdiff_t>(len)};
}

std::uint32_t pci_cfg_read(Hypervisor& hv, CellId cell, std::uint16_t bdf, std::uint16_t offset) {
    if (!hv.enabled()) throw Error(Errc::NotEnabled, "hypervisor is not enabled");
    if (hv.cell(cell).state != CellState::Running)
        throw Error(Errc::BadState, fmt::format("cell {} is not Running", cell));
    if (offset % 4) throw Error(Errc::BadAlignment, fmt::format("config offset 0x{:x} not dword aligned", offset));
    if (offset >= 0x1000) throw Error(Errc::InvalidArgument, fmt::format("config offset 0x{:x} beyond 4 KiB", offset));
    hv.record(cell, CauseKind::InstructionEmulation, bdf, "pci-cfg");

    for (const auto& [id, ch] : hv.comm().channels) {
        int e = ch.endpoint_index(cell);
        if (e < 0) continue;
        const VirtPciDevice& dev = ch.ends[static_cast<std::size_t>(e)].device;
        if (dev.bdf != bdf) continue;
        switch (offset) {
            case 0x00: return (std::uint32_t{dev.device_id} << 16) | dev.vendor_id;
            case 0x08: return 0xff000001;  // class ff (unassigned), revision 1
            case 0x2c: return (std::uint32_t{dev.device_id} << 16) | dev.vendor_id;
            default: return 0;
        }
    }
    return kPciAbsent;
}

std::string export_traffic_jsonl(const ChannelTable& table) {
    std::string out;
    for (const ChannelTraffic& t : table.traffic) {
        nlohmann::ordered_json j{{"t", t.time_ns},
                                 {"ch", t.channel},
                                 {"dir", t.direction == 0 ? "a->b" : "b->a"},
                                 {"vector", t.vector},
                                 {"len", t.len}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace cellsim

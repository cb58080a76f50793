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

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellsim/ledger.hpp"
#include "cellsim/resource.hpp"

namespace cellsim {

class Hypervisor;
struct IrqDelivery;

using ChannelId = std::uint32_t;

inline constexpr std::uint16_t kVirtPciVendor = 0x110A;
inline constexpr std::uint16_t kVirtPciDevice = 0x4106;
inline constexpr std::uint32_t kPciAbsent = 0xFFFFFFFF;

struct VirtPciDevice {
    std::uint16_t bdf = 0;
    std::uint16_t vendor_id = kVirtPciVendor;
    std::uint16_t device_id = kVirtPciDevice;
    std::uint16_t msix_vectors = 1;
    friend bool operator==(const VirtPciDevice&, const VirtPciDevice&) = default;
};

struct ChannelEndpoint {
    CellId cell = kRootCell;
    VirtPciDevice device;
    std::deque<std::uint16_t> pending;  // doorbells waiting for this side
    friend bool operator==(const ChannelEndpoint&, const ChannelEndpoint&) = default;
};

/// Shared pages between two cells. Ledger ownership of the backing memory
/// stays with ends[0]; ends[1] gets an access grant.
struct Channel {
    ChannelId id = 0;
    std::array<ChannelEndpoint, 2> ends;
    AddrRange region;
    std::uint16_t vectors = 1;
    std::vector<std::uint8_t> buffer;

    /// 0 or 1, or -1 if `cell` is not an endpoint.
    int endpoint_index(CellId cell) const;
    friend bool operator==(const Channel&, const Channel&) = default;
};

struct ChannelTraffic {
    std::uint64_t time_ns = 0;
    ChannelId channel = 0;
    int direction = 0;  // 0: ends[0] -> ends[1], 1: reverse
    std::uint16_t vector = 0;
    std::uint64_t len = 0;
    friend bool operator==(const ChannelTraffic&, const ChannelTraffic&) = default;
};

struct ChannelTable {
    std::map<ChannelId, Channel> channels;
    std::vector<ChannelTraffic> traffic;
    ChannelId next_id = 1;
    friend bool operator==(const ChannelTable&, const ChannelTable&) = default;
};

/// Carves `size` bytes out of cell `a`'s memory (top of its highest region
/// with room) and maps it into both cells. Errors: NoSuchCell, SelfChannel,
/// BadSize (unaligned, zero, or no room left in `a`), BadVector (zero).
ChannelId create_channel(Hypervisor& hv, CellId a, CellId b, std::uint64_t size, std::uint16_t vectors);

/// Writes `payload` into the shared buffer and rings `vector` at the peer.
/// The returned delivery is the peer's virtual interrupt when the peer is
/// Running; otherwise the doorbell only queues.
///
/// Errors: NoSuchChannel, NotEndpoint, OutOfRegion, BadVector, BadState
/// (sender not Running).
std::optional<IrqDelivery> send(Hypervisor& hv, ChannelId ch, CellId from, std::uint64_t offset,
                                std::span<const std::uint8_t> payload, std::uint16_t vector);

/// Drains pending doorbells for `cell` in arrival order.
std::vector<std::uint16_t> poll(Hypervisor& hv, ChannelId ch, CellId cell);

std::vector<std::uint8_t> read_shared(const Hypervisor& hv, ChannelId ch, CellId cell, std::uint64_t offset,
                                      std::uint64_t len);

/// Config-space read through the emulated host controller. Offset 0 of a
/// cell's own virtual device yields (device_id << 16) | vendor_id; anything
/// not present reads all-ones. Errors: BadAlignment, BadState.
std::uint32_t pci_cfg_read(Hypervisor& hv, CellId cell, std::uint16_t bdf, std::uint16_t offset);

/// JSON-lines dump: {"t":..,"ch":..,"dir":"a->b","vector":..,"len":..}
std::string export_traffic_jsonl(const ChannelTable& table);

}  // namespace cellsim

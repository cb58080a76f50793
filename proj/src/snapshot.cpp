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

#include <fmt/format.h>

#include "bytes.hpp"
#include "cellsim/error.hpp"
#include "cellsim/hypervisor.hpp"

namespace cellsim {

namespace {

constexpr std::uint32_t kSnapshotMagic = 0x4A485353;  // "JHSS"
constexpr std::uint16_t kSnapshotVersion = 1;

template <class E>
E enum_in_range(std::uint8_t v, E last, const char* what) {
    if (v > static_cast<std::uint8_t>(last)) throw Error(Errc::InvariantViolation, fmt::format("bad {} {}", what, v));
    return static_cast<E>(v);
}

}  // namespace

std::vector<std::uint8_t> Hypervisor::snapshot() const {
    bytes::Writer w;
    w.u32(kSnapshotMagic);
    w.u16(kSnapshotVersion);
    w.str(to_text(platform_));
    w.u8(static_cast<std::uint8_t>(state_));
    w.u64(clock_ns_);
    w.u32(next_cell_id_);
    w.u32(static_cast<std::uint32_t>(sensitive_.size()));
    for (const std::string& s : sensitive_) w.str(s);
    w.u64(rng_.seed());
    w.str(rng_.save_state());

    w.u32(static_cast<std::uint32_t>(cells_.size()));
    for (const auto& [id, c] : cells_) {
        w.u32(id);
        w.u8(static_cast<std::uint8_t>(c.state));
        w.blob(emit_binary(c.config));
        w.u64(c.dist_emulations);
        w.u32(static_cast<std::uint32_t>(c.memory_image.size()));
        for (const auto& [addr, page] : c.memory_image) {
            w.u64(addr);
            w.raw(page);
        }
    }

    w.u32(static_cast<std::uint32_t>(ledger_.size()));
    for (const auto& [key, owner] : ledger_.entries()) {
        w.u8(static_cast<std::uint8_t>(key.kind));
        w.u64(key.a);
        w.u64(key.b);
        w.u32(owner);
    }

    w.u32(comm_.next_id);
    w.u32(static_cast<std::uint32_t>(comm_.channels.size()));
    for (const auto& [id, ch] : comm_.channels) {
        w.u32(id);
        w.u64(ch.region.base);
        w.u64(ch.region.size);
        w.u16(ch.vectors);
        w.blob(ch.buffer);
        for (const ChannelEndpoint& e : ch.ends) {
            w.u32(e.cell);
            w.u16(e.device.bdf);
            w.u16(e.device.vendor_id);
            w.u16(e.device.device_id);
            w.u16(e.device.msix_vectors);
            w.u32(static_cast<std::uint32_t>(e.pending.size()));
            for (std::uint16_t v : e.pending) w.u16(v);
        }
    }
    w.u32(static_cast<std::uint32_t>(comm_.traffic.size()));
    for (const ChannelTraffic& t : comm_.traffic) {
        w.u64(t.time_ns);
        w.u32(t.channel);
        w.u8(static_cast<std::uint8_t>(t.direction));
        w.u16(t.vector);
        w.u64(t.len);
    }

    w.u32(static_cast<std::uint32_t>(events_.size()));
    for (const TrapEvent& e : events_) {
        w.u64(e.time_ns);
        w.u32(e.cell);
        w.u8(static_cast<std::uint8_t>(e.cause));
        w.u64(e.value);
        w.str(e.detail);
    }
    return w.take();
}

Hypervisor Hypervisor::restore(std::span<const std::uint8_t> data) {
    bytes::Reader r(data);
    if (r.remaining() < 4) throw Error(Errc::TruncatedRecord, "snapshot shorter than its magic");
    std::uint32_t magic = r.u32();
    if (magic != kSnapshotMagic) throw Error(Errc::BadMagic, fmt::format("bad snapshot magic 0x{:08x}", magic));
    std::uint16_t version = r.u16();
    if (version != kSnapshotVersion) throw Error(Errc::UnsupportedVersion, fmt::format("snapshot version {} unsupported", version));

    MachinePlatform platform = [&] {
        try {
            return build_platform(parse_platform_spec(r.str()));
        } catch (const Error& e) {
            throw Error(Errc::InvariantViolation, std::string("snapshot platform: ") + e.what());
        }
    }();
    Hypervisor hv(std::move(platform));
    hv.state_ = enum_in_range(r.u8(), HvState::Enabled, "hypervisor state");
    hv.clock_ns_ = r.u64();
    hv.next_cell_id_ = r.u32();
    hv.sensitive_.clear();
    for (std::uint32_t n = r.u32(); n > 0; --n) hv.sensitive_.insert(r.str());
    std::uint64_t seed = r.u64();
    hv.rng_ = Rng::restore_state(seed, r.str());

    for (std::uint32_t n = r.u32(); n > 0; --n) {
        Cell c;
        c.id = r.u32();
        c.state = enum_in_range(r.u8(), CellState::Failed, "cell state");
        c.config = load_binary(r.blob());
        c.dist_emulations = r.u64();
        for (std::uint32_t pages = r.u32(); pages > 0; --pages) {
            std::uint64_t addr = r.u64();
            if (addr % kPageSize) throw Error(Errc::InvariantViolation, "unaligned image page");
            auto bytes = r.take(kPageSize);
            c.memory_image.emplace(addr, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
        }
        if (!hv.cells_.emplace(c.id, std::move(c)).second) throw Error(Errc::InvariantViolation, "duplicate cell id");
    }

    for (std::uint32_t n = r.u32(); n > 0; --n) {
        ResourceKey key;
        key.kind = enum_in_range(r.u8(), ResourceKind::Irq, "resource kind");
        key.a = r.u64();
        key.b = r.u64();
        hv.ledger_.set(key, r.u32());
    }

    hv.comm_.next_id = r.u32();
    for (std::uint32_t n = r.u32(); n > 0; --n) {
        Channel ch;
        ch.id = r.u32();
        ch.region.base = r.u64();
        ch.region.size = r.u64();
        ch.vectors = r.u16();
        ch.buffer = r.blob();
        for (ChannelEndpoint& e : ch.ends) {
            e.cell = r.u32();
            e.device.bdf = r.u16();
            e.device.vendor_id = r.u16();
            e.device.device_id = r.u16();
            e.device.msix_vectors = r.u16();
            for (std::uint32_t p = r.u32(); p > 0; --p) e.pending.push_back(r.u16());
            if (!hv.cells_.contains(e.cell)) throw Error(Errc::InvariantViolation, "channel endpoint without a cell");
        }
        if (ch.buffer.size() != ch.region.size) throw Error(Errc::InvariantViolation, "channel buffer size mismatch");
        hv.comm_.channels.emplace(ch.id, std::move(ch));
    }
    for (std::uint32_t n = r.u32(); n > 0; --n) {
        ChannelTraffic t;
        t.time_ns = r.u64();
        t.channel = r.u32();
        t.direction = r.u8();
        t.vector = r.u16();
        t.len = r.u64();
        hv.comm_.traffic.push_back(t);
    }

    for (std::uint32_t n = r.u32(); n > 0; --n) {
        TrapEvent e;
        e.time_ns = r.u64();
        e.cell = r.u32();
        e.cause = enum_in_range(r.u8(), CauseKind::Management, "event cause");
        e.value = r.u64();
        e.detail = r.str();
        hv.events_.push_back(std::move(e));
    }
    if (!r.done()) throw Error(Errc::InvariantViolation, "trailing bytes after snapshot");
    if (std::string problem = hv.audit(); !problem.empty())
        throw Error(Errc::InvariantViolation, "snapshot fails audit: " + problem);
    return hv;
}

}  // namespace cellsim

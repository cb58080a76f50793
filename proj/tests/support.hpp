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

// Shared helpers for the unit and acceptance tests: error-code assertions
// and random generators for platforms, partitions and configs.
#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "cellsim/cellconfig.hpp"
#include "cellsim/error.hpp"
#include "cellsim/hypervisor.hpp"
#include "cellsim/machine.hpp"
#include "cellsim/rng.hpp"

namespace testsupport {

using namespace cellsim;

/// Runs `f` and returns the error code it threw, or nullopt.
template <class F>
std::optional<Errc> errc_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline std::string errc_str(std::optional<Errc> e) { return e ? std::string(errc_name(*e)) : "no error"; }

#define CHECK_ERRC(expr, code)                                                            \
    do {                                                                                  \
        auto got_ = ::testsupport::errc_of([&] { (void)(expr); });                        \
        CHECK_MESSAGE(got_ == (code), "expected ", ::cellsim::errc_name(code), ", got ", \
                      ::testsupport::errc_str(got_));                                     \
    } while (0)

inline std::string random_name(Rng& rng, std::size_t max_len) {
    static constexpr char kChars[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
    const std::size_t len = 1 + rng.below(max_len);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += kChars[rng.below(sizeof kChars - 1)];
    return s;
}

inline PermSet random_perms(Rng& rng) { return PermSet::from_bits(static_cast<std::uint32_t>(rng.below(16))); }

/// Disjoint page-aligned ranges laid out upward from `base`, with gaps.
inline std::vector<AddrRange> disjoint_ranges(Rng& rng, std::size_t n, std::uint64_t base) {
    std::vector<AddrRange> out;
    std::uint64_t cursor = base;
    for (std::size_t i = 0; i < n; ++i) {
        cursor += rng.below(4) * kPageSize;
        const std::uint64_t size = (1 + rng.below(64)) * kPageSize;
        out.push_back({cursor, size});
        cursor += size;
    }
    return out;
}

/// A random valid platform: 1-8 CPUs, 1-6 RAM regions, a few MMIO windows
/// (always a gic-dist), PCI functions, I/O port ranges and IRQ lines.
inline PlatformSpec random_platform_spec(Rng& rng) {
    PlatformSpec spec;
    spec.name = "rand-" + random_name(rng, 8);
    spec.has_pci = rng.below(2) == 1;
    spec.gic = rng.below(2) ? GicVersion::V2 : GicVersion::V3;
    const auto cpus = 1 + rng.below(8);
    for (std::uint32_t c = 0; c < cpus; ++c) spec.resources.push_back(Cpu{c});
    for (const AddrRange& r : disjoint_ranges(rng, 1 + rng.below(6), 0x8000'0000))
        spec.resources.push_back(MemRegion{r.base, r.size, PermSet{Perm::Read, Perm::Write, Perm::Execute, Perm::Dma}});
    const auto mmio = disjoint_ranges(rng, 1 + rng.below(4), 0x4000'0000);
    for (std::size_t i = 0; i < mmio.size(); ++i)
        spec.resources.push_back(MmioDevice{i == 0 ? "gic-dist" : "dev" + std::to_string(i), mmio[i].base, mmio[i].size});
    std::vector<std::uint16_t> bdfs;
    for (std::uint64_t i = 0, n = rng.below(4); i < n; ++i) {
        auto bdf = static_cast<std::uint16_t>(rng.below(0x10000));
        if (std::find(bdfs.begin(), bdfs.end(), bdf) == bdfs.end()) {
            bdfs.push_back(bdf);
            spec.resources.push_back(PciDevice{bdf});
        }
    }
    std::uint32_t port = 0x100;
    for (std::uint64_t i = 0, n = rng.below(4); i < n; ++i) {
        auto len = static_cast<std::uint16_t>(1 + rng.below(16));
        spec.resources.push_back(IoPortRange{static_cast<std::uint16_t>(port), len});
        port += len + static_cast<std::uint32_t>(rng.below(16));
    }
    std::uint32_t irq = 32;
    for (std::uint64_t i = 0, n = 1 + rng.below(6); i < n; ++i) {
        spec.resources.push_back(IrqLine{irq});
        irq += 1 + static_cast<std::uint32_t>(rng.below(4));
    }
    return spec;
}

/// Config naming every resource of `platform` (a root-cell config).
inline CellConfig whole_platform_config(const MachinePlatform& platform, std::string name = "root") {
    CellConfig cfg;
    cfg.name = std::move(name);
    for (const Resource& r : platform.resources()) {
        if (const auto* c = std::get_if<Cpu>(&r)) cfg.cpus.insert(c->index);
        else if (const auto* m = std::get_if<MemRegion>(&r)) cfg.mem.push_back(*m);
        else if (const auto* q = std::get_if<IrqLine>(&r)) cfg.irqs.insert(q->number);
        else cfg.devices.push_back(r);
    }
    normalize(cfg);
    return cfg;
}

/// Splits the platform's resources at random among `parts` cells. Cell i
/// gets at least one CPU and one region when available; leftovers stay with
/// the root. Returns fewer configs when the platform is too small.
inline std::vector<CellConfig> random_partition(const MachinePlatform& platform, Rng& rng, std::size_t parts) {
    std::vector<std::uint32_t> cpus;
    std::vector<MemRegion> mems;
    std::vector<Resource> devs;
    std::vector<std::uint32_t> irqs;
    for (const Resource& r : platform.resources()) {
        if (const auto* c = std::get_if<Cpu>(&r)) cpus.push_back(c->index);
        else if (const auto* m = std::get_if<MemRegion>(&r)) mems.push_back(*m);
        else if (const auto* q = std::get_if<IrqLine>(&r)) irqs.push_back(q->number);
        else if (!(std::holds_alternative<MmioDevice>(r) && std::get<MmioDevice>(r).name == "gic-dist")) devs.push_back(r);
    }
    // Shuffle with the test stream so partitions vary.
    auto shuffle = [&](auto& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    };
    shuffle(cpus);
    shuffle(mems);
    shuffle(devs);
    shuffle(irqs);
    // Root keeps one CPU and one region if it can.
    const std::size_t usable = std::min({parts, cpus.size() > 1 ? cpus.size() - 1 : 0, mems.size() > 1 ? mems.size() - 1 : 0});
    std::vector<CellConfig> out(usable);
    for (std::size_t i = 0; i < usable; ++i) {
        out[i].name = "cell" + std::to_string(i + 1);
        out[i].cpus.insert(cpus[i]);
        MemRegion m = mems[i];
        m.flags = PermSet{Perm::Read, Perm::Write};
        out[i].mem.push_back(m);
    }
    if (usable == 0) return out;
    for (std::size_t i = usable; i + 1 < cpus.size(); ++i)
        if (rng.below(2)) out[rng.below(usable)].cpus.insert(cpus[i]);
    for (std::size_t i = usable; i + 1 < mems.size(); ++i)
        if (rng.below(2)) {
            MemRegion m = mems[i];
            m.flags = PermSet{Perm::Read, Perm::Write};
            out[rng.below(usable)].mem.push_back(m);
        }
    for (const Resource& d : devs)
        if (rng.below(2)) out[rng.below(usable)].devices.push_back(d);
    for (std::uint32_t q : irqs)
        if (rng.below(2)) out[rng.below(usable)].irqs.insert(q);
    for (auto& c : out) normalize(c);
    return out;
}

/// A random self-consistent config, not tied to any platform.
inline CellConfig random_config(Rng& rng) {
    CellConfig cfg;
    cfg.name = random_name(rng, kMaxCellName);
    for (std::uint64_t i = 0, n = 1 + rng.below(8); i < n; ++i) cfg.cpus.insert(static_cast<std::uint32_t>(rng.below(64)));
    for (const AddrRange& r : disjoint_ranges(rng, 1 + rng.below(5), rng.below(1u << 20) * kPageSize))
        cfg.mem.push_back(MemRegion{r.base, r.size, random_perms(rng)});
    for (const AddrRange& r : disjoint_ranges(rng, rng.below(4), 0x1'0000'0000 + rng.below(1u << 20) * kPageSize))
        cfg.devices.push_back(MmioDevice{random_name(rng, kMaxDeviceName), r.base, r.size});
    std::vector<std::uint16_t> bdfs;
    for (std::uint64_t i = 0, n = rng.below(3); i < n; ++i) {
        auto bdf = static_cast<std::uint16_t>(rng.below(0x10000));
        if (std::find(bdfs.begin(), bdfs.end(), bdf) == bdfs.end()) {
            bdfs.push_back(bdf);
            cfg.devices.push_back(PciDevice{bdf});
        }
    }
    std::uint32_t port = static_cast<std::uint32_t>(rng.below(0x8000));
    for (std::uint64_t i = 0, n = rng.below(3); i < n; ++i) {
        auto len = static_cast<std::uint16_t>(1 + rng.below(64));
        cfg.devices.push_back(IoPortRange{static_cast<std::uint16_t>(port), len});
        port += len + static_cast<std::uint32_t>(rng.below(32));
    }
    for (std::uint64_t i = 0, n = rng.below(6); i < n; ++i) cfg.irqs.insert(static_cast<std::uint32_t>(rng.below(1024)));
    std::vector<std::string> peers;
    for (std::uint64_t i = 0, n = rng.below(3); i < n; ++i) {
        std::string peer = random_name(rng, kMaxCellName);
        if (peer == cfg.name || std::find(peers.begin(), peers.end(), peer) != peers.end()) continue;
        peers.push_back(peer);
        cfg.comm.push_back(CommDecl{peer, (1 + rng.below(16)) * kPageSize, static_cast<std::uint16_t>(1 + rng.below(8))});
    }
    switch (rng.below(4)) {
        case 0: cfg.workload = {WorkloadKind::Idle, {}}; break;
        case 1: cfg.workload = {WorkloadKind::Stress, {}}; break;
        case 2: cfg.workload = {WorkloadKind::LatencyResponder, {}}; break;
        default: cfg.workload = {WorkloadKind::Script, "scripts/" + random_name(rng, 20) + ".wl"}; break;
    }
    normalize(cfg);
    return cfg;
}

}  // namespace testsupport

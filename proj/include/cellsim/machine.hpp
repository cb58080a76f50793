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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellsim/resource.hpp"

namespace cellsim {

class Hypervisor;
using CellId = std::uint32_t;

/// shift + optional log-normal term, in microseconds. With `lognormal` off
/// the distribution is the point mass at `shift`.
struct DistParams {
    double shift_us = 0.0;
    bool lognormal = false;
    double mu_log = 0.0;
    double sigma_log = 0.0;

    friend bool operator==(const DistParams&, const DistParams&) = default;
};

struct BusModel {
    double base_latency_us = 0.45;
    DistParams hv_overhead{0.70, true, -2.3, 0.6};
    DistParams contention{0.0, true, -0.08, 0.40};
    double contention_prob = 0.10;
    /// Uniform +/- half a capture tick added to bare-metal samples before
    /// quantization.
    bool phase_jitter = true;

    friend bool operator==(const BusModel&, const BusModel&) = default;
};

void check_bus_model(const BusModel& bus);

enum class GicVersion : std::uint8_t { V2 = 2, V3 = 3 };

/// Unvalidated platform description, as read from a description file or preset.
struct PlatformSpec {
    std::string name;
    std::vector<Resource> resources;
    bool has_pci = false;
    GicVersion gic = GicVersion::V2;
    BusModel bus;
};

/// A validated platform. Immutable after build_platform().
class MachinePlatform {
public:
    const std::string& name() const { return name_; }
    const std::vector<Resource>& resources() const { return resources_; }
    bool has_pci() const { return has_pci_; }
    GicVersion gic_version() const { return gic_; }
    const BusModel& bus() const { return bus_; }

    std::uint32_t cpu_count() const { return cpu_count_; }
    bool contains(const ResourceKey& key) const;
    const Resource* find(const ResourceKey& key) const;

    /// Memory or MMIO resource whose range fully contains [addr, addr+len).
    const Resource* find_containing(std::uint64_t addr, std::uint64_t len) const;
    const Resource* find_io_containing(std::uint32_t port, std::uint32_t len) const;

    /// The MMIO window named "gic-dist", if the platform has one.
    std::optional<MmioDevice> gic_distributor() const;

    friend bool operator==(const MachinePlatform& a, const MachinePlatform& b) {
        return a.name_ == b.name_ && a.resources_ == b.resources_ && a.has_pci_ == b.has_pci_ &&
               a.gic_ == b.gic_ && a.bus_ == b.bus_;
    }

private:
    friend MachinePlatform build_platform(const PlatformSpec& spec);

    std::string name_;
    std::vector<Resource> resources_;
    bool has_pci_ = false;
    GicVersion gic_ = GicVersion::V2;
    BusModel bus_;
    std::uint32_t cpu_count_ = 0;
    // sorted by base; indices into resources_
    std::vector<std::size_t> ranges_;
};

/// Validates and freezes a platform description.
///
/// Errors: Overlap (two memory/MMIO ranges intersect), EmptyCpuSet,
/// DuplicateIrq, InvalidArgument (misaligned region, non-contiguous CPU
/// indices, duplicate device, bad bus parameters).
MachinePlatform build_platform(const PlatformSpec& spec);

/// Line-based platform description:
///
///     platform "jetson-tk1"
///     gic v2
///     has-pci no
///     cpu 0-3
///     mem 0x80000000 0x10000000 rwxd
///     mmio gpio 0x6000d000 0x1000
///     pci 0x0008
///     ioport 0x3f8 0x8
///     irq 32-160
///     bus base=0.45 contention-prob=0.10 jitter=on
///     overhead shift=0.70 lognormal=-2.3,0.6
///     contention shift=0 lognormal=-0.08,0.40
///
/// Throws SyntaxError on malformed input.
PlatformSpec parse_platform_spec(std::string_view text);
std::string to_text(const MachinePlatform& platform);

PlatformSpec jetson_tk1_spec();

/// Built-in presets by name ("jetson-tk1"). Throws Error(InvalidArgument).
MachinePlatform platform_preset(std::string_view name);

struct LoadLevel {
    bool stressed = false;
};

/// Whether any Running cell other than `measured` declares a stress workload.
LoadLevel bus_load(const Hypervisor& hv, CellId measured);

}  // namespace cellsim

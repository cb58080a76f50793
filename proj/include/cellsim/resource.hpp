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

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace cellsim {

inline constexpr std::uint64_t kPageSize = 4096;

enum class Perm : std::uint32_t {
    Read = 1u << 0,
    Write = 1u << 1,
    Execute = 1u << 2,
    Dma = 1u << 3,
};

/// Subset of {read, write, execute, dma}. The bit layout matches the `flags`
/// word of the binary cell format.
class PermSet {
public:
    static constexpr std::uint32_t kAllBits = 0xf;

    constexpr PermSet() = default;
    constexpr PermSet(std::initializer_list<Perm> perms) {
        for (Perm p : perms) bits_ |= static_cast<std::uint32_t>(p);
    }

    /// Throws Error(InvalidArgument) for bits outside kAllBits.
    static PermSet from_bits(std::uint32_t bits);
    /// Parses "rwxd"-style strings (any order, no repeats); "-" is the empty set.
    static PermSet parse(std::string_view text);

    constexpr std::uint32_t bits() const { return bits_; }
    constexpr bool has(Perm p) const { return (bits_ & static_cast<std::uint32_t>(p)) != 0; }
    constexpr bool contains(PermSet other) const { return (other.bits_ & ~bits_) == 0; }
    std::string str() const;

    friend constexpr bool operator==(PermSet, PermSet) = default;

private:
    std::uint32_t bits_ = 0;
};

struct Cpu {
    std::uint32_t index = 0;
    friend bool operator==(const Cpu&, const Cpu&) = default;
};

struct MemRegion {
    std::uint64_t base = 0;
    std::uint64_t size = 0;
    PermSet flags;
    std::uint64_t end() const { return base + size; }
    friend bool operator==(const MemRegion&, const MemRegion&) = default;
};

struct MmioDevice {
    std::string name;
    std::uint64_t base = 0;
    std::uint64_t size = 0;
    std::uint64_t end() const { return base + size; }
    friend bool operator==(const MmioDevice&, const MmioDevice&) = default;
};

struct PciDevice {
    std::uint16_t bdf = 0;
    friend bool operator==(const PciDevice&, const PciDevice&) = default;
};

struct IoPortRange {
    std::uint16_t base = 0;
    std::uint16_t len = 0;
    std::uint32_t end() const { return std::uint32_t{base} + len; }
    friend bool operator==(const IoPortRange&, const IoPortRange&) = default;
};

struct IrqLine {
    std::uint32_t number = 0;
    friend bool operator==(const IrqLine&, const IrqLine&) = default;
};

using Resource = std::variant<Cpu, MemRegion, MmioDevice, PciDevice, IoPortRange, IrqLine>;

enum class ResourceKind : std::uint8_t { Cpu, Mem, Mmio, Pci, IoPort, Irq };

/// Identity of a resource for ownership purposes. Memory permissions and
/// device names are attributes, not identity: a cell that asks for
/// `mem 0x90000000 0x100000 r` asks for the same region the platform lists
/// as `rwxd`.
struct ResourceKey {
    ResourceKind kind = ResourceKind::Cpu;
    std::uint64_t a = 0;
    std::uint64_t b = 0;

    friend auto operator<=>(const ResourceKey&, const ResourceKey&) = default;
};

ResourceKey key_of(const Resource& r);
ResourceKind kind_of(const Resource& r);

/// Human-readable one-liner, e.g. "cpu 2", "mem 0x90000000+0x100000".
std::string describe(const Resource& r);
std::string describe(const ResourceKey& k);

/// Checks the per-resource invariants (non-empty, page aligned, no address
/// overflow, port range inside the 64 KiB I/O space). Throws
/// Error(InvalidArgument) with a message naming the resource.
void check_resource(const Resource& r);

bool is_address_range(const Resource& r);

/// [base, base + size) for memory and MMIO resources.
struct AddrRange {
    std::uint64_t base = 0;
    std::uint64_t size = 0;
    std::uint64_t end() const { return base + size; }
    bool contains(std::uint64_t addr, std::uint64_t len) const {
        return addr >= base && len <= size && addr - base <= size - len;
    }
    bool overlaps(const AddrRange& o) const { return base < o.end() && o.base < end(); }
    friend bool operator==(const AddrRange&, const AddrRange&) = default;
};

AddrRange addr_range(const Resource& r);

bool is_valid_name(std::string_view name);

}  // namespace cellsim

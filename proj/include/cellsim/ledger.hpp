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
#include <map>
#include <optional>
#include <vector>

#include "cellsim/resource.hpp"

namespace cellsim {

using CellId = std::uint32_t;
inline constexpr CellId kRootCell = 0;

class MachinePlatform;

/// Exclusive resource -> cell map. While the hypervisor is enabled the key
/// set is exactly the platform's resource set.
class OwnershipLedger {
public:
    /// Hands every platform resource to `owner`, replacing prior contents.
    void assign_all(const MachinePlatform& platform, CellId owner);
    void clear() { owner_.clear(); }

    bool empty() const { return owner_.empty(); }
    std::size_t size() const { return owner_.size(); }

    std::optional<CellId> owner(const ResourceKey& key) const;

    /// Moves `key` from `from` to `to`. Throws Error(InvariantViolation) if
    /// the current owner is not `from`.
    void transfer(const ResourceKey& key, CellId from, CellId to);

    /// Returns every resource held by `cell` to `to`. Returns the count moved.
    std::size_t release_all(CellId cell, CellId to);

    std::vector<ResourceKey> owned_by(CellId cell) const;
    const std::map<ResourceKey, CellId>& entries() const { return owner_; }

    /// Used by snapshot restore; no checks.
    void set(const ResourceKey& key, CellId owner) { owner_[key] = owner; }

    /// Key set equals platform resource set.
    bool conserves(const MachinePlatform& platform) const;

    friend bool operator==(const OwnershipLedger&, const OwnershipLedger&) = default;

private:
    std::map<ResourceKey, CellId> owner_;
};

}  // namespace cellsim

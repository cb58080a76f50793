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

#include "cellsim/ledger.hpp"

#include <fmt/format.h>

#include "cellsim/error.hpp"
#include "cellsim/machine.hpp"

namespace cellsim {

void OwnershipLedger::assign_all(const MachinePlatform& platform, CellId owner) {
    owner_.clear();
    for (const Resource& r : platform.resources()) owner_.emplace(key_of(r), owner);
}

std::optional<CellId> OwnershipLedger::owner(const ResourceKey& key) const {
    auto it = owner_.find(key);
    if (it == owner_.end()) return std::nullopt;
    return it->second;
}

void OwnershipLedger::transfer(const ResourceKey& key, CellId from, CellId to) {
    auto it = owner_.find(key);
    if (it == owner_.end()) throw Error(Errc::InvariantViolation, describe(key) + " is not in the ledger");
    if (it->second != from)
        throw Error(Errc::InvariantViolation,
                    fmt::format("{} is owned by cell {}, not cell {}", describe(key), it->second, from));
    it->second = to;
}

std::size_t OwnershipLedger::release_all(CellId cell, CellId to) {
    std::size_t n = 0;
    for (auto& [key, owner] : owner_) {
        if (owner == cell) {
            owner = to;
            ++n;
        }
    }
    return n;
}

std::vector<ResourceKey> OwnershipLedger::owned_by(CellId cell) const {
    std::vector<ResourceKey> keys;
    for (const auto& [key, owner] : owner_)
        if (owner == cell) keys.push_back(key);
    return keys;
}

bool OwnershipLedger::conserves(const MachinePlatform& platform) const {
    if (owner_.size() != platform.resources().size()) return false;
    for (const Resource& r : platform.resources())
        if (!owner_.contains(key_of(r))) return false;
    return true;
}

}  // namespace cellsim

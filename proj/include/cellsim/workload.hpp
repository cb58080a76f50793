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
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cellsim/hypervisor.hpp"

namespace cellsim {

/// One line of a workload script:
///
///     read 0x90000000 4       # guest load, width defaults to 4
///     write 0x90000010 8 *100 # repeated 100 times
///     ioread 0x3f8 1
///     iowrite 0x3f8
///     instr cpuid
///     dist 0x100 *10000       # GIC distributor write at window offset
struct ScriptOp {
    enum class Kind : std::uint8_t { Read, Write, IoRead, IoWrite, Instr, Dist };
    Kind kind = Kind::Read;
    std::uint64_t addr = 0;
    std::uint8_t width = 4;
    std::string name;
    std::uint64_t repeat = 1;

    friend bool operator==(const ScriptOp&, const ScriptOp&) = default;
};

/// Throws SyntaxError.
std::vector<ScriptOp> parse_script(std::string_view text);

struct StepStats {
    std::uint64_t direct = 0;
    std::uint64_t emulated = 0;
    std::uint64_t violations = 0;

    StepStats& operator+=(const StepStats& o) {
        direct += o.direct;
        emulated += o.emulated;
        violations += o.violations;
        return *this;
    }
};

/// Turn-based guest execution: each step lets every Running cell perform one
/// access according to its declared workload.
///
///   idle               nothing
///   stress             sweeps writes across its own writable memory
///   latency-responder  polls its own readable memory
///   script <path>      next script operation; idles once the script ends
class WorkloadRunner {
public:
    using ScriptLoader = std::function<std::vector<ScriptOp>(const std::string& path)>;

    explicit WorkloadRunner(Hypervisor& hv);
    WorkloadRunner(Hypervisor& hv, ScriptLoader loader);

    /// Overrides the script of `cell` regardless of its declared workload.
    void set_script(CellId cell, std::vector<ScriptOp> ops);

    StepStats step();
    StepStats run(std::uint64_t steps);

private:
    struct Cursor {
        std::vector<ScriptOp> ops;
        std::size_t index = 0;
        std::uint64_t done_in_op = 0;
        std::uint64_t sweep = 0;
        bool loaded = false;
    };

    StepStats step_cell(const Cell& cell, Cursor& cur);
    static StepStats tally(AccessOutcome o);

    Hypervisor& hv_;
    ScriptLoader loader_;
    std::map<CellId, Cursor> cursors_;
};

std::vector<ScriptOp> load_script_file(const std::string& path);

}  // namespace cellsim
